#ifndef MMFUSION_EXPERIMENT_HPP
#define MMFUSION_EXPERIMENT_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mmfusion/data.hpp"
#include "mmfusion/metrics.hpp"
#include "mmfusion/models.hpp"
#include "mmfusion/optim.hpp"

namespace mmfusion {

struct DataConfig {
    std::string source = "synthetic";  // synthetic | icub | container
    SyntheticConfig synthetic;
    std::string icub_root;
    std::string container_dir;
    // Write the (pre-corruption, pre-normalization) splits as binary
    // containers under <out>/splits.
    bool export_splits = false;
};

struct ExperimentConfig {
    std::uint64_t seed = 0;
    std::string out = "run_out";
    unsigned heatmap_zoom = 8;
    DataConfig data;
    std::string corruption = "none";  // none | cam_left | cam_right | cam_rs | depth
    std::vector<std::string> experiments = {"all"};
    ModelTrainConfig train;
};

// Flag overrides applied after the file is parsed.
struct CliOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<unsigned> heatmap_zoom;
};

ExperimentConfig default_config();
std::string config_to_json(const ExperimentConfig& cfg);

// Strict parse: unknown keys, wrong types and invalid values all raise a
// config error naming the offending field. Nothing touches the filesystem.
ExperimentConfig parse_config_json(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);
void validate_config(const ExperimentConfig& cfg);

void write_history_csv(const std::vector<EpochStats>& history, const std::string& path);

// Prepares data, trains the selected models, and writes metrics.csv,
// per-model confusion CSVs, heatmaps, checkpoints and loss histories under
// cfg.out. Returns the metrics table rows in file order.
std::vector<MetricsRow> run_experiment(const ExperimentConfig& cfg);

// Parse + override + validate + run.
std::vector<MetricsRow> run_experiment_file(const std::string& config_path,
                                            const CliOverrides& overrides);

}  // namespace mmfusion

#endif
