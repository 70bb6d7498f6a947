#include <CLI11.hpp>

#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "mmfusion/errors.hpp"
#include "mmfusion/experiment.hpp"

namespace {

void print_table(const std::vector<mmfusion::MetricsRow>& rows) {
    std::cout << std::left << std::setw(22) << "model" << std::right << std::setw(10)
              << "accuracy" << std::setw(11) << "precision" << std::setw(9) << "recall"
              << std::setw(9) << "f1" << std::setw(8) << "epochs" << "\n";
    std::cout << std::fixed << std::setprecision(4);
    for (const mmfusion::MetricsRow& r : rows) {
        std::cout << std::left << std::setw(22) << r.model << std::right << std::setw(10)
                  << r.accuracy << std::setw(11) << r.precision_weighted << std::setw(9)
                  << r.recall_weighted << std::setw(9) << r.f1_weighted << std::setw(8)
                  << r.epochs_ran << "\n";
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multimodal RGB-D object recognition experiments"};
    app.require_subcommand(0, 1);

    bool print_default = false;
    app.add_flag("--print-default-config", print_default,
                 "Print the default configuration as JSON and exit");

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<unsigned> zoom;
    CLI::App* run = app.add_subcommand("run", "Run the experiments described by a config");
    run->add_option("config", config_path, "Path to the JSON config file")->required();
    run->add_option("--seed", seed, "Override the config seed");
    run->add_option("--out", out, "Override the output directory");
    run->add_option("--heatmap-zoom", zoom, "Override the heatmap zoom factor");

    CLI11_PARSE(app, argc, argv);

    if (print_default) {
        std::cout << mmfusion::config_to_json(mmfusion::default_config());
        return 0;
    }
    if (!run->parsed()) {
        std::cout << app.help();
        return 0;
    }

    try {
        mmfusion::CliOverrides overrides;
        overrides.seed = seed;
        overrides.out = out;
        overrides.heatmap_zoom = zoom;
        print_table(mmfusion::run_experiment_file(config_path, overrides));
        return 0;
    } catch (const mmfusion::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const mmfusion::TrainingError& e) {
        std::cerr << "training error: " << e.what() << "\n";
        return 3;
    } catch (const mmfusion::IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return 4;
    } catch (const mmfusion::IngestionError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return 4;
    } catch (const mmfusion::FormatError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return 4;
    } catch (const mmfusion::IncompatibilityError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
