#include "mmfusion/experiment.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "mmfusion/checkpoint.hpp"
#include "mmfusion/errors.hpp"
#include "mmfusion/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace mmfusion {

namespace {

const char* kSelectors[] = {"unimodal-left", "unimodal-right", "unimodal-rs",
                            "unimodal-depth", "decision-fusion", "intermediate-fusion",
                            "all"};

[[noreturn]] void bad_field(const std::string& field, const std::string& why) {
    throw ConfigError("config field '" + field + "': " + why);
}

std::string qual(const std::string& section, const char* key) {
    return section.empty() ? std::string(key) : section + "." + key;
}

void check_keys(const json& obj, const std::string& section,
                std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) {
        throw ConfigError("config section '" + (section.empty() ? "<root>" : section) +
                          "' must be an object");
    }
    for (const auto& el : obj.items()) {
        bool known = false;
        for (const char* a : allowed) {
            if (el.key() == a) {
                known = true;
                break;
            }
        }
        if (!known) {
            throw ConfigError("unknown config key '" + qual(section, el.key().c_str()) +
                              "'");
        }
    }
}

std::uint64_t get_uint(const json& o, const std::string& sec, const char* key,
                       std::uint64_t def) {
    if (!o.contains(key)) return def;
    const json& v = o.at(key);
    if (!v.is_number_unsigned()) bad_field(qual(sec, key), "must be a nonnegative integer");
    return v.get<std::uint64_t>();
}

double get_double(const json& o, const std::string& sec, const char* key, double def) {
    if (!o.contains(key)) return def;
    const json& v = o.at(key);
    if (!v.is_number()) bad_field(qual(sec, key), "must be a number");
    return v.get<double>();
}

bool get_bool(const json& o, const std::string& sec, const char* key, bool def) {
    if (!o.contains(key)) return def;
    const json& v = o.at(key);
    if (!v.is_boolean()) bad_field(qual(sec, key), "must be true or false");
    return v.get<bool>();
}

std::string get_string(const json& o, const std::string& sec, const char* key,
                       const std::string& def) {
    if (!o.contains(key)) return def;
    const json& v = o.at(key);
    if (!v.is_string()) bad_field(qual(sec, key), "must be a string");
    return v.get<std::string>();
}

}  // namespace

ExperimentConfig default_config() {
    ExperimentConfig cfg;
    cfg.data.synthetic.n_classes = 10;
    cfg.data.synthetic.views_per_class = 72;
    cfg.data.synthetic.complementary = true;
    cfg.data.synthetic.shape_classes = 5;
    cfg.data.synthetic.depth_classes = 2;
    return cfg;
}

std::string config_to_json(const ExperimentConfig& cfg) {
    nlohmann::ordered_json j;
    j["seed"] = cfg.seed;
    j["out"] = cfg.out;
    j["heatmap_zoom"] = cfg.heatmap_zoom;
    j["data"]["source"] = cfg.data.source;
    j["data"]["synthetic"]["n_classes"] = cfg.data.synthetic.n_classes;
    j["data"]["synthetic"]["views_per_class"] = cfg.data.synthetic.views_per_class;
    j["data"]["synthetic"]["complementary"] = cfg.data.synthetic.complementary;
    j["data"]["synthetic"]["shape_classes"] = cfg.data.synthetic.shape_classes;
    j["data"]["synthetic"]["depth_classes"] = cfg.data.synthetic.depth_classes;
    j["data"]["synthetic"]["height"] = cfg.data.synthetic.height;
    j["data"]["synthetic"]["width"] = cfg.data.synthetic.width;
    j["data"]["icub_root"] = cfg.data.icub_root;
    j["data"]["container_dir"] = cfg.data.container_dir;
    j["data"]["export_splits"] = cfg.data.export_splits;
    j["corruption"] = cfg.corruption;
    j["experiments"] = cfg.experiments;
    j["model"]["conv_filters"] = {cfg.train.dims.conv1, cfg.train.dims.conv2,
                                  cfg.train.dims.conv3};
    j["model"]["cnn_dense"] = cfg.train.dims.cnn_dense;
    j["model"]["mlp_hidden"] = cfg.train.dims.mlp_hidden;
    j["model"]["fusion_dense"] = cfg.train.dims.fusion_dense;
    j["train"]["learning_rate"] = cfg.train.adam.learning_rate;
    j["train"]["beta1"] = cfg.train.adam.beta1;
    j["train"]["beta2"] = cfg.train.adam.beta2;
    j["train"]["epsilon"] = cfg.train.adam.epsilon;
    j["train"]["batch_size"] = cfg.train.batch_size;
    j["train"]["max_epochs"] = cfg.train.max_epochs;
    j["train"]["min_delta"] = cfg.train.min_delta;
    j["train"]["cnn_patience"] = cfg.train.cnn_patience;
    j["train"]["mlp_patience"] = cfg.train.mlp_patience;
    j["train"]["fusion_patience"] = cfg.train.fusion_patience;
    return j.dump(2) + "\n";
}

ExperimentConfig parse_config_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    ExperimentConfig cfg = default_config();
    check_keys(j, "", {"seed", "out", "heatmap_zoom", "data", "corruption", "experiments",
                       "model", "train"});
    cfg.seed = get_uint(j, "", "seed", cfg.seed);
    cfg.out = get_string(j, "", "out", cfg.out);
    cfg.heatmap_zoom =
        static_cast<unsigned>(get_uint(j, "", "heatmap_zoom", cfg.heatmap_zoom));
    if (j.contains("data")) {
        const json& d = j.at("data");
        check_keys(d, "data",
                   {"source", "synthetic", "icub_root", "container_dir", "export_splits"});
        cfg.data.source = get_string(d, "data", "source", cfg.data.source);
        cfg.data.icub_root = get_string(d, "data", "icub_root", cfg.data.icub_root);
        cfg.data.container_dir =
            get_string(d, "data", "container_dir", cfg.data.container_dir);
        cfg.data.export_splits =
            get_bool(d, "data", "export_splits", cfg.data.export_splits);
        if (d.contains("synthetic")) {
            const json& s = d.at("synthetic");
            const std::string sec = "data.synthetic";
            check_keys(s, sec, {"n_classes", "views_per_class", "complementary",
                                "shape_classes", "depth_classes", "height", "width"});
            SyntheticConfig& sc = cfg.data.synthetic;
            sc.n_classes = get_uint(s, sec, "n_classes", sc.n_classes);
            sc.views_per_class = get_uint(s, sec, "views_per_class", sc.views_per_class);
            sc.complementary = get_bool(s, sec, "complementary", sc.complementary);
            sc.shape_classes = get_uint(s, sec, "shape_classes", sc.shape_classes);
            sc.depth_classes = get_uint(s, sec, "depth_classes", sc.depth_classes);
            sc.height = get_uint(s, sec, "height", sc.height);
            sc.width = get_uint(s, sec, "width", sc.width);
        }
    }
    cfg.corruption = get_string(j, "", "corruption", cfg.corruption);
    if (j.contains("experiments")) {
        const json& e = j.at("experiments");
        if (!e.is_array()) bad_field("experiments", "must be an array of selector strings");
        cfg.experiments.clear();
        for (const json& v : e) {
            if (!v.is_string()) {
                bad_field("experiments", "must be an array of selector strings");
            }
            cfg.experiments.push_back(v.get<std::string>());
        }
    }
    if (j.contains("model")) {
        const json& m = j.at("model");
        check_keys(m, "model", {"conv_filters", "cnn_dense", "mlp_hidden", "fusion_dense"});
        if (m.contains("conv_filters")) {
            const json& c = m.at("conv_filters");
            if (!c.is_array() || c.size() != 3) {
                bad_field("model.conv_filters", "must be an array of 3 positive integers");
            }
            std::size_t* slots[3] = {&cfg.train.dims.conv1, &cfg.train.dims.conv2,
                                     &cfg.train.dims.conv3};
            for (std::size_t i = 0; i < 3; ++i) {
                if (!c[i].is_number_unsigned() || c[i].get<std::uint64_t>() == 0) {
                    bad_field("model.conv_filters",
                              "must be an array of 3 positive integers");
                }
                *slots[i] = c[i].get<std::size_t>();
            }
        }
        cfg.train.dims.cnn_dense = get_uint(m, "model", "cnn_dense", cfg.train.dims.cnn_dense);
        cfg.train.dims.mlp_hidden =
            get_uint(m, "model", "mlp_hidden", cfg.train.dims.mlp_hidden);
        cfg.train.dims.fusion_dense =
            get_uint(m, "model", "fusion_dense", cfg.train.dims.fusion_dense);
    }
    if (j.contains("train")) {
        const json& t = j.at("train");
        check_keys(t, "train",
                   {"learning_rate", "beta1", "beta2", "epsilon", "batch_size",
                    "max_epochs", "min_delta", "cnn_patience", "mlp_patience",
                    "fusion_patience"});
        cfg.train.adam.learning_rate =
            get_double(t, "train", "learning_rate", cfg.train.adam.learning_rate);
        cfg.train.adam.beta1 = get_double(t, "train", "beta1", cfg.train.adam.beta1);
        cfg.train.adam.beta2 = get_double(t, "train", "beta2", cfg.train.adam.beta2);
        cfg.train.adam.epsilon = get_double(t, "train", "epsilon", cfg.train.adam.epsilon);
        cfg.train.batch_size = get_uint(t, "train", "batch_size", cfg.train.batch_size);
        cfg.train.max_epochs = get_uint(t, "train", "max_epochs", cfg.train.max_epochs);
        cfg.train.min_delta = get_double(t, "train", "min_delta", cfg.train.min_delta);
        cfg.train.cnn_patience =
            get_uint(t, "train", "cnn_patience", cfg.train.cnn_patience);
        cfg.train.mlp_patience =
            get_uint(t, "train", "mlp_patience", cfg.train.mlp_patience);
        cfg.train.fusion_patience =
            get_uint(t, "train", "fusion_patience", cfg.train.fusion_patience);
    }
    validate_config(cfg);
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_json(buf.str());
}

void validate_config(const ExperimentConfig& cfg) {
    if (cfg.out.empty()) bad_field("out", "must not be empty");
    if (cfg.heatmap_zoom < 1 || cfg.heatmap_zoom > 64) {
        bad_field("heatmap_zoom", "must be between 1 and 64");
    }
    const std::string& src = cfg.data.source;
    if (src != "synthetic" && src != "icub" && src != "container") {
        bad_field("data.source", "must be synthetic, icub or container");
    }
    if (src == "icub" && cfg.data.icub_root.empty()) {
        bad_field("data.icub_root", "required when data.source is icub");
    }
    if (src == "container" && cfg.data.container_dir.empty()) {
        bad_field("data.container_dir", "required when data.source is container");
    }
    if (src == "synthetic") {
        const SyntheticConfig& s = cfg.data.synthetic;
        if (s.n_classes < 2) bad_field("data.synthetic.n_classes", "must be at least 2");
        if (s.views_per_class < 1) {
            bad_field("data.synthetic.views_per_class", "must be at least 1");
        }
        if (s.height < 8 || s.width < 8) {
            bad_field("data.synthetic.height", "canvas must be at least 8x8");
        }
        if (s.complementary) {
            if (s.shape_classes < 2 || s.depth_classes < 2) {
                bad_field("data.synthetic.shape_classes",
                          "complementary mode needs shape_classes and depth_classes >= 2");
            }
            if (s.shape_classes * s.depth_classes != s.n_classes) {
                bad_field("data.synthetic.n_classes",
                          "must equal shape_classes * depth_classes in complementary mode");
            }
        }
    }
    if (cfg.corruption != "none" && cfg.corruption != "cam_left" &&
        cfg.corruption != "cam_right" && cfg.corruption != "cam_rs" &&
        cfg.corruption != "depth") {
        bad_field("corruption", "must be none, cam_left, cam_right, cam_rs or depth");
    }
    if (cfg.experiments.empty()) bad_field("experiments", "must not be empty");
    for (const std::string& sel : cfg.experiments) {
        bool known = false;
        for (const char* s : kSelectors) {
            if (sel == s) {
                known = true;
                break;
            }
        }
        if (!known) bad_field("experiments", "unknown selector '" + sel + "'");
        if (std::count(cfg.experiments.begin(), cfg.experiments.end(), sel) > 1) {
            bad_field("experiments", "duplicate selector '" + sel + "'");
        }
    }
    if (cfg.experiments.size() > 1 &&
        std::count(cfg.experiments.begin(), cfg.experiments.end(), "all") > 0) {
        bad_field("experiments", "'all' cannot be combined with other selectors");
    }
    const ModelTrainConfig& t = cfg.train;
    if (!(t.adam.learning_rate > 0.0) || !std::isfinite(t.adam.learning_rate)) {
        bad_field("train.learning_rate", "must be a positive number");
    }
    if (t.adam.beta1 < 0.0 || t.adam.beta1 >= 1.0) {
        bad_field("train.beta1", "must lie in [0, 1)");
    }
    if (t.adam.beta2 < 0.0 || t.adam.beta2 >= 1.0) {
        bad_field("train.beta2", "must lie in [0, 1)");
    }
    if (!(t.adam.epsilon > 0.0)) bad_field("train.epsilon", "must be positive");
    if (t.batch_size < 1) bad_field("train.batch_size", "must be at least 1");
    if (t.min_delta < 0.0 || !std::isfinite(t.min_delta)) {
        bad_field("train.min_delta", "must be a nonnegative number");
    }
    if (t.cnn_patience < 1) bad_field("train.cnn_patience", "must be at least 1");
    if (t.mlp_patience < 1) bad_field("train.mlp_patience", "must be at least 1");
    if (t.fusion_patience < 1) bad_field("train.fusion_patience", "must be at least 1");
    const ModelDims& d = t.dims;
    if (d.conv1 < 1 || d.conv2 < 1 || d.conv3 < 1) {
        bad_field("model.conv_filters", "filter counts must be positive");
    }
    if (d.cnn_dense < 1) bad_field("model.cnn_dense", "must be at least 1");
    if (d.mlp_hidden < 1) bad_field("model.mlp_hidden", "must be at least 1");
    if (d.fusion_dense < 1) bad_field("model.fusion_dense", "must be at least 1");
}

void write_history_csv(const std::vector<EpochStats>& history, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << "epoch,train_loss,val_loss\n";
    out << std::fixed << std::setprecision(6);
    for (std::size_t i = 0; i < history.size(); ++i) {
        out << (i + 1) << ',' << history[i].train_loss << ',' << history[i].val_loss
            << '\n';
    }
    if (!out) throw IoError("failed writing '" + path + "'");
}

namespace {

DatasetSplit prepare_data(const ExperimentConfig& cfg) {
    if (cfg.data.source == "synthetic") {
        std::vector<MultimodalSample> samples =
            generate_multimodal(cfg.data.synthetic, derive_seed(cfg.seed, 40));
        return split_dataset(std::move(samples), derive_seed(cfg.seed, 41));
    }
    if (cfg.data.source == "icub") {
        std::vector<MultimodalSample> samples =
            load_and_preprocess_icub(cfg.data.icub_root);
        return split_dataset(std::move(samples), derive_seed(cfg.seed, 41));
    }
    return read_split_containers(cfg.data.container_dir);
}

MetricsRow to_row(const std::string& name, const EvalReport& rep, std::size_t epochs) {
    MetricsRow row;
    row.model = name;
    row.accuracy = rep.accuracy;
    row.precision_weighted = rep.precision_weighted;
    row.recall_weighted = rep.recall_weighted;
    row.f1_weighted = rep.f1_weighted;
    row.epochs_ran = epochs;
    return row;
}

}  // namespace

std::vector<MetricsRow> run_experiment(const ExperimentConfig& cfg) {
    validate_config(cfg);

    bool want_uni[4] = {false, false, false, false};
    bool want_decision = false;
    bool want_intermediate = false;
    for (const std::string& sel : cfg.experiments) {
        if (sel == "all") {
            want_uni[0] = want_uni[1] = want_uni[2] = want_uni[3] = true;
            want_decision = want_intermediate = true;
        } else if (sel == "unimodal-left") {
            want_uni[0] = true;
        } else if (sel == "unimodal-right") {
            want_uni[1] = true;
        } else if (sel == "unimodal-rs") {
            want_uni[2] = true;
        } else if (sel == "unimodal-depth") {
            want_uni[3] = true;
        } else if (sel == "decision-fusion") {
            want_decision = true;
        } else {
            want_intermediate = true;
        }
    }
    bool need_uni[4];
    for (int i = 0; i < 4; ++i) need_uni[i] = want_uni[i] || want_decision;

    ModelTrainConfig tc = cfg.train;
    tc.seed = cfg.seed;

    DatasetSplit split = prepare_data(cfg);

    std::error_code ec;
    fs::create_directories(cfg.out, ec);
    if (ec) throw IoError("cannot create output directory '" + cfg.out + "'");
    const fs::path out_dir(cfg.out);
    {
        std::ofstream cfg_out(out_dir / "config_resolved.json");
        if (!cfg_out) throw IoError("cannot write config copy under '" + cfg.out + "'");
        cfg_out << config_to_json(cfg);
    }
    if (cfg.data.export_splits) {
        write_split_containers(split, (out_dir / "splits").string());
    }
    if (cfg.corruption != "none") {
        split = corrupt_modality(std::move(split), modality_from_string(cfg.corruption),
                                 derive_seed(cfg.seed, 42));
    }
    split = normalize(std::move(split));
    check_no_leakage(split);

    static const Modality kMods[4] = {Modality::cam_left, Modality::cam_right,
                                      Modality::cam_rs, Modality::depth};
    static const char* kNames[4] = {"camera_left", "camera_right", "camera_rs",
                                    "depth_mlp"};

    std::array<std::optional<ExperimentResult>, 4> uni;
    for (int i = 0; i < 4; ++i) {
        if (need_uni[i]) uni[i] = run_unimodal_experiment(split, kMods[i], tc);
    }
    std::optional<EvalReport> decision_rep;
    std::size_t decision_epochs = 0;
    if (want_decision) {
        decision_rep = fuse_and_evaluate(split, {&uni[0]->graph, &uni[1]->graph,
                                                 &uni[2]->graph, &uni[3]->graph});
        for (const auto& u : uni) {
            decision_epochs = std::max(decision_epochs, u->training.epochs_ran());
        }
    }
    std::optional<ExperimentResult> inter;
    if (want_intermediate) inter = run_intermediate_fusion_experiment(split, tc);

    std::vector<MetricsRow> rows;
    auto emit = [&](const std::string& name, const EvalReport& rep, std::size_t epochs) {
        rows.push_back(to_row(name, rep, epochs));
        write_confusion_csv(rep.confusion,
                            (out_dir / ("confusion_" + name + ".csv")).string());
        write_heatmap_pgm(rep.confusion, (out_dir / ("heatmap_" + name + ".pgm")).string(),
                          cfg.heatmap_zoom);
    };
    for (int i = 0; i < 4; ++i) {
        if (want_uni[i]) emit(kNames[i], uni[i]->report, uni[i]->training.epochs_ran());
    }
    if (want_decision) emit("decision_fusion", *decision_rep, decision_epochs);
    if (want_intermediate) {
        emit("intermediate_fusion", inter->report, inter->training.epochs_ran());
    }

    for (int i = 0; i < 4; ++i) {
        if (!uni[i]) continue;
        save_checkpoint(uni[i]->graph, kNames[i], uni[i]->training.history,
                        (out_dir / (std::string(kNames[i]) + ".ckpt")).string());
        write_history_csv(uni[i]->training.history,
                          (out_dir / ("history_" + std::string(kNames[i]) + ".csv")).string());
    }
    if (inter) {
        save_checkpoint(inter->graph, "intermediate_fusion", inter->training.history,
                        (out_dir / "intermediate_fusion.ckpt").string());
        write_history_csv(inter->training.history,
                          (out_dir / "history_intermediate_fusion.csv").string());
    }

    write_metrics_csv(rows, (out_dir / "metrics.csv").string());
    return rows;
}

std::vector<MetricsRow> run_experiment_file(const std::string& config_path,
                                            const CliOverrides& overrides) {
    ExperimentConfig cfg = parse_config_file(config_path);
    if (overrides.seed) cfg.seed = *overrides.seed;
    if (overrides.out) cfg.out = *overrides.out;
    if (overrides.heatmap_zoom) cfg.heatmap_zoom = *overrides.heatmap_zoom;
    validate_config(cfg);
    return run_experiment(cfg);
}

}  // namespace mmfusion
