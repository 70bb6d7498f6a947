#include "mmfusion/models.hpp"

#include <algorithm>
#include <string>

#include "mmfusion/errors.hpp"
#include "mmfusion/rng.hpp"

namespace mmfusion {

namespace {

void check_classes(std::size_t n_classes) {
    if (n_classes < 2) {
        throw ArgumentError("need at least 2 classes, got " + std::to_string(n_classes));
    }
}

// input [1,32,32] -> three conv/relu/pool stages -> flatten -> dense+relu.
// Returns the representation node.
NodeId build_cnn_trunk(Graph& g, NodeId input, const ModelDims& d, Rng& rng) {
    NodeId x = g.conv2d(input, 1, d.conv1, rng);
    x = g.maxpool2x2(g.relu(x));
    x = g.conv2d(x, d.conv1, d.conv2, rng);
    x = g.maxpool2x2(g.relu(x));
    x = g.conv2d(x, d.conv2, d.conv3, rng);
    x = g.maxpool2x2(g.relu(x));
    x = g.flatten(x);
    x = g.dense(x, d.conv3 * 4 * 4, d.cnn_dense, rng);
    return g.relu(x);
}

// input [1,1024] -> three dense+relu hidden layers. Returns the last hidden
// activation.
NodeId build_mlp_trunk(Graph& g, NodeId input, const ModelDims& d, Rng& rng) {
    NodeId x = g.dense(input, 1024, d.mlp_hidden, rng);
    x = g.relu(x);
    x = g.dense(x, d.mlp_hidden, d.mlp_hidden, rng);
    x = g.relu(x);
    x = g.dense(x, d.mlp_hidden, d.mlp_hidden, rng);
    return g.relu(x);
}

}  // namespace

CnnStream build_cnn_stream(std::size_t n_classes, std::uint64_t seed,
                           const ModelDims& dims) {
    check_classes(n_classes);
    CnnStream s;
    Rng rng(seed);
    s.input = s.graph.add_input("image", {1, 32, 32});
    s.repr = build_cnn_trunk(s.graph, s.input, dims, rng);
    s.logits = s.graph.dense(s.repr, dims.cnn_dense, n_classes, rng);
    s.output = s.graph.softmax(s.logits);
    return s;
}

DepthMlp build_depth_mlp(std::size_t n_classes, std::uint64_t seed,
                         const ModelDims& dims) {
    check_classes(n_classes);
    DepthMlp m;
    Rng rng(seed);
    m.input = m.graph.add_input("depth", {1, 1024});
    m.repr = build_mlp_trunk(m.graph, m.input, dims, rng);
    m.logits = m.graph.dense(m.repr, dims.mlp_hidden, n_classes, rng);
    m.output = m.graph.softmax(m.logits);
    return m;
}

FusionGraph build_intermediate_fusion(std::size_t n_classes, std::uint64_t seed,
                                      const ModelDims& dims,
                                      bool identical_camera_init) {
    check_classes(n_classes);
    FusionGraph f;
    Graph& g = f.graph;
    static const char* kCamEntries[3] = {"cam_left", "cam_right", "cam_rs"};
    for (std::size_t t = 0; t < 3; ++t) {
        Rng rng(derive_seed(seed, 1, identical_camera_init ? 0 : t));
        const NodeId in = g.add_input(kCamEntries[t], {1, 32, 32});
        f.cam_reprs[t] = build_cnn_trunk(g, in, dims, rng);
    }
    Rng mrng(derive_seed(seed, 2));
    const NodeId din = g.add_input("depth", {1, 1024});
    f.mlp_repr = build_mlp_trunk(g, din, dims, mrng);

    f.shared = g.concat({f.cam_reprs[0], f.cam_reprs[1], f.cam_reprs[2]});
    f.joint = g.concat({f.shared, f.mlp_repr});

    Rng hrng(derive_seed(seed, 3));
    NodeId x = g.dense(f.joint, 3 * dims.cnn_dense + dims.mlp_hidden,
                       dims.fusion_dense, hrng);
    x = g.relu(x);
    f.logits = g.dense(x, dims.fusion_dense, n_classes, hrng);
    f.output = g.softmax(f.logits);
    return f;
}

Tensor predict_proba(Graph& g, const Graph::Inputs& inputs) {
    return g.forward(inputs);
}

DecisionFusion decision_fusion(const std::vector<Tensor>& probas) {
    if (probas.empty()) {
        throw ArgumentError("decision fusion needs at least one probability vector");
    }
    Tensor fused = probas[0];
    for (std::size_t k = 1; k < probas.size(); ++k) {
        if (!probas[k].same_shape(fused)) {
            throw DimensionError("decision vectors differ in shape: " +
                                 shape_string(fused.shape()) + " vs " +
                                 shape_string(probas[k].shape()));
        }
        for (std::size_t i = 0; i < fused.size(); ++i) fused[i] += probas[k][i];
    }
    DecisionFusion r;
    r.predicted = static_cast<int>(argmax(fused));
    r.fused = std::move(fused);
    return r;
}

std::vector<Example> make_examples(const std::vector<MultimodalSample>& samples,
                                   Modality m) {
    std::vector<Example> out;
    out.reserve(samples.size());
    for (const MultimodalSample& s : samples) {
        const Tensor* t = nullptr;
        const char* entry = "image";
        switch (m) {
            case Modality::cam_left: t = &s.cam_left; break;
            case Modality::cam_right: t = &s.cam_right; break;
            case Modality::cam_rs: t = &s.cam_rs; break;
            case Modality::depth:
                t = &s.depth_vec;
                entry = "depth";
                break;
        }
        out.push_back(Example{{{entry, t}}, s.label});
    }
    return out;
}

std::vector<Example> make_fusion_examples(const std::vector<MultimodalSample>& samples) {
    std::vector<Example> out;
    out.reserve(samples.size());
    for (const MultimodalSample& s : samples) {
        out.push_back(Example{{{"cam_left", &s.cam_left},
                               {"cam_right", &s.cam_right},
                               {"cam_rs", &s.cam_rs},
                               {"depth", &s.depth_vec}},
                              s.label});
    }
    return out;
}

std::size_t n_classes_of(const DatasetSplit& split) {
    int max_label = -1;
    for (const auto* list : {&split.train, &split.validation, &split.test}) {
        for (const MultimodalSample& s : *list) {
            if (s.label < 0) throw ArgumentError("negative sample label");
            max_label = std::max(max_label, s.label);
        }
    }
    if (max_label < 1) {
        throw ArgumentError("split needs samples from at least 2 classes");
    }
    return static_cast<std::size_t>(max_label) + 1;
}

void check_no_leakage(const DatasetSplit& split) {
    std::vector<std::uint64_t> ids;
    ids.reserve(split.train.size() + split.validation.size() + split.test.size());
    for (const auto* list : {&split.train, &split.validation, &split.test}) {
        for (const MultimodalSample& s : *list) ids.push_back(s.sample_id);
    }
    std::sort(ids.begin(), ids.end());
    const auto dup = std::adjacent_find(ids.begin(), ids.end());
    if (dup != ids.end()) {
        throw StateError("sample id " + std::to_string(*dup) +
                         " appears more than once across the split");
    }
}

namespace {

void check_split_ready(const DatasetSplit& split) {
    if (split.train.empty() || split.validation.empty() || split.test.empty()) {
        throw ArgumentError("split has an empty subset");
    }
    check_no_leakage(split);
}

TrainConfig to_train_config(const ModelTrainConfig& cfg, std::size_t patience,
                            std::uint64_t shuffle_seed) {
    TrainConfig tc;
    tc.adam = cfg.adam;
    tc.batch_size = cfg.batch_size;
    tc.max_epochs = cfg.max_epochs;
    tc.min_delta = cfg.min_delta;
    tc.patience = patience;
    tc.seed = shuffle_seed;
    return tc;
}

EvalReport evaluate_on_test(Graph& g, const std::vector<MultimodalSample>& test,
                            Modality m, std::size_t n_classes) {
    std::vector<int> actual;
    std::vector<int> predicted;
    actual.reserve(test.size());
    predicted.reserve(test.size());
    for (const Example& ex : make_examples(test, m)) {
        predicted.push_back(static_cast<int>(argmax(g.forward(ex.inputs))));
    }
    for (const MultimodalSample& s : test) actual.push_back(s.label);
    return evaluate(actual, predicted, n_classes);
}

std::size_t modality_index(Modality m) {
    switch (m) {
        case Modality::cam_left: return 0;
        case Modality::cam_right: return 1;
        case Modality::cam_rs: return 2;
        case Modality::depth: return 3;
    }
    return 3;
}

}  // namespace

ExperimentResult run_unimodal_experiment(const DatasetSplit& split, Modality m,
                                         const ModelTrainConfig& cfg) {
    check_split_ready(split);
    const std::size_t n_classes = n_classes_of(split);
    const std::size_t mi = modality_index(m);
    const bool is_depth = m == Modality::depth;

    Graph graph;
    if (is_depth) {
        graph = std::move(build_depth_mlp(n_classes, derive_seed(cfg.seed, 10, mi),
                                          cfg.dims)
                              .graph);
    } else {
        graph = std::move(build_cnn_stream(n_classes, derive_seed(cfg.seed, 10, mi),
                                           cfg.dims)
                              .graph);
    }
    const TrainConfig tc = to_train_config(cfg, is_depth ? cfg.mlp_patience : cfg.cnn_patience,
                                           derive_seed(cfg.seed, 20, mi));
    const std::vector<Example> train_ex = make_examples(split.train, m);
    const std::vector<Example> val_ex = make_examples(split.validation, m);
    ExperimentResult result;
    result.training = train(graph, train_ex, val_ex, tc);
    result.report = evaluate_on_test(graph, split.test, m, n_classes);
    result.graph = std::move(graph);
    return result;
}

EvalReport fuse_and_evaluate(const DatasetSplit& split, std::array<Graph*, 4> models) {
    check_split_ready(split);
    const std::size_t n_classes = n_classes_of(split);
    std::vector<int> actual;
    std::vector<int> predicted;
    actual.reserve(split.test.size());
    predicted.reserve(split.test.size());
    for (const MultimodalSample& s : split.test) {
        std::vector<Tensor> probas;
        probas.reserve(4);
        probas.push_back(models[0]->forward({{"image", &s.cam_left}}));
        probas.push_back(models[1]->forward({{"image", &s.cam_right}}));
        probas.push_back(models[2]->forward({{"image", &s.cam_rs}}));
        probas.push_back(models[3]->forward({{"depth", &s.depth_vec}}));
        predicted.push_back(decision_fusion(probas).predicted);
        actual.push_back(s.label);
    }
    return evaluate(actual, predicted, n_classes);
}

DecisionFusionOutcome run_decision_fusion_experiment(const DatasetSplit& split,
                                                     const ModelTrainConfig& cfg) {
    DecisionFusionOutcome out;
    out.models.reserve(4);
    for (Modality m : {Modality::cam_left, Modality::cam_right, Modality::cam_rs,
                       Modality::depth}) {
        out.models.push_back(run_unimodal_experiment(split, m, cfg));
    }
    out.report = fuse_and_evaluate(
        split, {&out.models[0].graph, &out.models[1].graph, &out.models[2].graph,
                &out.models[3].graph});
    return out;
}

ExperimentResult run_intermediate_fusion_experiment(const DatasetSplit& split,
                                                    const ModelTrainConfig& cfg) {
    check_split_ready(split);
    const std::size_t n_classes = n_classes_of(split);
    FusionGraph f = build_intermediate_fusion(n_classes, derive_seed(cfg.seed, 30),
                                              cfg.dims);
    const TrainConfig tc =
        to_train_config(cfg, cfg.fusion_patience, derive_seed(cfg.seed, 31));
    const std::vector<Example> train_ex = make_fusion_examples(split.train);
    const std::vector<Example> val_ex = make_fusion_examples(split.validation);
    ExperimentResult result;
    result.training = train(f.graph, train_ex, val_ex, tc);

    std::vector<int> actual;
    std::vector<int> predicted;
    actual.reserve(split.test.size());
    predicted.reserve(split.test.size());
    for (const Example& ex : make_fusion_examples(split.test)) {
        predicted.push_back(static_cast<int>(argmax(f.graph.forward(ex.inputs))));
    }
    for (const MultimodalSample& s : split.test) actual.push_back(s.label);
    result.report = evaluate(actual, predicted, n_classes);
    result.graph = std::move(f.graph);
    return result;
}

}  // namespace mmfusion
