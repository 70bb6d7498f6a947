// End-to-end acceptance checks. Each criterion prints exactly one
// PASS/FAIL/SKIP line; the process exits nonzero if any non-optional
// criterion fails. Criteria with a runtime budget fail when they blow it.
//
// The slow criteria (3 and 4) share one fixture: three seeds of the
// complementary synthetic task with all models trained on clean data.
// Building it is charged to criterion 3; criterion 4 only pays for the
// corrupted-modality retraining.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "mmfusion/checkpoint.hpp"
#include "mmfusion/data.hpp"
#include "mmfusion/errors.hpp"
#include "mmfusion/experiment.hpp"
#include "mmfusion/graph.hpp"
#include "mmfusion/layers.hpp"
#include "mmfusion/metrics.hpp"
#include "mmfusion/models.hpp"
#include "mmfusion/optim.hpp"
#include "mmfusion/rng.hpp"
#include "mmfusion/tensor.hpp"
#include "support/grad_check.hpp"
#include "support/reference_kernels.hpp"
#include "support/temp_dir.hpp"

using namespace mmfusion;

namespace {

struct Outcome {
    bool ok = true;
    bool skipped = false;
    std::string detail;
};

std::string fmt(double v, int precision = 4) {
    std::ostringstream os;
    os.precision(precision);
    os << v;
    return os.str();
}

Tensor random_tensor(const std::vector<std::size_t>& shape, Rng& rng, double lo = -1.0,
                     double hi = 1.0) {
    Tensor t(shape);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = lo + (hi - lo) * rng.uniform01();
    return t;
}

// ---------------------------------------------------------------- criterion 1

// One-eighth-scale camera classifier: same three conv/relu/pool stages,
// flatten, dense head, softmax, on an 8x8 entry.
NodeId tiny_conv_trunk(Graph& g, NodeId input, Rng& rng) {
    NodeId x = g.conv2d(input, 1, 2, rng);
    x = g.maxpool2x2(g.relu(x));
    x = g.conv2d(x, 2, 3, rng);
    x = g.maxpool2x2(g.relu(x));
    x = g.conv2d(x, 3, 3, rng);
    x = g.maxpool2x2(g.relu(x));
    return g.flatten(x);  // 3 values after three halvings of 8
}

Outcome criterion_gradients() {
    Rng rng(1234);
    std::size_t total = 0, tight = 0, loose = 0;
    double max_rel = 0.0;
    bool all_pass = true;

    auto absorb = [&](const gradcheck::Stats& st) {
        total += st.n_params;
        tight += st.over_tight;
        loose += st.over_loose;
        max_rel = std::max(max_rel, st.max_rel_err);
        all_pass = all_pass && st.pass();
    };

    {
        Graph g;
        Rng init(7);
        const NodeId in = g.add_input("image", {1, 8, 8});
        NodeId x = tiny_conv_trunk(g, in, init);
        x = g.dense(x, 3, 5, init);
        g.softmax(x);
        Tensor image = random_tensor({1, 8, 8}, rng, 0.0, 1.0);
        absorb(gradcheck::check_parameter_gradients(g, {{"image", &image}}, 2));
    }
    {
        Graph g;
        Rng init(8);
        const NodeId in = g.add_input("depth", {1, 16});
        NodeId x = g.relu(g.dense(in, 16, 8, init));
        x = g.relu(g.dense(x, 8, 8, init));
        x = g.relu(g.dense(x, 8, 8, init));
        x = g.dense(x, 8, 5, init);
        g.softmax(x);
        Tensor depth = random_tensor({1, 16}, rng, 0.0, 1.0);
        absorb(gradcheck::check_parameter_gradients(g, {{"depth", &depth}}, 1));
    }
    {
        // Full fusion topology at tiny scale: three camera trunks, a depth
        // trunk, both concat stages, the fused dense layers and the head.
        Graph g;
        Rng init(9);
        std::array<NodeId, 3> reprs{};
        const char* names[3] = {"cam_left", "cam_right", "cam_rs"};
        for (int t = 0; t < 3; ++t) {
            const NodeId in = g.add_input(names[t], {1, 8, 8});
            NodeId x = tiny_conv_trunk(g, in, init);
            reprs[static_cast<std::size_t>(t)] = g.relu(g.dense(x, 3, 6, init));
        }
        const NodeId din = g.add_input("depth", {1, 16});
        NodeId d = g.relu(g.dense(din, 16, 8, init));
        d = g.relu(g.dense(d, 8, 8, init));
        d = g.relu(g.dense(d, 8, 8, init));
        const NodeId shared = g.concat({reprs[0], reprs[1], reprs[2]});
        const NodeId joint = g.concat({shared, d});
        NodeId x = g.relu(g.dense(joint, 26, 8, init));
        x = g.dense(x, 8, 4, init);
        g.softmax(x);

        Tensor cl = random_tensor({1, 8, 8}, rng, 0.0, 1.0);
        Tensor cr = random_tensor({1, 8, 8}, rng, 0.0, 1.0);
        Tensor cs = random_tensor({1, 8, 8}, rng, 0.0, 1.0);
        Tensor dp = random_tensor({1, 16}, rng, 0.0, 1.0);
        absorb(gradcheck::check_parameter_gradients(
            g, {{"cam_left", &cl}, {"cam_right", &cr}, {"cam_rs", &cs}, {"depth", &dp}},
            3));
    }

    Outcome o;
    o.ok = all_pass;
    o.detail = std::to_string(total) + " parameter gradients vs central differences, " +
               std::to_string(tight) + " over 1e-4, " + std::to_string(loose) +
               " over 1e-3, max rel err " + fmt(max_rel, 3);
    return o;
}

// ---------------------------------------------------------------- criterion 2

Outcome criterion_kernel_oracles() {
    Rng rng(4321);
    double worst = 0.0;
    auto note = [&](double diff) { worst = std::max(worst, std::abs(diff)); };

    for (int i = 0; i < 50; ++i) {
        const std::size_t C = 1 + rng.below(3), OC = 1 + rng.below(4);
        const std::size_t H = 2 + rng.below(8), W = 2 + rng.below(8);
        const Tensor x = random_tensor({C, H, W}, rng);
        const Tensor w = random_tensor({OC, C, 3, 3}, rng);
        const Tensor b = random_tensor({OC}, rng);
        const Tensor got = conv2d_forward(x, w, b);
        const Tensor want = refk::conv2d(x, w, b);
        for (std::size_t k = 0; k < got.size(); ++k) note(got[k] - want[k]);
    }
    for (int i = 0; i < 50; ++i) {
        const std::size_t C = 1 + rng.below(4);
        const std::size_t H = 2 + rng.below(8), W = 2 + rng.below(8);
        const Tensor x = random_tensor({C, H, W}, rng);
        const Tensor got = maxpool2x2_forward(x);
        const Tensor want = refk::maxpool2x2(x);
        for (std::size_t k = 0; k < got.size(); ++k) note(got[k] - want[k]);
    }
    for (int i = 0; i < 50; ++i) {
        const std::size_t in = 1 + rng.below(32), out = 1 + rng.below(16);
        const Tensor x = random_tensor({in}, rng);
        const Tensor w = random_tensor({in, out}, rng);
        const Tensor b = random_tensor({out}, rng);
        const Tensor got = dense_forward(x, w, b);
        const Tensor want = refk::dense(x, w, b);
        for (std::size_t k = 0; k < got.size(); ++k) note(got[k] - want[k]);
    }
    for (int i = 0; i < 50; ++i) {
        const std::size_t n = 2 + rng.below(15);
        const Tensor logits = random_tensor({n}, rng, -10.0, 10.0);
        const std::size_t label = rng.below(n);
        const SoftmaxXent got = softmax_cross_entropy(logits, label);
        Tensor ref_probs;
        const double ref_loss = refk::softmax_xent(logits, label, &ref_probs);
        note(got.loss - ref_loss);
        for (std::size_t k = 0; k < n; ++k) note(got.probs[k] - ref_probs[k]);
    }

    Outcome o;
    o.ok = worst < 1e-12;
    o.detail = "conv2d/maxpool/dense/softmax-xent vs naive loops, 50 instances each, "
               "max abs diff " +
               fmt(worst, 3);
    return o;
}

// ----------------------------------------------------------- criteria 3 and 4

SyntheticConfig bench_data() {
    SyntheticConfig c;
    c.n_classes = 10;
    c.views_per_class = 72;
    c.complementary = true;
    c.shape_classes = 5;
    c.depth_classes = 2;
    c.height = 64;
    c.width = 64;
    return c;
}

// Scaled-down widths keep the runtime in budget. The full-width batch size
// and the short CNN patience matter beyond speed: training keeps the final
// weights on stop, so fewer optimizer steps past the last real improvement
// keep the unimodal members calibrated, which is what lets the summed
// probabilities resolve the depth factor the cameras cannot see.
ModelTrainConfig bench_train(std::uint64_t seed) {
    ModelTrainConfig c;
    c.dims.conv1 = 4;
    c.dims.conv2 = 8;
    c.dims.conv3 = 8;
    c.dims.cnn_dense = 24;
    c.dims.mlp_hidden = 48;
    c.dims.fusion_dense = 48;
    c.batch_size = 64;
    c.max_epochs = 120;
    c.cnn_patience = 12;
    c.mlp_patience = 20;
    c.fusion_patience = 12;
    c.seed = seed;
    return c;
}

constexpr std::uint64_t kBenchSeeds[] = {11, 12, 13};
constexpr std::size_t kNumSeeds = 3;

struct SeedRun {
    DatasetSplit raw;  // pre-normalization, pre-corruption
    DecisionFusionOutcome decision;
    ExperimentResult intermediate;
};

class Fixture {
public:
    std::vector<SeedRun>& seeds() {
        if (!built_) {
            for (std::uint64_t seed : kBenchSeeds) runs_.push_back(build_one(seed));
            built_ = true;
        }
        return runs_;
    }

private:
    static SeedRun build_one(std::uint64_t seed) {
        std::cerr << "[fixture] seed " << seed << ": generating data\n";
        SeedRun r;
        std::vector<MultimodalSample> samples =
            generate_multimodal(bench_data(), derive_seed(seed, 1));
        r.raw = split_dataset(std::move(samples), seed);
        DatasetSplit clean = normalize(r.raw);  // keep the raw copy around
        const ModelTrainConfig tc = bench_train(seed);
        std::cerr << "[fixture] seed " << seed << ": training unimodal models\n";
        r.decision = run_decision_fusion_experiment(clean, tc);
        std::cerr << "[fixture] seed " << seed << ": training intermediate fusion\n";
        r.intermediate = run_intermediate_fusion_experiment(clean, tc);
        for (std::size_t m = 0; m < 4; ++m) {
            std::cerr << "[fixture]   model " << m << ": acc "
                      << r.decision.models[m].report.accuracy << ", epochs "
                      << r.decision.models[m].training.epochs_ran() << "\n";
        }
        std::cerr << "[fixture]   decision acc " << r.decision.report.accuracy
                  << ", intermediate acc " << r.intermediate.report.accuracy
                  << " (epochs " << r.intermediate.training.epochs_ran() << ")\n";
        return r;
    }

    std::vector<SeedRun> runs_;
    bool built_ = false;
};

Outcome criterion_accuracy_ordering(Fixture& fix) {
    std::vector<SeedRun>& runs = fix.seeds();
    double cam[3] = {0, 0, 0};
    double depth = 0, decision = 0, intermediate = 0;
    for (const SeedRun& r : runs) {
        for (int c = 0; c < 3; ++c) {
            cam[c] += r.decision.models[static_cast<std::size_t>(c)].report.accuracy;
        }
        depth += r.decision.models[3].report.accuracy;
        decision += r.decision.report.accuracy;
        intermediate += r.intermediate.report.accuracy;
    }
    for (double& v : cam) v /= kNumSeeds;
    depth /= kNumSeeds;
    decision /= kNumSeeds;
    intermediate /= kNumSeeds;
    const double best_cam = std::max({cam[0], cam[1], cam[2]});
    const double best_unimodal = std::max(best_cam, depth);

    Outcome o;
    o.ok = intermediate > decision && decision > best_cam && best_cam > depth &&
           intermediate >= best_unimodal + 0.10;
    o.detail = "mean test accuracy: intermediate " + fmt(intermediate) + " > decision " +
               fmt(decision) + " > best camera " + fmt(best_cam) + " > depth " +
               fmt(depth) + ", intermediate lead over best unimodal " +
               fmt(intermediate - best_unimodal);
    return o;
}

Outcome criterion_corruption_robustness(Fixture& fix) {
    std::vector<SeedRun>& runs = fix.seeds();
    double decision_drop = 0, intermediate_drop = 0;
    for (std::size_t si = 0; si < runs.size(); ++si) {
        SeedRun& r = runs[si];
        const std::uint64_t seed = kBenchSeeds[si];
        std::cerr << "[corrupt] seed " << seed << ": retraining on noisy cam_left\n";
        DatasetSplit corrupted =
            normalize(corrupt_modality(r.raw, Modality::cam_left, derive_seed(seed, 42)));
        const ModelTrainConfig tc = bench_train(seed);

        // Corruption rewrites only the cam_left tensors, and each unimodal
        // model reads a single modality with data-independent init/shuffle
        // seeds, so the right/rs/depth members retrain to identical weights.
        // Reuse them and retrain just the left camera model.
        ExperimentResult left_noise =
            run_unimodal_experiment(corrupted, Modality::cam_left, tc);
        const EvalReport dec_corrupt = fuse_and_evaluate(
            corrupted, {&left_noise.graph, &r.decision.models[1].graph,
                        &r.decision.models[2].graph, &r.decision.models[3].graph});
        ExperimentResult inter_corrupt = run_intermediate_fusion_experiment(corrupted, tc);

        decision_drop += r.decision.report.accuracy - dec_corrupt.accuracy;
        intermediate_drop += r.intermediate.report.accuracy - inter_corrupt.report.accuracy;
        std::cerr << "[corrupt]   decision " << dec_corrupt.accuracy << ", intermediate "
                  << inter_corrupt.report.accuracy << "\n";
    }
    decision_drop /= kNumSeeds;
    intermediate_drop /= kNumSeeds;

    Outcome o;
    o.ok = decision_drop - intermediate_drop >= 0.02;
    o.detail = "noisy cam_left: decision fusion drops " + fmt(decision_drop) +
               ", intermediate fusion drops " + fmt(intermediate_drop) + ", gap " +
               fmt(decision_drop - intermediate_drop);
    return o;
}

// ---------------------------------------------------------------- criterion 5

Outcome criterion_metric_identities() {
    Rng rng(55);
    for (int i = 0; i < 200; ++i) {
        const std::size_t n = 2 + rng.below(11);
        ConfusionMatrix cm(n);
        std::uint64_t total = 0;
        for (std::size_t a = 0; a < n; ++a) {
            for (std::size_t p = 0; p < n; ++p) {
                cm.cell(a, p) = rng.below(31);
                total += cm.at(a, p);
            }
        }
        if (total == 0) cm.cell(0, 0) = 1;
        if (accuracy(cm) != weighted_prf(cm).recall) {
            Outcome o;
            o.ok = false;
            o.detail = "accuracy != weighted recall on a random confusion matrix";
            return o;
        }
    }

    const Tensor uniform_logits({100});
    const double loss = cross_entropy(softmax(uniform_logits), 7);
    const double ln_c_err = std::abs(loss - std::log(100.0));

    Rng guess(99);
    std::vector<int> actual, predicted;
    actual.reserve(10000);
    predicted.reserve(10000);
    for (int i = 0; i < 10000; ++i) {
        actual.push_back(i % 100);
        predicted.push_back(static_cast<int>(guess.below(100)));
    }
    const double chance = accuracy(confusion(actual, predicted, 100));

    Outcome o;
    o.ok = ln_c_err <= 1e-9 && chance >= 0.005 && chance <= 0.015;
    o.detail = "accuracy == weighted recall on 200 matrices; uniform-logit loss off ln(100) "
               "by " +
               fmt(ln_c_err, 3) + "; chance accuracy " + fmt(chance) + " over 100 classes";
    return o;
}

// ---------------------------------------------------------------- criterion 6

Outcome criterion_determinism() {
    testutil::TempDir tmp("mmfusion_acceptance");

    ExperimentConfig cfg = default_config();
    cfg.seed = 21;
    cfg.experiments = {"unimodal-depth"};
    cfg.data.synthetic.n_classes = 4;
    cfg.data.synthetic.views_per_class = 6;
    cfg.data.synthetic.complementary = true;
    cfg.data.synthetic.shape_classes = 2;
    cfg.data.synthetic.depth_classes = 2;
    cfg.data.synthetic.height = 32;
    cfg.data.synthetic.width = 32;
    cfg.train.dims.conv1 = 3;
    cfg.train.dims.conv2 = 4;
    cfg.train.dims.conv3 = 4;
    cfg.train.dims.cnn_dense = 12;
    cfg.train.dims.mlp_hidden = 12;
    cfg.train.dims.fusion_dense = 12;
    cfg.train.batch_size = 8;
    cfg.train.max_epochs = 3;

    cfg.out = tmp.file("run_a");
    run_experiment(cfg);
    cfg.out = tmp.file("run_b");
    run_experiment(cfg);

    const bool metrics_same = testutil::slurp(tmp.file("run_a") + "/metrics.csv") ==
                              testutil::slurp(tmp.file("run_b") + "/metrics.csv");
    const bool confusion_same =
        testutil::slurp(tmp.file("run_a") + "/confusion_depth_mlp.csv") ==
        testutil::slurp(tmp.file("run_b") + "/confusion_depth_mlp.csv");

    ModelDims dims;
    dims.conv1 = 3;
    dims.conv2 = 4;
    dims.conv3 = 4;
    dims.cnn_dense = 12;
    CnnStream saved = build_cnn_stream(5, 77, dims);
    const std::string ckpt = tmp.file("round_trip.ckpt");
    save_checkpoint(saved.graph, "camera_left", {{1.0, 0.9}}, ckpt);
    CnnStream loaded = build_cnn_stream(5, 78, dims);
    load_checkpoint(loaded.graph, ckpt);

    bool preds_same = true;
    Rng rng(6);
    for (int i = 0; i < 5; ++i) {
        const Tensor image = random_tensor({1, 32, 32}, rng, 0.0, 1.0);
        const Tensor pa = saved.graph.forward({{"image", &image}});
        const Tensor pb = loaded.graph.forward({{"image", &image}});
        preds_same = preds_same && pa.vec() == pb.vec();
    }

    Outcome o;
    o.ok = metrics_same && confusion_same && preds_same;
    o.detail = std::string("metrics CSVs byte-identical across reruns: ") +
               (metrics_same && confusion_same ? "yes" : "NO") +
               "; checkpoint round-trip predictions bit-identical: " +
               (preds_same ? "yes" : "NO");
    return o;
}

// ---------------------------------------------------------------- criterion 7

Outcome criterion_early_stopping() {
    // Constant validation loss: the first update sets the best, then exactly
    // `patience` stale epochs must pass before update() reports a stop.
    bool constant_ok = false;
    {
        EarlyStopping es(0.01, 20);
        std::size_t stopped_at = 0;
        for (std::size_t i = 1; i <= 30 && stopped_at == 0; ++i) {
            if (es.update(1.0)) stopped_at = i;
        }
        constant_ok = stopped_at == 21;
    }

    // Improvement by exactly min_delta is not strictly better, so the stale
    // counter keeps rising even though the best keeps falling. min_delta is a
    // power of two so the equality case is exact in floating point.
    bool equality_ok = false;
    {
        EarlyStopping es(0.015625, 3);
        double loss = 0.5;
        std::size_t stopped_at = 0;
        for (std::size_t i = 1; i <= 10 && stopped_at == 0; ++i) {
            if (es.update(loss)) stopped_at = i;
            loss -= 0.015625;
        }
        equality_ok = stopped_at == 4 && es.best_loss() == 0.5 - 3 * 0.015625;
    }

    // Same property through the trainer: zero learning rate freezes the
    // model, so validation loss is constant and training must run exactly
    // patience+1 epochs.
    bool trainer_ok = false;
    {
        Graph g;
        Rng init(3);
        const NodeId in = g.add_input("x", {2});
        g.softmax(g.dense(in, 2, 2, init));
        const Tensor a({2}, {0.3, 0.7});
        const Tensor b({2}, {0.9, 0.1});
        const std::vector<Example> train_set = {{{{"x", &a}}, 0}, {{{"x", &b}}, 1}};
        const std::vector<Example> val_set = {{{{"x", &a}}, 0}};
        TrainConfig tc;
        tc.adam.learning_rate = 0.0;
        tc.batch_size = 2;
        tc.max_epochs = 40;
        tc.patience = 5;
        const TrainResult res = train(g, train_set, val_set, tc);
        trainer_ok = res.stopped_early && res.epochs_ran() == 6;
    }

    Outcome o;
    o.ok = constant_ok && equality_ok && trainer_ok;
    o.detail = std::string("constant loss stops after exactly patience epochs: ") +
               (constant_ok ? "yes" : "NO") + "; exact min_delta gain does not reset: " +
               (equality_ok ? "yes" : "NO") + "; trainer honours both: " +
               (trainer_ok ? "yes" : "NO");
    return o;
}

// ---------------------------------------------------------------- criterion 8

Outcome criterion_full_data() {
    const char* root = std::getenv("MMFUSION_ICUB_ROOT");
    if (root == nullptr || *root == '\0') {
        Outcome o;
        o.skipped = true;
        o.detail = "set MMFUSION_ICUB_ROOT to a dataset root to enable";
        return o;
    }

    // Ten-object subset through the full pipeline.
    std::vector<MultimodalSample> samples;
    std::uint64_t next_id = 0;
    scan_icub_dataset(root, [&](RawSample&& raw) {
        if (raw.label < 10) samples.push_back(preprocess_sample(raw, next_id++));
    });
    if (samples.size() < 40) {
        Outcome o;
        o.ok = false;
        o.detail = "dataset at " + std::string(root) + " has only " +
                   std::to_string(samples.size()) + " samples for the first 10 objects";
        return o;
    }
    DatasetSplit split = normalize(split_dataset(std::move(samples), 5));
    const ModelTrainConfig tc = bench_train(5);
    const ExperimentResult depth = run_unimodal_experiment(split, Modality::depth, tc);
    const ExperimentResult fused = run_intermediate_fusion_experiment(split, tc);

    Outcome o;
    o.ok = fused.report.accuracy >= depth.report.accuracy + 0.20;
    o.detail = "10-object subset: intermediate fusion " + fmt(fused.report.accuracy) +
               " vs depth " + fmt(depth.report.accuracy);
    return o;
}

}  // namespace

int main() {
    struct Entry {
        int number;
        double budget_seconds;  // 0 = unlimited
        std::function<Outcome()> run;
    };
    Fixture fixture;
    const std::vector<Entry> entries = {
        {1, 60.0, criterion_gradients},
        {2, 10.0, criterion_kernel_oracles},
        {3, 600.0, [&] { return criterion_accuracy_ordering(fixture); }},
        {4, 600.0, [&] { return criterion_corruption_robustness(fixture); }},
        {5, 0.0, criterion_metric_identities},
        {6, 0.0, criterion_determinism},
        {7, 0.0, criterion_early_stopping},
        {8, 0.0, criterion_full_data},
    };

    bool all_ok = true;
    for (const Entry& e : entries) {
        Outcome outcome;
        const auto start = std::chrono::steady_clock::now();
        try {
            outcome = e.run();
        } catch (const std::exception& ex) {
            outcome.ok = false;
            outcome.detail = std::string("exception: ") + ex.what();
        }
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                .count();
        if (outcome.ok && e.budget_seconds > 0.0 && seconds > e.budget_seconds) {
            outcome.ok = false;
            outcome.detail += " [exceeded " + fmt(e.budget_seconds, 3) + " s budget]";
        }
        const char* verdict = outcome.skipped ? "SKIP" : (outcome.ok ? "PASS" : "FAIL");
        std::cout << "criterion " << e.number << ": " << verdict << " (" << fmt(seconds, 3)
                  << " s) " << outcome.detail << "\n";
        std::cout.flush();
        if (!outcome.skipped && !outcome.ok) all_ok = false;
    }
    std::cout << (all_ok ? "acceptance: PASS" : "acceptance: FAIL") << "\n";
    return all_ok ? 0 : 1;
}
