#ifndef MMFUSION_OPTIM_HPP
#define MMFUSION_OPTIM_HPP

#include <cstdint>
#include <limits>
#include <vector>

#include "mmfusion/graph.hpp"

namespace mmfusion {

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// Bias-corrected Adam over a fixed parameter list. Moment slots are sized on
// the first step and must keep their shapes afterwards.
class Adam {
public:
    explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

    void step(const std::vector<ParamRef>& params);

    std::uint64_t step_count() const { return t_; }
    const AdamConfig& config() const { return cfg_; }

private:
    AdamConfig cfg_;
    std::uint64_t t_ = 0;
    std::vector<Tensor> m_;
    std::vector<Tensor> v_;
};

// Validation-loss early stopping. The running best tracks the minimum seen;
// the stale counter resets only when a new loss beats the previous best by
// strictly more than min_delta.
class EarlyStopping {
public:
    EarlyStopping(double min_delta, std::size_t patience)
        : min_delta_(min_delta), patience_(patience) {}

    // Returns true when training should stop.
    bool update(double val_loss);

    double best_loss() const { return best_; }
    std::size_t epochs_since_improvement() const { return stale_; }

private:
    double min_delta_;
    std::size_t patience_;
    double best_ = std::numeric_limits<double>::infinity();
    std::size_t stale_ = 0;
};

struct TrainConfig {
    AdamConfig adam;
    std::size_t batch_size = 64;
    std::size_t max_epochs = 600;
    double min_delta = 0.01;
    std::size_t patience = 20;
    std::uint64_t seed = 0;
};

// One training example: entry bindings plus the class label. The bound
// tensors are owned elsewhere (normally by the dataset) and must outlive
// every use of the example.
struct Example {
    Graph::Inputs inputs;
    int label = 0;
};

struct EpochStats {
    double train_loss;
    double val_loss;
};

struct TrainResult {
    std::vector<EpochStats> history;
    bool stopped_early = false;
    std::size_t epochs_ran() const { return history.size(); }
};

// Mean cross-entropy of the graph's probability output over a set, forward
// passes only.
double mean_loss(Graph& g, const std::vector<Example>& examples);

// Seeded, shuffled mini-batch training with Adam and validation-loss early
// stopping. Batch gradients are averaged. The graph keeps its final-epoch
// parameters when stopping early.
TrainResult train(Graph& g, const std::vector<Example>& train_set,
                  const std::vector<Example>& val_set, const TrainConfig& cfg);

}  // namespace mmfusion

#endif
