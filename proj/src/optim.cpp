#include "mmfusion/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "mmfusion/errors.hpp"
#include "mmfusion/layers.hpp"
#include "mmfusion/rng.hpp"

namespace mmfusion {

void Adam::step(const std::vector<ParamRef>& params) {
    if (m_.empty()) {
        m_.reserve(params.size());
        v_.reserve(params.size());
        for (const ParamRef& p : params) {
            m_.emplace_back(p.value->shape());
            v_.emplace_back(p.value->shape());
        }
    }
    if (params.size() != m_.size()) {
        throw StateError("optimizer was initialized for " + std::to_string(m_.size()) +
                         " parameters, got " + std::to_string(params.size()));
    }
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& p = *params[i].value;
        const Tensor& g = *params[i].grad;
        if (!p.same_shape(m_[i])) {
            throw StateError("parameter " + std::to_string(i) +
                             " changed shape after the optimizer was initialized");
        }
        for (std::size_t j = 0; j < p.size(); ++j) {
            const double gj = g[j];
            m_[i][j] = cfg_.beta1 * m_[i][j] + (1.0 - cfg_.beta1) * gj;
            v_[i][j] = cfg_.beta2 * v_[i][j] + (1.0 - cfg_.beta2) * gj * gj;
            const double mhat = m_[i][j] / c1;
            const double vhat = v_[i][j] / c2;
            p[j] -= cfg_.learning_rate * mhat / (std::sqrt(vhat) + cfg_.epsilon);
        }
    }
}

bool EarlyStopping::update(double val_loss) {
    if (!std::isfinite(val_loss)) throw TrainingError("validation loss is not finite");
    // Strict improvement over the previous best resets patience; the best
    // itself follows every new minimum so a slow drift never resets.
    const bool improved = (best_ - val_loss) > min_delta_;
    if (val_loss < best_) best_ = val_loss;
    if (improved) {
        stale_ = 0;
    } else {
        ++stale_;
    }
    return stale_ >= patience_;
}

double mean_loss(Graph& g, const std::vector<Example>& examples) {
    if (examples.empty()) throw ArgumentError("cannot compute loss of an empty set");
    double sum = 0.0;
    for (const Example& ex : examples) {
        sum += cross_entropy(g.forward(ex.inputs), ex.label);
    }
    return sum / static_cast<double>(examples.size());
}

TrainResult train(Graph& g, const std::vector<Example>& train_set,
                  const std::vector<Example>& val_set, const TrainConfig& cfg) {
    if (cfg.batch_size == 0) throw ArgumentError("batch_size must be positive");
    TrainResult result;
    if (cfg.max_epochs == 0) return result;
    if (train_set.empty()) throw ArgumentError("training set is empty");
    if (val_set.empty()) throw ArgumentError("validation set is empty");

    Adam opt(cfg.adam);
    EarlyStopping stopper(cfg.min_delta, cfg.patience);
    Rng rng(cfg.seed);
    const std::vector<ParamRef> params = g.parameters();

    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        shuffle(order, rng);
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(start + cfg.batch_size, order.size());
            const double inv = 1.0 / static_cast<double>(stop - start);
            g.zero_grads();
            for (std::size_t i = start; i < stop; ++i) {
                const Example& ex = train_set[order[i]];
                const Tensor& probs = g.forward(ex.inputs);
                loss_sum += cross_entropy(probs, ex.label);
                Tensor dprobs = cross_entropy_backward(probs, ex.label);
                for (std::size_t j = 0; j < dprobs.size(); ++j) dprobs[j] *= inv;
                g.backward(dprobs);
            }
            opt.step(params);
        }
        const double train_loss = loss_sum / static_cast<double>(train_set.size());
        const double val_loss = mean_loss(g, val_set);
        if (!std::isfinite(train_loss) || !std::isfinite(val_loss)) {
            throw TrainingError("loss diverged at epoch " + std::to_string(epoch + 1));
        }
        result.history.push_back({train_loss, val_loss});
        if (stopper.update(val_loss)) {
            result.stopped_early = true;
            break;
        }
    }
    return result;
}

}  // namespace mmfusion
