#include "mmfusion/graph.hpp"

#include <cmath>
#include <sstream>

#include "mmfusion/errors.hpp"
#include "mmfusion/layers.hpp"

namespace mmfusion {

void he_init(Tensor& t, std::size_t fan_in, Rng& rng) {
    const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.normal(0.0, stddev);
}

std::string Node::signature() const {
    std::ostringstream out;
    out << kind();
    for (const Param& p : params_) out << ' ' << p.name << '=' << shape_string(p.value.shape());
    return out.str();
}

namespace {

class InputNode final : public Node {
public:
    InputNode(std::string name, std::vector<std::size_t> shape)
        : name_(std::move(name)), shape_(std::move(shape)) {}

    std::string_view kind() const override { return "input"; }

    Tensor forward(const std::vector<const Tensor*>& xs) override {
        // The graph substitutes the bound entry tensor before calling this.
        return *xs.at(0);
    }

    std::vector<Tensor> backward(const Tensor&) override { return {}; }

    const std::string& name() const { return name_; }
    const std::vector<std::size_t>& declared_shape() const { return shape_; }

private:
    std::string name_;
    std::vector<std::size_t> shape_;
};

class Conv2dNode final : public Node {
public:
    Conv2dNode(std::size_t in_channels, std::size_t out_channels, Rng& rng) {
        Param w{"weight", Tensor({out_channels, in_channels, 3, 3}),
                Tensor({out_channels, in_channels, 3, 3})};
        he_init(w.value, in_channels * 9, rng);
        params_.push_back(std::move(w));
        params_.push_back(Param{"bias", Tensor({out_channels}), Tensor({out_channels})});
    }

    std::string_view kind() const override { return "conv2d"; }

    Tensor forward(const std::vector<const Tensor*>& xs) override {
        cache_x_ = *xs.at(0);
        return conv2d_forward(cache_x_, params_[0].value, params_[1].value);
    }

    std::vector<Tensor> backward(const Tensor& upstream) override {
        Conv2dGrads g = conv2d_backward(cache_x_, params_[0].value, upstream);
        accumulate(params_[0].grad, g.dw);
        accumulate(params_[1].grad, g.db);
        std::vector<Tensor> out;
        out.push_back(std::move(g.dx));
        return out;
    }

    void clear_cache() override { cache_x_ = Tensor(); }

private:
    static void accumulate(Tensor& into, const Tensor& g) {
        for (std::size_t i = 0; i < into.size(); ++i) into[i] += g[i];
    }
    Tensor cache_x_;
};

class ReluNode final : public Node {
public:
    std::string_view kind() const override { return "relu"; }

    Tensor forward(const std::vector<const Tensor*>& xs) override {
        cache_x_ = *xs.at(0);
        return relu_forward(cache_x_);
    }

    std::vector<Tensor> backward(const Tensor& upstream) override {
        std::vector<Tensor> out;
        out.push_back(relu_backward(cache_x_, upstream));
        return out;
    }

    void clear_cache() override { cache_x_ = Tensor(); }

private:
    Tensor cache_x_;
};

class MaxPool2x2Node final : public Node {
public:
    std::string_view kind() const override { return "maxpool2x2"; }

    Tensor forward(const std::vector<const Tensor*>& xs) override {
        in_shape_ = xs.at(0)->shape();
        return maxpool2x2_forward(*xs.at(0), &argmax_);
    }

    std::vector<Tensor> backward(const Tensor& upstream) override {
        std::vector<Tensor> out;
        out.push_back(maxpool2x2_backward(in_shape_, argmax_, upstream));
        return out;
    }

    void clear_cache() override { argmax_.clear(); }

private:
    std::vector<std::size_t> in_shape_;
    std::vector<std::uint32_t> argmax_;
};

class FlattenNode final : public Node {
public:
    std::string_view kind() const override { return "flatten"; }

    // Emits a [1,N] row vector so the dense stack downstream keeps the same
    // shape convention as the [1,1024] depth entries.
    Tensor forward(const std::vector<const Tensor*>& xs) override {
        in_shape_ = xs.at(0)->shape();
        return xs.at(0)->reshaped({1, xs.at(0)->size()});
    }

    std::vector<Tensor> backward(const Tensor& upstream) override {
        std::vector<Tensor> out;
        out.push_back(upstream.reshaped(in_shape_));
        return out;
    }

private:
    std::vector<std::size_t> in_shape_;
};

class DenseNode final : public Node {
public:
    DenseNode(std::size_t in_dim, std::size_t out_dim, Rng& rng) {
        Param w{"weight", Tensor({in_dim, out_dim}), Tensor({in_dim, out_dim})};
        he_init(w.value, in_dim, rng);
        params_.push_back(std::move(w));
        params_.push_back(Param{"bias", Tensor({out_dim}), Tensor({out_dim})});
    }

    std::string_view kind() const override { return "dense"; }

    Tensor forward(const std::vector<const Tensor*>& xs) override {
        cache_x_ = *xs.at(0);
        return dense_forward(cache_x_, params_[0].value, params_[1].value);
    }

    std::vector<Tensor> backward(const Tensor& upstream) override {
        DenseGrads g = dense_backward(cache_x_, params_[0].value, upstream);
        for (std::size_t i = 0; i < g.dw.size(); ++i) params_[0].grad[i] += g.dw[i];
        for (std::size_t i = 0; i < g.db.size(); ++i) params_[1].grad[i] += g.db[i];
        std::vector<Tensor> out;
        out.push_back(std::move(g.dx));
        return out;
    }

    void clear_cache() override { cache_x_ = Tensor(); }

private:
    Tensor cache_x_;
};

class ConcatNode final : public Node {
public:
    std::string_view kind() const override { return "concat"; }

    Tensor forward(const std::vector<const Tensor*>& xs) override {
        widths_.clear();
        in_shapes_.clear();
        bool all_rows = true;
        for (const Tensor* t : xs) {
            widths_.push_back(t->size());
            in_shapes_.push_back(t->shape());
            all_rows = all_rows && t->rank() == 2;
        }
        Tensor out = concat_forward(xs);
        // Row-vector inputs produce a row vector; mixed ranks fall back to a
        // flat vector.
        if (all_rows) out = out.reshaped({1, out.size()});
        return out;
    }

    std::vector<Tensor> backward(const Tensor& upstream) override {
        std::vector<Tensor> slices = concat_backward(widths_, upstream);
        for (std::size_t k = 0; k < slices.size(); ++k) {
            slices[k] = slices[k].reshaped(in_shapes_[k]);
        }
        return slices;
    }

    void clear_cache() override {
        widths_.clear();
        in_shapes_.clear();
    }

private:
    std::vector<std::size_t> widths_;
    std::vector<std::vector<std::size_t>> in_shapes_;
};

class SoftmaxNode final : public Node {
public:
    std::string_view kind() const override { return "softmax"; }

    Tensor forward(const std::vector<const Tensor*>& xs) override {
        probs_ = softmax(*xs.at(0));
        return probs_;
    }

    std::vector<Tensor> backward(const Tensor& upstream) override {
        std::vector<Tensor> out;
        out.push_back(softmax_backward(probs_, upstream));
        return out;
    }

    void clear_cache() override { probs_ = Tensor(); }

private:
    Tensor probs_;
};

}  // namespace

NodeId Graph::add_input(std::string name, std::vector<std::size_t> shape) {
    for (const auto& [existing, id] : entries_) {
        if (existing == name) throw ArgumentError("duplicate entry point '" + name + "'");
    }
    const NodeId id = nodes_.size();
    nodes_.push_back(std::make_unique<InputNode>(name, std::move(shape)));
    node_inputs_.emplace_back();
    entries_.emplace_back(std::move(name), id);
    forward_valid_ = false;
    return id;
}

NodeId Graph::add(std::unique_ptr<Node> node, std::vector<NodeId> inputs) {
    const NodeId id = nodes_.size();
    for (NodeId in : inputs) {
        if (in >= id) {
            throw ArgumentError("node inputs must reference previously added nodes (got " +
                                std::to_string(in) + " at node " + std::to_string(id) + ")");
        }
    }
    nodes_.push_back(std::move(node));
    node_inputs_.push_back(std::move(inputs));
    forward_valid_ = false;
    return id;
}

NodeId Graph::conv2d(NodeId x, std::size_t in_channels, std::size_t out_channels, Rng& rng) {
    return add(std::make_unique<Conv2dNode>(in_channels, out_channels, rng), {x});
}

NodeId Graph::relu(NodeId x) { return add(std::make_unique<ReluNode>(), {x}); }

NodeId Graph::maxpool2x2(NodeId x) { return add(std::make_unique<MaxPool2x2Node>(), {x}); }

NodeId Graph::flatten(NodeId x) { return add(std::make_unique<FlattenNode>(), {x}); }

NodeId Graph::dense(NodeId x, std::size_t in_dim, std::size_t out_dim, Rng& rng) {
    return add(std::make_unique<DenseNode>(in_dim, out_dim, rng), {x});
}

NodeId Graph::concat(std::vector<NodeId> xs) {
    return add(std::make_unique<ConcatNode>(), std::move(xs));
}

NodeId Graph::softmax(NodeId x) { return add(std::make_unique<SoftmaxNode>(), {x}); }

NodeId Graph::output_node() const {
    if (nodes_.empty()) throw StateError("empty graph has no output node");
    // The unique sink; validate() guarantees there is exactly one.
    std::vector<bool> consumed(nodes_.size(), false);
    for (const auto& ins : node_inputs_) {
        for (NodeId in : ins) consumed[in] = true;
    }
    NodeId sink = nodes_.size();
    for (NodeId id = 0; id < nodes_.size(); ++id) {
        if (!consumed[id]) sink = id;
    }
    return sink;
}

const Node& Graph::node(NodeId id) const { return *nodes_.at(id); }
Node& Graph::node(NodeId id) { return *nodes_.at(id); }

const std::vector<NodeId>& Graph::inputs_of(NodeId id) const { return node_inputs_.at(id); }

std::string Graph::node_label(NodeId id) const {
    return "node " + std::to_string(id) + " (" + std::string(nodes_[id]->kind()) + ")";
}

void Graph::validate() const {
    if (nodes_.empty()) throw StateError("graph has no nodes");
    std::vector<bool> consumed(nodes_.size(), false);
    for (const auto& ins : node_inputs_) {
        for (NodeId in : ins) consumed[in] = true;
    }
    std::size_t sinks = 0;
    for (NodeId id = 0; id < nodes_.size(); ++id) {
        if (!consumed[id]) ++sinks;
    }
    if (sinks != 1) {
        throw StateError("graph must have exactly one terminal node, found " +
                         std::to_string(sinks));
    }
    // Reachability from entry points: every non-input node must (transitively)
    // consume an entry.
    std::vector<bool> reachable(nodes_.size(), false);
    for (const auto& [name, id] : entries_) reachable[id] = true;
    for (NodeId id = 0; id < nodes_.size(); ++id) {
        if (reachable[id]) continue;
        bool ok = node_inputs_[id].empty() ? false : true;
        for (NodeId in : node_inputs_[id]) {
            if (!reachable[in]) ok = false;
        }
        if (ok) reachable[id] = true;
    }
    for (NodeId id = 0; id < nodes_.size(); ++id) {
        if (!reachable[id]) {
            throw StateError(node_label(id) + " is not reachable from any entry point");
        }
    }
}

const Tensor& Graph::forward(const Inputs& inputs) {
    validate();
    activations_.assign(nodes_.size(), Tensor());
    grad_buffers_.clear();
    grads_valid_ = false;

    std::vector<const Tensor*> bound(nodes_.size(), nullptr);
    for (const auto& [name, tensor] : inputs) {
        bool found = false;
        for (const auto& [entry_name, id] : entries_) {
            if (entry_name == name) {
                bound[id] = tensor;
                found = true;
                break;
            }
        }
        if (!found) throw ArgumentError("no entry point named '" + name + "'");
    }
    for (const auto& [entry_name, id] : entries_) {
        if (!bound[id]) throw ArgumentError("missing input tensor for entry '" + entry_name + "'");
        const auto* in = static_cast<const InputNode*>(nodes_[id].get());
        if (bound[id]->shape() != in->declared_shape()) {
            throw DimensionError("entry '" + entry_name + "' expects shape " +
                                 shape_string(in->declared_shape()) + ", got " +
                                 shape_string(bound[id]->shape()));
        }
    }

    for (NodeId id = 0; id < nodes_.size(); ++id) {
        std::vector<const Tensor*> xs;
        if (node_inputs_[id].empty()) {
            xs.push_back(bound[id]);
        } else {
            for (NodeId in : node_inputs_[id]) xs.push_back(&activations_[in]);
        }
        try {
            activations_[id] = nodes_[id]->forward(xs);
        } catch (const DimensionError& e) {
            throw DimensionError("at " + node_label(id) + ": " + e.what());
        }
    }
    forward_valid_ = true;
    return activations_[output_node()];
}

void Graph::backward(const Tensor& loss_grad) {
    if (!forward_valid_) throw StateError("backward called without a preceding forward");
    const NodeId sink = output_node();
    if (!loss_grad.same_shape(activations_[sink])) {
        throw DimensionError("loss gradient shape " + shape_string(loss_grad.shape()) +
                             " does not match output shape " +
                             shape_string(activations_[sink].shape()));
    }
    grad_buffers_.assign(nodes_.size(), Tensor());
    grad_buffers_[sink] = loss_grad;

    for (NodeId id = nodes_.size(); id-- > 0;) {
        if (grad_buffers_[id].size() == 0) continue;  // no gradient flows here
        if (node_inputs_[id].empty()) continue;       // entry node, keep for entry_gradient
        std::vector<Tensor> input_grads = nodes_[id]->backward(grad_buffers_[id]);
        const auto& ins = node_inputs_[id];
        for (std::size_t k = 0; k < ins.size(); ++k) {
            Tensor& buf = grad_buffers_[ins[k]];
            if (buf.size() == 0) {
                buf = std::move(input_grads[k]);
            } else {
                // fan-out: contributions sum
                for (std::size_t i = 0; i < buf.size(); ++i) buf[i] += input_grads[k][i];
            }
        }
    }

    for (auto& n : nodes_) n->clear_cache();
    activations_.clear();
    forward_valid_ = false;
    grads_valid_ = true;
}

std::vector<ParamRef> Graph::parameters() {
    std::vector<ParamRef> out;
    for (NodeId id = 0; id < nodes_.size(); ++id) {
        for (Node::Param& p : nodes_[id]->params()) {
            out.push_back(ParamRef{id, p.name, &p.value, &p.grad});
        }
    }
    return out;
}

void Graph::zero_grads() {
    for (auto& n : nodes_) {
        for (Node::Param& p : n->params()) p.grad.fill(0.0);
    }
}

const Tensor& Graph::activation(NodeId id) const {
    if (!forward_valid_) throw StateError("activations are only valid between forward and backward");
    return activations_.at(id);
}

const Tensor& Graph::entry_gradient(const std::string& name) const {
    if (!grads_valid_) throw StateError("entry gradients are only valid after backward");
    for (const auto& [entry_name, id] : entries_) {
        if (entry_name == name) {
            if (grad_buffers_[id].size() == 0) {
                throw StateError("no gradient reached entry '" + name + "'");
            }
            return grad_buffers_[id];
        }
    }
    throw ArgumentError("no entry point named '" + name + "'");
}

std::string Graph::architecture_signature() const {
    std::ostringstream out;
    for (const auto& [name, id] : entries_) {
        const auto* in = static_cast<const InputNode*>(nodes_[id].get());
        out << "entry " << name << ' ' << shape_string(in->declared_shape()) << '\n';
    }
    for (NodeId id = 0; id < nodes_.size(); ++id) {
        out << id << ": " << nodes_[id]->signature() << " <-";
        for (NodeId in : node_inputs_[id]) out << ' ' << in;
        out << '\n';
    }
    return out.str();
}

}  // namespace mmfusion
