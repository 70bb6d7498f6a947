#ifndef MMFUSION_GRAPH_HPP
#define MMFUSION_GRAPH_HPP

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mmfusion/rng.hpp"
#include "mmfusion/tensor.hpp"

namespace mmfusion {

using NodeId = std::size_t;

// One layer instance in a computation graph. Subclasses implement the layer
// math; parameters and their gradient slots live here so the optimizer can
// walk them uniformly.
class Node {
public:
    struct Param {
        std::string name;
        Tensor value;
        Tensor grad;
    };

    virtual ~Node() = default;

    virtual std::string_view kind() const = 0;

    // Consumes the activations of this node's inputs, returns its own.
    // May stash whatever backward() will need.
    virtual Tensor forward(const std::vector<const Tensor*>& xs) = 0;

    // Upstream gradient in, one gradient per input out. Parameter gradients
    // are accumulated into params_ (they persist until zero_grads).
    virtual std::vector<Tensor> backward(const Tensor& upstream) = 0;

    // Drops forward caches; called once the matching backward has run.
    virtual void clear_cache() {}

    std::vector<Param>& params() { return params_; }
    const std::vector<Param>& params() const { return params_; }

    // Stable description of this node's configuration (kind + param shapes),
    // used for checkpoint fingerprints.
    std::string signature() const;

protected:
    std::vector<Param> params_;
};

struct ParamRef {
    NodeId node;
    std::string_view name;
    Tensor* value;
    Tensor* grad;
};

// Directed acyclic graph of layer nodes. Nodes are appended in topological
// order (a node may only consume previously added nodes); the unique sink is
// the graph output. Entry points are named input nodes, one per modality.
class Graph {
public:
    using Inputs = std::vector<std::pair<std::string, const Tensor*>>;

    Graph() = default;
    Graph(Graph&&) = default;
    Graph& operator=(Graph&&) = default;
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    NodeId add_input(std::string name, std::vector<std::size_t> shape);
    NodeId add(std::unique_ptr<Node> node, std::vector<NodeId> inputs);

    // Builder helpers. Parameterized layers draw their initial weights from
    // `rng` (He-scaled normals, zero biases).
    NodeId conv2d(NodeId x, std::size_t in_channels, std::size_t out_channels, Rng& rng);
    NodeId relu(NodeId x);
    NodeId maxpool2x2(NodeId x);
    NodeId flatten(NodeId x);
    NodeId dense(NodeId x, std::size_t in_dim, std::size_t out_dim, Rng& rng);
    NodeId concat(std::vector<NodeId> xs);
    NodeId softmax(NodeId x);

    // Evaluates every node and returns the sink activation. Caches per-node
    // activations for a subsequent backward.
    const Tensor& forward(const Inputs& inputs);

    // Reverse-mode sweep from the sink. Gradients at fan-out points are
    // summed. Forward caches are invalidated afterwards.
    void backward(const Tensor& loss_grad);

    // All parameters in topological node order, declaration order within a
    // node. The order is stable across calls.
    std::vector<ParamRef> parameters();

    void zero_grads();

    std::size_t node_count() const { return nodes_.size(); }
    NodeId output_node() const;
    const Node& node(NodeId id) const;
    Node& node(NodeId id);
    const std::vector<NodeId>& inputs_of(NodeId id) const;

    // Activation of a node, valid between forward and backward.
    const Tensor& activation(NodeId id) const;

    // Gradient of the loss with respect to a named entry tensor; valid after
    // backward until the next forward.
    const Tensor& entry_gradient(const std::string& name) const;

    const std::vector<std::pair<std::string, NodeId>>& entries() const { return entries_; }

    // Checks single-sink topology and that every node is reachable from an
    // entry point. Throws StateError on violation.
    void validate() const;

    // Canonical multi-line description of the architecture; two graphs built
    // the same way produce identical text.
    std::string architecture_signature() const;

private:
    std::vector<std::unique_ptr<Node>> nodes_;
    std::vector<std::vector<NodeId>> node_inputs_;
    std::vector<std::pair<std::string, NodeId>> entries_;
    std::vector<Tensor> activations_;
    std::vector<Tensor> grad_buffers_;
    bool forward_valid_ = false;
    bool grads_valid_ = false;

    std::string node_label(NodeId id) const;
};

// He-scaled normal fill: stddev = sqrt(2 / fan_in).
void he_init(Tensor& t, std::size_t fan_in, Rng& rng);

}  // namespace mmfusion

#endif
