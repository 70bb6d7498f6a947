#ifndef MMFUSION_MODELS_HPP
#define MMFUSION_MODELS_HPP

#include <array>
#include <cstdint>
#include <vector>

#include "mmfusion/data.hpp"
#include "mmfusion/graph.hpp"
#include "mmfusion/metrics.hpp"
#include "mmfusion/optim.hpp"

namespace mmfusion {

// Layer widths. Defaults follow the reference architecture; smaller values
// give faster, structurally identical models.
struct ModelDims {
    std::size_t conv1 = 32;
    std::size_t conv2 = 64;
    std::size_t conv3 = 64;
    std::size_t cnn_dense = 128;
    std::size_t mlp_hidden = 256;
    std::size_t fusion_dense = 128;
};

// Camera classifier. Entry "image" [1,32,32]; three conv/relu/pool stages,
// then a dense+relu representation and a softmax head.
struct CnnStream {
    Graph graph;
    NodeId input = 0;
    NodeId repr = 0;    // dense+relu representation (cnn_dense wide)
    NodeId logits = 0;  // pre-softmax dense
    NodeId output = 0;  // softmax probabilities [1, n_classes]
};

// Depth classifier. Entry "depth" [1,1024]; three dense+relu hidden layers
// and a softmax head.
struct DepthMlp {
    Graph graph;
    NodeId input = 0;
    NodeId repr = 0;  // third hidden activation (mlp_hidden wide)
    NodeId logits = 0;
    NodeId output = 0;
};

// Jointly trained fusion network. Entries "cam_left", "cam_right", "cam_rs"
// [1,32,32] and "depth" [1,1024]. The three camera trunks end at their
// dense+relu representation; those concatenate into the shared
// representation, which concatenates with the depth trunk's last hidden
// layer before the fused dense+relu and the softmax head.
struct FusionGraph {
    Graph graph;
    std::array<NodeId, 3> cam_reprs{};
    NodeId mlp_repr = 0;
    NodeId shared = 0;  // concat of the camera representations
    NodeId joint = 0;   // concat(shared, mlp_repr)
    NodeId logits = 0;
    NodeId output = 0;
};

CnnStream build_cnn_stream(std::size_t n_classes, std::uint64_t seed,
                           const ModelDims& dims = {});
DepthMlp build_depth_mlp(std::size_t n_classes, std::uint64_t seed,
                         const ModelDims& dims = {});
// identical_camera_init seeds all three camera trunks with the same stream,
// making their initial weights coincide; by default each trunk draws its
// own.
FusionGraph build_intermediate_fusion(std::size_t n_classes, std::uint64_t seed,
                                      const ModelDims& dims = {},
                                      bool identical_camera_init = false);

// Forward pass returning a copy of the probability vector.
Tensor predict_proba(Graph& g, const Graph::Inputs& inputs);

struct DecisionFusion {
    Tensor fused;  // raw elementwise sum of the inputs
    int predicted = 0;
};

// Sums probability vectors and takes the argmax (lowest index on ties).
DecisionFusion decision_fusion(const std::vector<Tensor>& probas);

// Entry bindings for one modality ("image" for cameras, "depth" for the
// MLP). The returned examples point into `samples`, which must stay alive
// and unmoved while they are used.
std::vector<Example> make_examples(const std::vector<MultimodalSample>& samples,
                                   Modality m);
std::vector<Example> make_fusion_examples(const std::vector<MultimodalSample>& samples);

// Training setup shared by one experiment run. Patience is the per-family
// difference in the reference protocol; everything else is common.
struct ModelTrainConfig {
    ModelDims dims;
    AdamConfig adam;
    std::size_t batch_size = 64;
    std::size_t max_epochs = 600;
    double min_delta = 0.01;
    std::size_t cnn_patience = 20;
    std::size_t mlp_patience = 150;
    std::size_t fusion_patience = 150;
    std::uint64_t seed = 0;
};

struct ExperimentResult {
    Graph graph;
    EvalReport report;
    TrainResult training;
};

std::size_t n_classes_of(const DatasetSplit& split);

// Throws if train/validation/test share a sample id.
void check_no_leakage(const DatasetSplit& split);

// Trains one unimodal model on its modality and evaluates on the test set.
ExperimentResult run_unimodal_experiment(const DatasetSplit& split, Modality m,
                                         const ModelTrainConfig& cfg);

// Evaluates the summed decision vectors of already trained unimodal models
// (left, right, realsense, depth in that order) on the test set.
EvalReport fuse_and_evaluate(const DatasetSplit& split,
                             std::array<Graph*, 4> models);

struct DecisionFusionOutcome {
    EvalReport report;
    // left, right, realsense, depth in order.
    std::vector<ExperimentResult> models;
};

// Trains the four unimodal models independently, then fuses their test-set
// decision vectors.
DecisionFusionOutcome run_decision_fusion_experiment(const DatasetSplit& split,
                                                     const ModelTrainConfig& cfg);

// Trains the fusion graph end to end with a single optimizer.
ExperimentResult run_intermediate_fusion_experiment(const DatasetSplit& split,
                                                    const ModelTrainConfig& cfg);

}  // namespace mmfusion

#endif
