#ifndef MMFUSION_CHECKPOINT_HPP
#define MMFUSION_CHECKPOINT_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "mmfusion/graph.hpp"
#include "mmfusion/optim.hpp"

namespace mmfusion {

// FNV-1a over the graph's architecture signature (node kinds, wiring and
// parameter shapes).
std::uint64_t architecture_fingerprint(const Graph& g);

struct CheckpointInfo {
    std::string model_id;
    std::vector<EpochStats> history;
};

// Binary blob: magic, version, model id, architecture fingerprint, then the
// parameter tensors as little-endian float64 in parameters() order, then
// the loss history.
void save_checkpoint(Graph& g, const std::string& model_id,
                     const std::vector<EpochStats>& history, const std::string& path);

// Restores parameters into an already built graph. The stored fingerprint
// must match the graph exactly; a mismatch means the checkpoint belongs to
// a different architecture. A failed load leaves the graph untouched.
CheckpointInfo load_checkpoint(Graph& g, const std::string& path);

}  // namespace mmfusion

#endif
