#ifndef MMFUSION_DATA_HPP
#define MMFUSION_DATA_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mmfusion/tensor.hpp"

namespace mmfusion {

// One recorded view straight off the sensors: three RGB images with 0..255
// channel values and a depth plane in millimeters.
struct RawSample {
    Tensor rgb_left;       // [H,W,3]
    Tensor rgb_right;      // [H,W,3]
    Tensor rgb_realsense;  // [H,W,3]
    Tensor depth;          // [H,W], millimeters
    int label = 0;
    double view_angle = 0.0;  // degrees, metadata only
};

// The model-facing form of one view: grayscale 32x32 camera planes and the
// depth plane flattened to a 1024-vector. Values are 0..255 / millimeters
// until normalize() runs, and in [0,1] afterwards.
struct MultimodalSample {
    Tensor cam_left;   // [1,32,32]
    Tensor cam_right;  // [1,32,32]
    Tensor cam_rs;     // [1,32,32]
    Tensor depth_vec;  // [1,1024]
    int label = 0;
    double view_angle = 0.0;
    std::uint64_t sample_id = 0;
};

struct DatasetSplit {
    std::vector<MultimodalSample> train;
    std::vector<MultimodalSample> validation;
    std::vector<MultimodalSample> test;
    std::uint64_t seed = 0;
};

// BT.601 luminance, 0.299 R + 0.587 G + 0.114 B, kept real-valued.
Tensor grayscale(const Tensor& rgb);

// Bilinear resampling with half-pixel centers (align-corners = false).
// Source dims must be at least 2; constant inputs stay constant.
Tensor bilinear_resize(const Tensor& x, std::size_t out_h, std::size_t out_w);

MultimodalSample preprocess_sample(const RawSample& raw, std::uint64_t sample_id);
std::vector<MultimodalSample> preprocess(const std::vector<RawSample>& raws);

// Seeded shuffle, then a 50/25/25 cut by position (train gets floor(n/2),
// validation floor(n/4), test the rest). Needs at least 4 samples.
DatasetSplit split_dataset(std::vector<MultimodalSample> samples, std::uint64_t seed);

// Scales camera planes by 1/255 and min-max scales depth using the TRAIN
// split's range only; validation/test depth is clamped to [0,1]. A
// degenerate train depth range maps all depth to 0 and warns on stderr.
DatasetSplit normalize(DatasetSplit split);

enum class Modality { cam_left, cam_right, cam_rs, depth };

Modality modality_from_string(const std::string& name);
std::string to_string(Modality m);

// Replaces the chosen modality in train, validation and test with fresh
// integer-uniform 0..255 draws. Meant to run before normalize() so the
// noise follows the same scaling as real data.
DatasetSplit corrupt_modality(DatasetSplit split, Modality m, std::uint64_t seed);

struct SyntheticConfig {
    std::size_t n_classes = 10;
    std::size_t views_per_class = 72;
    // In complementary mode the label factors into a shape id (visible only
    // to the cameras) and a depth-profile id (visible only to the depth
    // sensor); n_classes must equal shape_classes * depth_classes. The camera
    // renderer consumes only the shape id and the depth renderer only the
    // depth id, so each modality's accuracy is capped by construction at
    // 1/depth_classes (cameras) and 1/shape_classes (depth).
    bool complementary = false;
    std::size_t shape_classes = 0;
    std::size_t depth_classes = 0;
    std::size_t height = 64;
    std::size_t width = 64;
};

std::vector<RawSample> generate_synthetic(const SyntheticConfig& cfg, std::uint64_t seed);
std::vector<RawSample> generate_synthetic(std::size_t n_classes,
                                          std::size_t views_per_class,
                                          std::uint64_t seed);

// generate + preprocess in one pass without keeping full-resolution frames.
std::vector<MultimodalSample> generate_multimodal(const SyntheticConfig& cfg,
                                                  std::uint64_t seed);

// Directory tree `<root>/<object_id>/<view_index>/{left.png, right.png,
// rs_rgb.png, depth.bin}`. Labels come from the object directory names;
// depth.bin must hold height*width little-endian u16 millimeter values
// matching the PNG dimensions. Missing or unreadable files fail loudly.
std::vector<RawSample> load_icub_dataset(const std::string& root);

// Streaming variant: each view is handed to the callback and then dropped,
// so full-resolution frames never accumulate.
void scan_icub_dataset(const std::string& root,
                       const std::function<void(RawSample&&)>& fn);
std::vector<MultimodalSample> load_and_preprocess_icub(const std::string& root);

// Binary container for preprocessed samples: 16-byte magic, version byte,
// u64 sample count, then per sample a little-endian i32 label, three 32x32
// float32 planes (left, right, realsense) and 1024 float32 depth values.
// Import assigns fresh sequential sample ids.
void write_sample_container(const std::vector<MultimodalSample>& samples,
                            const std::string& path);
std::vector<MultimodalSample> read_sample_container(const std::string& path);

// train.bin / validation.bin / test.bin under one directory.
void write_split_containers(const DatasetSplit& split, const std::string& dir);
DatasetSplit read_split_containers(const std::string& dir);

}  // namespace mmfusion

#endif
