#include "mmfusion/data.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <iterator>
#include <limits>

#include "mmfusion/errors.hpp"
#include "mmfusion/rng.hpp"

namespace mmfusion {

Tensor grayscale(const Tensor& rgb) {
    if (rgb.rank() != 3 || rgb.dim(2) != 3) {
        throw DimensionError("grayscale expects [H,W,3], got " + shape_string(rgb.shape()));
    }
    const std::size_t n = rgb.dim(0) * rgb.dim(1);
    Tensor out({rgb.dim(0), rgb.dim(1)});
    const double* src = rgb.data();
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = 0.299 * src[3 * i] + 0.587 * src[3 * i + 1] + 0.114 * src[3 * i + 2];
    }
    return out;
}

Tensor bilinear_resize(const Tensor& x, std::size_t out_h, std::size_t out_w) {
    if (x.rank() != 2) {
        throw DimensionError("bilinear_resize expects [H,W], got " + shape_string(x.shape()));
    }
    const std::size_t h = x.dim(0);
    const std::size_t w = x.dim(1);
    if (h < 2 || w < 2) {
        throw DimensionError("bilinear_resize needs source dims >= 2, got " +
                             shape_string(x.shape()));
    }
    if (out_h == 0 || out_w == 0) {
        throw DimensionError("bilinear_resize target dims must be positive");
    }
    Tensor out({out_h, out_w});
    const double sy = static_cast<double>(h) / static_cast<double>(out_h);
    const double sx = static_cast<double>(w) / static_cast<double>(out_w);

    // Half-pixel centers; edge samples clamp to the border row/column.
    std::vector<std::size_t> x0(out_w), x1(out_w);
    std::vector<double> tx(out_w);
    for (std::size_t j = 0; j < out_w; ++j) {
        const double fx = (static_cast<double>(j) + 0.5) * sx - 0.5;
        const double f0 = std::floor(fx);
        tx[j] = fx - f0;
        const std::ptrdiff_t i0 = static_cast<std::ptrdiff_t>(f0);
        x0[j] = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i0, 0, w - 1));
        x1[j] = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i0 + 1, 0, w - 1));
    }
    for (std::size_t i = 0; i < out_h; ++i) {
        const double fy = (static_cast<double>(i) + 0.5) * sy - 0.5;
        const double f0 = std::floor(fy);
        const double ty = fy - f0;
        const std::ptrdiff_t i0 = static_cast<std::ptrdiff_t>(f0);
        const std::size_t y0 = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i0, 0, h - 1));
        const std::size_t y1 = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i0 + 1, 0, h - 1));
        const double* r0 = x.data() + y0 * w;
        const double* r1 = x.data() + y1 * w;
        for (std::size_t j = 0; j < out_w; ++j) {
            const double top = r0[x0[j]] + tx[j] * (r0[x1[j]] - r0[x0[j]]);
            const double bot = r1[x0[j]] + tx[j] * (r1[x1[j]] - r1[x0[j]]);
            out.at(i, j) = top + ty * (bot - top);
        }
    }
    return out;
}

MultimodalSample preprocess_sample(const RawSample& raw, std::uint64_t sample_id) {
    MultimodalSample s;
    s.cam_left = bilinear_resize(grayscale(raw.rgb_left), 32, 32).reshaped({1, 32, 32});
    s.cam_right = bilinear_resize(grayscale(raw.rgb_right), 32, 32).reshaped({1, 32, 32});
    s.cam_rs = bilinear_resize(grayscale(raw.rgb_realsense), 32, 32).reshaped({1, 32, 32});
    s.depth_vec = bilinear_resize(raw.depth, 32, 32).reshaped({1, 1024});
    s.label = raw.label;
    s.view_angle = raw.view_angle;
    s.sample_id = sample_id;
    return s;
}

std::vector<MultimodalSample> preprocess(const std::vector<RawSample>& raws) {
    std::vector<MultimodalSample> out;
    out.reserve(raws.size());
    for (std::size_t i = 0; i < raws.size(); ++i) {
        out.push_back(preprocess_sample(raws[i], i));
    }
    return out;
}

DatasetSplit split_dataset(std::vector<MultimodalSample> samples, std::uint64_t seed) {
    if (samples.size() < 4) {
        throw ArgumentError("need at least 4 samples to split, got " +
                            std::to_string(samples.size()));
    }
    Rng rng(seed);
    shuffle(samples, rng);
    const std::size_t n_train = samples.size() / 2;
    const std::size_t n_val = samples.size() / 4;
    DatasetSplit split;
    split.seed = seed;
    auto it = std::make_move_iterator(samples.begin());
    split.train.assign(it, it + static_cast<std::ptrdiff_t>(n_train));
    split.validation.assign(it + static_cast<std::ptrdiff_t>(n_train),
                            it + static_cast<std::ptrdiff_t>(n_train + n_val));
    split.test.assign(it + static_cast<std::ptrdiff_t>(n_train + n_val),
                      std::make_move_iterator(samples.end()));
    return split;
}

DatasetSplit normalize(DatasetSplit split) {
    double dmin = std::numeric_limits<double>::infinity();
    double dmax = -std::numeric_limits<double>::infinity();
    for (const MultimodalSample& s : split.train) {
        for (std::size_t i = 0; i < s.depth_vec.size(); ++i) {
            dmin = std::min(dmin, s.depth_vec[i]);
            dmax = std::max(dmax, s.depth_vec[i]);
        }
    }
    const bool degenerate = !(dmax > dmin);
    if (degenerate) {
        std::cerr << "warning: train depth range is degenerate; depth normalized to 0\n";
    }
    const double scale = degenerate ? 0.0 : 1.0 / (dmax - dmin);
    auto norm_one = [&](MultimodalSample& s) {
        for (Tensor* cam : {&s.cam_left, &s.cam_right, &s.cam_rs}) {
            for (std::size_t i = 0; i < cam->size(); ++i) (*cam)[i] /= 255.0;
        }
        for (std::size_t i = 0; i < s.depth_vec.size(); ++i) {
            const double v = degenerate ? 0.0 : (s.depth_vec[i] - dmin) * scale;
            s.depth_vec[i] = std::clamp(v, 0.0, 1.0);
        }
    };
    for (MultimodalSample& s : split.train) norm_one(s);
    for (MultimodalSample& s : split.validation) norm_one(s);
    for (MultimodalSample& s : split.test) norm_one(s);
    return split;
}

Modality modality_from_string(const std::string& name) {
    if (name == "cam_left") return Modality::cam_left;
    if (name == "cam_right") return Modality::cam_right;
    if (name == "cam_rs") return Modality::cam_rs;
    if (name == "depth") return Modality::depth;
    throw ArgumentError("unknown modality '" + name +
                        "' (expected cam_left, cam_right, cam_rs or depth)");
}

std::string to_string(Modality m) {
    switch (m) {
        case Modality::cam_left: return "cam_left";
        case Modality::cam_right: return "cam_right";
        case Modality::cam_rs: return "cam_rs";
        case Modality::depth: return "depth";
    }
    throw ArgumentError("invalid modality value");
}

DatasetSplit corrupt_modality(DatasetSplit split, Modality m, std::uint64_t seed) {
    Rng rng(seed);
    auto pick = [m](MultimodalSample& s) -> Tensor& {
        switch (m) {
            case Modality::cam_left: return s.cam_left;
            case Modality::cam_right: return s.cam_right;
            case Modality::cam_rs: return s.cam_rs;
            default: return s.depth_vec;
        }
    };
    auto corrupt_list = [&](std::vector<MultimodalSample>& list) {
        for (MultimodalSample& s : list) {
            Tensor& t = pick(s);
            for (std::size_t i = 0; i < t.size(); ++i) {
                t[i] = static_cast<double>(rng.uniform_u8());
            }
        }
    };
    corrupt_list(split.train);
    corrupt_list(split.validation);
    corrupt_list(split.test);
    return split;
}

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kBackgroundMm = 2800.0;

// Shape families 0..4 are a solid disk with one thin annular gap whose
// position (relative to the disk edge) is the family id. Every view shows the
// whole figure, but under the scale jitter the absolute gap radius of
// neighbouring families overlaps, so a classifier has to measure the gap
// against the edge rather than read off a pixel count. Rotation jitter never
// blurs the boundary (the families are radially symmetric); larger indices
// fall back to stars with an increasing arm count.
bool inside_shape(std::size_t shape_idx, double dx, double dy, double radius,
                  double rot) {
    const double r = std::hypot(dx, dy);
    if (r > radius) return false;
    const double u = r / radius;
    if (shape_idx < 5) {
        const double gap = 0.30 + 0.12 * static_cast<double>(shape_idx);
        return std::abs(u - gap) >= 0.06;
    }
    const double phi = std::atan2(dy, dx) - rot;
    const double arms = static_cast<double>(shape_idx - 2);
    return r <= radius * (0.62 + 0.38 * std::cos(arms * phi));
}

double depth_level_mm(std::size_t depth_idx, std::size_t n_levels) {
    if (n_levels <= 1) return 500.0;
    return 500.0 + static_cast<double>(depth_idx) *
                       (1400.0 / static_cast<double>(n_levels - 1));
}

struct Placement {
    double cx, cy, rot, radius;
};

Placement draw_placement(std::size_t h, std::size_t w, Rng& rng) {
    Placement p;
    p.cx = static_cast<double>(w) / 2.0 + rng.uniform(-3.0, 3.0);
    p.cy = static_cast<double>(h) / 2.0 + rng.uniform(-3.0, 3.0);
    p.rot = rng.uniform(0.0, 2.0 * kPi);
    p.radius = 0.30 * static_cast<double>(std::min(h, w)) *
               (1.0 + rng.uniform(-0.20, 0.20));
    return p;
}

// The background is per-pixel uniform noise, the same distribution a dead
// sensor produces, and with a small probability a view misses the figure
// entirely (the object is out of that camera's frame). An all-noise camera
// plane is therefore inside the training distribution, so a model facing a
// dead sensor sees the familiar "figure not visible" case and degrades
// gracefully instead of being pushed off-manifold.
constexpr double kMissProb = 0.12;

Tensor render_camera(std::size_t shape_idx, std::size_t h, std::size_t w, Rng& rng) {
    const Placement p = draw_placement(h, w, rng);
    const bool missing = rng.uniform(0.0, 1.0) < kMissProb;
    Tensor img({h, w, 3});
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            const double dx = static_cast<double>(x) - p.cx;
            const double dy = static_cast<double>(y) - p.cy;
            const bool on =
                !missing && inside_shape(shape_idx, dx, dy, p.radius, p.rot);
            double v = on ? 240.0 + rng.normal(0.0, 4.0)
                          : std::floor(rng.uniform(0.0, 256.0));
            v = std::round(std::clamp(v, 0.0, 255.0));
            img.at(y, x, 0) = v;
            img.at(y, x, 1) = v;
            img.at(y, x, 2) = v;
        }
    }
    return img;
}

Tensor render_depth(std::size_t depth_idx, std::size_t n_levels, std::size_t h,
                    std::size_t w, Rng& rng) {
    const Placement p = draw_placement(h, w, rng);
    const double level = depth_level_mm(depth_idx, n_levels);
    Tensor img({h, w});
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            const double r = std::hypot(static_cast<double>(x) - p.cx,
                                        static_cast<double>(y) - p.cy);
            double v = (r <= p.radius ? level : kBackgroundMm) + rng.normal(0.0, 8.0);
            img.at(y, x) = std::round(std::max(v, 0.0));
        }
    }
    return img;
}

void validate_synthetic(const SyntheticConfig& cfg) {
    if (cfg.n_classes < 2) {
        throw ArgumentError("synthetic data needs at least 2 classes, got " +
                            std::to_string(cfg.n_classes));
    }
    if (cfg.views_per_class == 0) {
        throw ArgumentError("views_per_class must be positive");
    }
    if (cfg.height < 8 || cfg.width < 8) {
        throw ArgumentError("synthetic canvas must be at least 8x8");
    }
    if (cfg.complementary) {
        if (cfg.shape_classes < 2 || cfg.depth_classes < 2) {
            throw ArgumentError("complementary mode needs shape_classes >= 2 and "
                                "depth_classes >= 2");
        }
        if (cfg.shape_classes * cfg.depth_classes != cfg.n_classes) {
            throw ArgumentError("complementary mode needs n_classes == shape_classes * "
                                "depth_classes");
        }
    }
}

// Every sample gets its own placement and noise draw, seeded from the full
// (label, view, modality) triple. The camera renderer still consumes only the
// shape id and the depth renderer only the depth id, so in complementary mode
// no modality carries the other factor of the label; independent seeding on
// top of that keeps any single rendering from reappearing in another split
// under a different label.
RawSample make_raw(const SyntheticConfig& cfg, std::uint64_t seed, std::size_t label,
                   std::size_t view) {
    std::size_t shape_idx = label;
    std::size_t depth_idx = label;
    std::size_t n_levels = cfg.n_classes;
    if (cfg.complementary) {
        shape_idx = label / cfg.depth_classes;
        depth_idx = label % cfg.depth_classes;
        n_levels = cfg.depth_classes;
    }
    RawSample raw;
    Tensor* cams[3] = {&raw.rgb_left, &raw.rgb_right, &raw.rgb_realsense};
    for (std::uint64_t cam = 0; cam < 3; ++cam) {
        Rng rng(derive_seed(seed, 1 + cam, label, view));
        *cams[cam] = render_camera(shape_idx, cfg.height, cfg.width, rng);
    }
    Rng drng(derive_seed(seed, 7, label, view));
    raw.depth = render_depth(depth_idx, n_levels, cfg.height, cfg.width, drng);
    raw.label = static_cast<int>(label);
    raw.view_angle = static_cast<double>(view) * 360.0 /
                     static_cast<double>(cfg.views_per_class);
    return raw;
}

}  // namespace

std::vector<RawSample> generate_synthetic(const SyntheticConfig& cfg, std::uint64_t seed) {
    validate_synthetic(cfg);
    std::vector<RawSample> out;
    out.reserve(cfg.n_classes * cfg.views_per_class);
    for (std::size_t label = 0; label < cfg.n_classes; ++label) {
        for (std::size_t view = 0; view < cfg.views_per_class; ++view) {
            out.push_back(make_raw(cfg, seed, label, view));
        }
    }
    return out;
}

std::vector<RawSample> generate_synthetic(std::size_t n_classes,
                                          std::size_t views_per_class,
                                          std::uint64_t seed) {
    SyntheticConfig cfg;
    cfg.n_classes = n_classes;
    cfg.views_per_class = views_per_class;
    return generate_synthetic(cfg, seed);
}

std::vector<MultimodalSample> generate_multimodal(const SyntheticConfig& cfg,
                                                  std::uint64_t seed) {
    validate_synthetic(cfg);
    std::vector<MultimodalSample> out;
    out.reserve(cfg.n_classes * cfg.views_per_class);
    std::uint64_t id = 0;
    for (std::size_t label = 0; label < cfg.n_classes; ++label) {
        for (std::size_t view = 0; view < cfg.views_per_class; ++view) {
            out.push_back(preprocess_sample(make_raw(cfg, seed, label, view), id++));
        }
    }
    return out;
}

}  // namespace mmfusion
