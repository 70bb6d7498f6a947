#ifndef MMFUSION_TESTS_REFERENCE_KERNELS_HPP
#define MMFUSION_TESTS_REFERENCE_KERNELS_HPP

// Plain nested-loop reference implementations of the numeric kernels. These
// exist purely as oracles for the optimized kernels in the library and must
// stay independent of them: no shared helpers beyond the Tensor container,
// every sum written out directly from the definition.

#include <cmath>
#include <cstddef>

#include "mmfusion/tensor.hpp"

namespace refk {

// 3x3 cross-correlation, stride 1, zero "same" padding.
// x[C,H,W], w[OC,C,3,3], b[OC] -> [OC,H,W]
inline mmfusion::Tensor conv2d(const mmfusion::Tensor& x, const mmfusion::Tensor& w,
                               const mmfusion::Tensor& b) {
    const std::size_t C = x.dim(0), H = x.dim(1), W = x.dim(2), OC = w.dim(0);
    mmfusion::Tensor out({OC, H, W});
    for (std::size_t oc = 0; oc < OC; ++oc) {
        for (std::size_t y = 0; y < H; ++y) {
            for (std::size_t xx = 0; xx < W; ++xx) {
                double acc = b[oc];
                for (std::size_t c = 0; c < C; ++c) {
                    for (std::size_t ky = 0; ky < 3; ++ky) {
                        for (std::size_t kx = 0; kx < 3; ++kx) {
                            const long iy = static_cast<long>(y) + static_cast<long>(ky) - 1;
                            const long ix = static_cast<long>(xx) + static_cast<long>(kx) - 1;
                            if (iy < 0 || iy >= static_cast<long>(H)) continue;
                            if (ix < 0 || ix >= static_cast<long>(W)) continue;
                            acc += x.at(c, static_cast<std::size_t>(iy),
                                        static_cast<std::size_t>(ix)) *
                                   w.at(oc, c, ky, kx);
                        }
                    }
                }
                out.at(oc, y, xx) = acc;
            }
        }
    }
    return out;
}

// Non-overlapping 2x2 maxima; odd trailing rows/columns dropped.
inline mmfusion::Tensor maxpool2x2(const mmfusion::Tensor& x) {
    const std::size_t C = x.dim(0), OH = x.dim(1) / 2, OW = x.dim(2) / 2;
    mmfusion::Tensor out({C, OH, OW});
    for (std::size_t c = 0; c < C; ++c) {
        for (std::size_t oy = 0; oy < OH; ++oy) {
            for (std::size_t ox = 0; ox < OW; ++ox) {
                double m = x.at(c, 2 * oy, 2 * ox);
                if (x.at(c, 2 * oy, 2 * ox + 1) > m) m = x.at(c, 2 * oy, 2 * ox + 1);
                if (x.at(c, 2 * oy + 1, 2 * ox) > m) m = x.at(c, 2 * oy + 1, 2 * ox);
                if (x.at(c, 2 * oy + 1, 2 * ox + 1) > m) m = x.at(c, 2 * oy + 1, 2 * ox + 1);
                out.at(c, oy, ox) = m;
            }
        }
    }
    return out;
}

// Row vector times [in,out] weights plus bias.
inline mmfusion::Tensor dense(const mmfusion::Tensor& x, const mmfusion::Tensor& w,
                              const mmfusion::Tensor& b) {
    const std::size_t in = w.dim(0), out_dim = w.dim(1);
    mmfusion::Tensor y({out_dim});
    for (std::size_t j = 0; j < out_dim; ++j) {
        double acc = b[j];
        for (std::size_t i = 0; i < in; ++i) acc += x[i] * w.at(i, j);
        y[j] = acc;
    }
    return y;
}

// Softmax and cross-entropy straight from the definition, stabilized by the
// max logit. Returns the loss; fills probs_out when given.
inline double softmax_xent(const mmfusion::Tensor& logits, std::size_t label,
                           mmfusion::Tensor* probs_out = nullptr) {
    const std::size_t n = logits.size();
    double m = logits[0];
    for (std::size_t i = 1; i < n; ++i) {
        if (logits[i] > m) m = logits[i];
    }
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += std::exp(logits[i] - m);
    if (probs_out) {
        mmfusion::Tensor p({n});
        for (std::size_t i = 0; i < n; ++i) p[i] = std::exp(logits[i] - m) / s;
        *probs_out = std::move(p);
    }
    return std::log(s) - (logits[label] - m);
}

}  // namespace refk

#endif
