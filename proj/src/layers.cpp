#include "mmfusion/layers.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "mmfusion/errors.hpp"

namespace mmfusion {

namespace {

constexpr std::size_t kKernel = 3;

void check_conv_shapes(const Tensor& x, const Tensor& w, const Tensor& b) {
    if (x.rank() != 3) {
        throw DimensionError("conv2d input must be [C,H,W], got " + shape_string(x.shape()));
    }
    if (w.rank() != 4 || w.dim(2) != kKernel || w.dim(3) != kKernel) {
        throw DimensionError("conv2d weights must be [OC,C,3,3], got " + shape_string(w.shape()));
    }
    if (x.dim(0) != w.dim(1)) {
        throw DimensionError("conv2d channel mismatch: input " + shape_string(x.shape()) +
                             " vs weights " + shape_string(w.shape()));
    }
    if (b.rank() != 1 || b.dim(0) != w.dim(0)) {
        throw DimensionError("conv2d bias must be [OC], got " + shape_string(b.shape()));
    }
}

// Vector length as a flat size, accepting [N] and [1,N].
std::size_t vector_width(const Tensor& t, const char* what) {
    if (t.rank() == 1) return t.dim(0);
    if (t.rank() == 2 && t.dim(0) == 1) return t.dim(1);
    throw DimensionError(std::string(what) + " expects a vector, got " + shape_string(t.shape()));
}

}  // namespace

Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b) {
    check_conv_shapes(x, w, b);
    const std::size_t C = x.dim(0), H = x.dim(1), W = x.dim(2), OC = w.dim(0);
    Tensor out({OC, H, W});
    const double* px = x.data();
    const double* pw = w.data();
    double* po = out.data();
    for (std::size_t oc = 0; oc < OC; ++oc) {
        double* plane = po + oc * H * W;
        const double bias = b[oc];
        for (std::size_t i = 0; i < H * W; ++i) plane[i] = bias;
        for (std::size_t ic = 0; ic < C; ++ic) {
            const double* xplane = px + ic * H * W;
            for (std::size_t ky = 0; ky < kKernel; ++ky) {
                for (std::size_t kx = 0; kx < kKernel; ++kx) {
                    const double wv = pw[((oc * C + ic) * kKernel + ky) * kKernel + kx];
                    // output (y,x) reads input (y+ky-1, x+kx-1); clip to bounds
                    const std::size_t y0 = ky == 0 ? 1 : 0;
                    const std::size_t y1 = ky == 2 ? H - 1 : H;
                    const std::size_t x0 = kx == 0 ? 1 : 0;
                    const std::size_t x1 = kx == 2 ? W - 1 : W;
                    for (std::size_t y = y0; y < y1; ++y) {
                        const double* src = xplane + (y + ky - 1) * W + (x0 + kx - 1);
                        double* dst = plane + y * W + x0;
                        const std::size_t n = x1 - x0;
                        for (std::size_t i = 0; i < n; ++i) dst[i] += wv * src[i];
                    }
                }
            }
        }
    }
    return out;
}

Conv2dGrads conv2d_backward(const Tensor& x, const Tensor& w, const Tensor& g) {
    check_conv_shapes(x, w, Tensor({w.dim(0)}));
    const std::size_t C = x.dim(0), H = x.dim(1), W = x.dim(2), OC = w.dim(0);
    if (g.shape() != std::vector<std::size_t>{OC, H, W}) {
        throw DimensionError("conv2d upstream gradient shape " + shape_string(g.shape()) +
                             " does not match output [OC,H,W]");
    }
    Conv2dGrads grads{Tensor(x.shape()), Tensor(w.shape()), Tensor({OC})};
    const double* px = x.data();
    const double* pw = w.data();
    const double* pg = g.data();
    double* pdx = grads.dx.data();
    double* pdw = grads.dw.data();

    for (std::size_t oc = 0; oc < OC; ++oc) {
        const double* gplane = pg + oc * H * W;
        double acc = 0.0;
        for (std::size_t i = 0; i < H * W; ++i) acc += gplane[i];
        grads.db[oc] = acc;

        for (std::size_t ic = 0; ic < C; ++ic) {
            const double* xplane = px + ic * H * W;
            double* dxplane = pdx + ic * H * W;
            for (std::size_t ky = 0; ky < kKernel; ++ky) {
                for (std::size_t kx = 0; kx < kKernel; ++kx) {
                    const std::size_t y0 = ky == 0 ? 1 : 0;
                    const std::size_t y1 = ky == 2 ? H - 1 : H;
                    const std::size_t x0 = kx == 0 ? 1 : 0;
                    const std::size_t x1 = kx == 2 ? W - 1 : W;
                    const std::size_t n = x1 - x0;
                    // dw: correlate the upstream gradient with the input
                    double wacc = 0.0;
                    for (std::size_t y = y0; y < y1; ++y) {
                        const double* srcx = xplane + (y + ky - 1) * W + (x0 + kx - 1);
                        const double* srcg = gplane + y * W + x0;
                        for (std::size_t i = 0; i < n; ++i) wacc += srcx[i] * srcg[i];
                    }
                    const std::size_t widx = ((oc * C + ic) * kKernel + ky) * kKernel + kx;
                    pdw[widx] += wacc;
                    // dx: scatter the upstream gradient back through the tap
                    const double wv = pw[widx];
                    for (std::size_t y = y0; y < y1; ++y) {
                        double* dst = dxplane + (y + ky - 1) * W + (x0 + kx - 1);
                        const double* srcg = gplane + y * W + x0;
                        for (std::size_t i = 0; i < n; ++i) dst[i] += wv * srcg[i];
                    }
                }
            }
        }
    }
    return grads;
}

Tensor maxpool2x2_forward(const Tensor& x, std::vector<std::uint32_t>* argmax_out) {
    if (x.rank() != 3) {
        throw DimensionError("maxpool input must be [C,H,W], got " + shape_string(x.shape()));
    }
    const std::size_t C = x.dim(0), H = x.dim(1), W = x.dim(2);
    if (H < 2 || W < 2) {
        throw DimensionError("maxpool needs height and width >= 2, got " + shape_string(x.shape()));
    }
    const std::size_t OH = H / 2, OW = W / 2;
    Tensor out({C, OH, OW});
    if (argmax_out) argmax_out->assign(C * OH * OW, 0);
    const double* px = x.data();
    double* po = out.data();
    for (std::size_t c = 0; c < C; ++c) {
        const double* plane = px + c * H * W;
        for (std::size_t oy = 0; oy < OH; ++oy) {
            for (std::size_t ox = 0; ox < OW; ++ox) {
                std::size_t best = (2 * oy) * W + 2 * ox;
                double bestv = plane[best];
                const std::size_t cand[3] = {(2 * oy) * W + 2 * ox + 1,
                                             (2 * oy + 1) * W + 2 * ox,
                                             (2 * oy + 1) * W + 2 * ox + 1};
                for (std::size_t idx : cand) {
                    if (plane[idx] > bestv) {
                        bestv = plane[idx];
                        best = idx;
                    }
                }
                const std::size_t o = (c * OH + oy) * OW + ox;
                po[o] = bestv;
                if (argmax_out) (*argmax_out)[o] = static_cast<std::uint32_t>(c * H * W + best);
            }
        }
    }
    return out;
}

Tensor maxpool2x2_backward(const std::vector<std::size_t>& x_shape,
                           const std::vector<std::uint32_t>& argmax, const Tensor& g) {
    if (g.size() != argmax.size()) {
        throw DimensionError("maxpool backward: gradient has " + std::to_string(g.size()) +
                             " elements but " + std::to_string(argmax.size()) + " were pooled");
    }
    Tensor dx(x_shape);
    for (std::size_t i = 0; i < argmax.size(); ++i) dx[argmax[i]] += g[i];
    return dx;
}

Tensor relu_forward(const Tensor& x) {
    Tensor out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
    return out;
}

Tensor relu_backward(const Tensor& x, const Tensor& g) {
    if (!x.same_shape(g)) {
        throw DimensionError("relu backward shape mismatch: " + shape_string(x.shape()) + " vs " +
                             shape_string(g.shape()));
    }
    Tensor dx(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) dx[i] = x[i] > 0.0 ? g[i] : 0.0;
    return dx;
}

Tensor dense_forward(const Tensor& x, const Tensor& w, const Tensor& b) {
    const std::size_t in = vector_width(x, "dense");
    if (w.rank() != 2 || w.dim(0) != in) {
        throw DimensionError("dense weights " + shape_string(w.shape()) +
                             " do not accept input of width " + std::to_string(in));
    }
    const std::size_t out_dim = w.dim(1);
    if (b.rank() != 1 || b.dim(0) != out_dim) {
        throw DimensionError("dense bias must be [out], got " + shape_string(b.shape()));
    }
    Tensor y = matmul(x.rank() == 2 ? x : x.reshaped({1, in}), w);
    for (std::size_t j = 0; j < out_dim; ++j) y[j] += b[j];
    return x.rank() == 2 ? y : y.reshaped({out_dim});
}

DenseGrads dense_backward(const Tensor& x, const Tensor& w, const Tensor& g) {
    const std::size_t in = vector_width(x, "dense");
    const std::size_t out_dim = vector_width(g, "dense gradient");
    if (w.rank() != 2 || w.dim(0) != in || w.dim(1) != out_dim) {
        throw DimensionError("dense backward shapes disagree: x " + shape_string(x.shape()) +
                             ", w " + shape_string(w.shape()) + ", g " + shape_string(g.shape()));
    }
    DenseGrads grads{Tensor(x.shape()), Tensor(w.shape()), Tensor({out_dim})};
    const double* px = x.data();
    const double* pw = w.data();
    const double* pg = g.data();
    for (std::size_t j = 0; j < out_dim; ++j) grads.db[j] = pg[j];
    double* pdw = grads.dw.data();
    double* pdx = grads.dx.data();
    for (std::size_t i = 0; i < in; ++i) {
        const double xv = px[i];
        const double* wrow = pw + i * out_dim;
        double* dwrow = pdw + i * out_dim;
        double acc = 0.0;
        for (std::size_t j = 0; j < out_dim; ++j) {
            dwrow[j] = xv * pg[j];
            acc += wrow[j] * pg[j];
        }
        pdx[i] = acc;
    }
    return grads;
}

Tensor concat_forward(const std::vector<const Tensor*>& xs) {
    if (xs.empty()) throw ArgumentError("concat of zero tensors");
    std::size_t total = 0;
    for (const Tensor* t : xs) total += vector_width(*t, "concat");
    Tensor out({total});
    std::size_t offset = 0;
    for (const Tensor* t : xs) {
        std::memcpy(out.data() + offset, t->data(), t->size() * sizeof(double));
        offset += t->size();
    }
    return out;
}

std::vector<Tensor> concat_backward(const std::vector<std::size_t>& widths, const Tensor& g) {
    std::size_t total = 0;
    for (std::size_t w : widths) total += w;
    if (g.size() != total) {
        throw DimensionError("concat backward: gradient width " + std::to_string(g.size()) +
                             " does not match concatenated width " + std::to_string(total));
    }
    std::vector<Tensor> slices;
    slices.reserve(widths.size());
    std::size_t offset = 0;
    for (std::size_t w : widths) {
        Tensor s({w});
        std::memcpy(s.data(), g.data() + offset, w * sizeof(double));
        offset += w;
        slices.push_back(std::move(s));
    }
    return slices;
}

Tensor softmax(const Tensor& logits) {
    const std::size_t n = vector_width(logits, "softmax");
    Tensor p(logits.shape());
    double maxv = logits[0];
    for (std::size_t i = 1; i < n; ++i) maxv = std::max(maxv, logits[i]);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        p[i] = std::exp(logits[i] - maxv);
        sum += p[i];
    }
    for (std::size_t i = 0; i < n; ++i) p[i] /= sum;
    return p;
}

Tensor softmax_backward(const Tensor& probs, const Tensor& g) {
    if (!probs.same_shape(g)) {
        throw DimensionError("softmax backward shape mismatch: " + shape_string(probs.shape()) +
                             " vs " + shape_string(g.shape()));
    }
    double dot = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) dot += probs[i] * g[i];
    Tensor dz(probs.shape());
    for (std::size_t i = 0; i < probs.size(); ++i) dz[i] = probs[i] * (g[i] - dot);
    return dz;
}

SoftmaxXent softmax_cross_entropy(const Tensor& logits, std::size_t label) {
    const std::size_t n = vector_width(logits, "softmax_cross_entropy");
    if (label >= n) {
        throw ArgumentError("label " + std::to_string(label) + " out of range for " +
                            std::to_string(n) + " classes");
    }
    Tensor probs = softmax(logits);
    return SoftmaxXent{cross_entropy(probs, label), std::move(probs)};
}

Tensor softmax_cross_entropy_backward(const Tensor& probs, std::size_t label) {
    const std::size_t n = vector_width(probs, "softmax_cross_entropy");
    if (label >= n) {
        throw ArgumentError("label " + std::to_string(label) + " out of range for " +
                            std::to_string(n) + " classes");
    }
    Tensor dz = probs;
    dz[label] -= 1.0;
    return dz;
}

double cross_entropy(const Tensor& probs, std::size_t label) {
    const std::size_t n = vector_width(probs, "cross_entropy");
    if (label >= n) {
        throw ArgumentError("label " + std::to_string(label) + " out of range for " +
                            std::to_string(n) + " classes");
    }
    return -std::log(std::max(probs[label], 1e-300));
}

Tensor cross_entropy_backward(const Tensor& probs, std::size_t label) {
    const std::size_t n = vector_width(probs, "cross_entropy");
    if (label >= n) {
        throw ArgumentError("label " + std::to_string(label) + " out of range for " +
                            std::to_string(n) + " classes");
    }
    Tensor g(probs.shape());
    g[label] = -1.0 / std::max(probs[label], 1e-300);
    return g;
}

}  // namespace mmfusion
