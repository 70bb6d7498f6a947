#ifndef MMFUSION_LAYERS_HPP
#define MMFUSION_LAYERS_HPP

#include <cstdint>
#include <vector>

#include "mmfusion/tensor.hpp"

namespace mmfusion {

// Forward/backward kernels for the layer kinds used by the network graphs.
// Conventions, fixed project-wide:
//   - images are [channels, height, width]
//   - conv kernels are 3x3, stride 1, zero "same" padding, cross-correlation
//   - dense weights are [in, out], applied as row-vector x * W + b
//   - ReLU derivative at exactly zero is zero
//   - max-pool ties route the gradient to the first-scanned position

// x[C,H,W], w[OC,C,3,3], b[OC] -> [OC,H,W]
Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b);

struct Conv2dGrads {
    Tensor dx;
    Tensor dw;
    Tensor db;
};
Conv2dGrads conv2d_backward(const Tensor& x, const Tensor& w, const Tensor& g);

// Non-overlapping 2x2 window maxima; odd trailing rows/columns are dropped.
// argmax_out, when given, receives the flat input index of each window max.
Tensor maxpool2x2_forward(const Tensor& x, std::vector<std::uint32_t>* argmax_out = nullptr);
Tensor maxpool2x2_backward(const std::vector<std::size_t>& x_shape,
                           const std::vector<std::uint32_t>& argmax, const Tensor& g);

Tensor relu_forward(const Tensor& x);
Tensor relu_backward(const Tensor& x, const Tensor& g);

// x[N] (or [1,N]), w[in,out], b[out] -> [out] (or [1,out])
Tensor dense_forward(const Tensor& x, const Tensor& w, const Tensor& b);

struct DenseGrads {
    Tensor dx;
    Tensor dw;
    Tensor db;
};
DenseGrads dense_backward(const Tensor& x, const Tensor& w, const Tensor& g);

Tensor concat_forward(const std::vector<const Tensor*>& xs);
std::vector<Tensor> concat_backward(const std::vector<std::size_t>& widths, const Tensor& g);

// Numerically stabilized softmax (max logit subtracted).
Tensor softmax(const Tensor& logits);

// Jacobian-vector product of softmax given its output p and upstream g:
// dL/dz = p .* (g - <g, p>).
Tensor softmax_backward(const Tensor& probs, const Tensor& g);

struct SoftmaxXent {
    double loss;
    Tensor probs;
};

// Fused softmax + categorical cross-entropy against a single label.
SoftmaxXent softmax_cross_entropy(const Tensor& logits, std::size_t label);

// Gradient of the fused loss with respect to the logits: probs - onehot.
Tensor softmax_cross_entropy_backward(const Tensor& probs, std::size_t label);

// -log p[label], clamped away from zero so extreme logits stay finite.
double cross_entropy(const Tensor& probs, std::size_t label);

// Gradient of cross_entropy with respect to the probabilities.
Tensor cross_entropy_backward(const Tensor& probs, std::size_t label);

}  // namespace mmfusion

#endif
