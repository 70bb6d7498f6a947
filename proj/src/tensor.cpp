#include "mmfusion/tensor.hpp"

#include <cmath>
#include <sstream>

#include "mmfusion/errors.hpp"

namespace mmfusion {

namespace {

std::size_t checked_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) {
        if (d == 0) throw DimensionError("tensor shape has a zero dimension: " + shape_string(shape));
        n *= d;
    }
    return n;
}

}  // namespace

std::string shape_string(const std::vector<std::size_t>& shape) {
    std::ostringstream out;
    out << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out << ", ";
        out << shape[i];
    }
    out << ']';
    return out.str();
}

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(checked_product(shape_), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (checked_product(shape_) != data_.size()) {
        throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                             " does not match shape " + shape_string(shape_));
    }
}

Tensor Tensor::full(std::vector<std::size_t> shape, double value) {
    Tensor t(std::move(shape));
    t.fill(value);
    return t;
}

std::size_t Tensor::dim(std::size_t axis) const {
    if (axis >= shape_.size()) {
        throw DimensionError("axis " + std::to_string(axis) + " out of range for shape " +
                             shape_string(shape_));
    }
    return shape_[axis];
}

double Tensor::at(std::size_t i, std::size_t j) const {
    return data_[i * dim(1) + j];
}

double& Tensor::at(std::size_t i, std::size_t j) {
    return data_[i * dim(1) + j];
}

double Tensor::at(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[(i * dim(1) + j) * dim(2) + k];
}

double& Tensor::at(std::size_t i, std::size_t j, std::size_t k) {
    return data_[(i * dim(1) + j) * dim(2) + k];
}

double Tensor::at(std::size_t i, std::size_t j, std::size_t k, std::size_t l) const {
    return data_[((i * dim(1) + j) * dim(2) + k) * dim(3) + l];
}

double& Tensor::at(std::size_t i, std::size_t j, std::size_t k, std::size_t l) {
    return data_[((i * dim(1) + j) * dim(2) + k) * dim(3) + l];
}

Tensor Tensor::reshaped(std::vector<std::size_t> new_shape) const {
    if (checked_product(new_shape) != data_.size()) {
        throw DimensionError("cannot reshape " + shape_string(shape_) + " (" +
                             std::to_string(data_.size()) + " elements) to " +
                             shape_string(new_shape));
    }
    return Tensor(std::move(new_shape), data_);
}

void Tensor::fill(double value) {
    for (double& x : data_) x = value;
}

bool Tensor::all_finite() const {
    for (double x : data_) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2) {
        throw DimensionError("matmul expects rank-2 tensors, got " + shape_string(a.shape()) +
                             " and " + shape_string(b.shape()));
    }
    const std::size_t m = a.dim(0), k = a.dim(1), k2 = b.dim(0), n = b.dim(1);
    if (k != k2) {
        throw DimensionError("matmul inner dimensions disagree: " + shape_string(a.shape()) +
                             " vs " + shape_string(b.shape()));
    }
    Tensor out({m, n});
    const double* pa = a.data();
    const double* pb = b.data();
    double* po = out.data();
    // i-k-j order: the inner loop runs over contiguous rows of b and out.
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double av = pa[i * k + kk];
            const double* brow = pb + kk * n;
            double* orow = po + i * n;
            for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
        }
    }
    return out;
}

std::size_t argmax(const Tensor& t) {
    if (t.size() == 0) throw ArgumentError("argmax of an empty tensor");
    std::size_t best = 0;
    for (std::size_t i = 1; i < t.size(); ++i) {
        if (t[i] > t[best]) best = i;
    }
    return best;
}

Tensor elementwise(const Tensor& t, const std::function<double(double)>& f) {
    Tensor out(t.shape());
    for (std::size_t i = 0; i < t.size(); ++i) out[i] = f(t[i]);
    return out;
}

namespace {

// Shared walk for axis reductions: out[outer, inner] aggregates t[outer, axis, inner].
Tensor reduce(const Tensor& t, std::size_t axis, bool mean) {
    if (axis >= t.rank()) {
        throw DimensionError("reduction axis " + std::to_string(axis) +
                             " out of range for shape " + shape_string(t.shape()));
    }
    std::vector<std::size_t> out_shape;
    std::size_t outer = 1, inner = 1;
    for (std::size_t i = 0; i < t.rank(); ++i) {
        if (i < axis) outer *= t.shape()[i];
        if (i > axis) inner *= t.shape()[i];
        if (i != axis) out_shape.push_back(t.shape()[i]);
    }
    const std::size_t n = t.shape()[axis];
    if (out_shape.empty()) out_shape.push_back(1);
    Tensor out(out_shape);
    const double* src = t.data();
    double* dst = out.data();
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t a = 0; a < n; ++a) {
            const double* row = src + (o * n + a) * inner;
            double* orow = dst + o * inner;
            for (std::size_t i = 0; i < inner; ++i) orow[i] += row[i];
        }
    }
    if (mean) {
        for (std::size_t i = 0; i < out.size(); ++i) dst[i] /= static_cast<double>(n);
    }
    return out;
}

}  // namespace

Tensor reduce_sum(const Tensor& t, std::size_t axis) { return reduce(t, axis, false); }
Tensor reduce_mean(const Tensor& t, std::size_t axis) { return reduce(t, axis, true); }

Tensor add(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) {
        throw DimensionError("elementwise add of mismatched shapes " + shape_string(a.shape()) +
                             " and " + shape_string(b.shape()));
    }
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
    return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) {
        throw DimensionError("elementwise sub of mismatched shapes " + shape_string(a.shape()) +
                             " and " + shape_string(b.shape()));
    }
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

Tensor scale(const Tensor& t, double factor) {
    Tensor out(t.shape());
    for (std::size_t i = 0; i < t.size(); ++i) out[i] = t[i] * factor;
    return out;
}

}  // namespace mmfusion
