#ifndef MMFUSION_TENSOR_HPP
#define MMFUSION_TENSOR_HPP

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace mmfusion {

// Dense N-dimensional array of doubles, row-major. This is the one value
// type shared by activations, parameters and gradients. Copies are cheap
// enough at the scales involved; there are no views or strides.
class Tensor {
public:
    Tensor() = default;

    // Zero-filled tensor of the given shape.
    explicit Tensor(std::vector<std::size_t> shape);

    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    static Tensor full(std::vector<std::size_t> shape, double value);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    std::size_t dim(std::size_t axis) const;

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& vec() { return data_; }
    const std::vector<double>& vec() const { return data_; }

    double operator[](std::size_t i) const { return data_[i]; }
    double& operator[](std::size_t i) { return data_[i]; }

    // Checked multi-index accessors for the ranks that actually occur.
    double at(std::size_t i, std::size_t j) const;
    double& at(std::size_t i, std::size_t j);
    double at(std::size_t i, std::size_t j, std::size_t k) const;
    double& at(std::size_t i, std::size_t j, std::size_t k);
    double at(std::size_t i, std::size_t j, std::size_t k, std::size_t l) const;
    double& at(std::size_t i, std::size_t j, std::size_t k, std::size_t l);

    // Same data, new shape; element count must match.
    Tensor reshaped(std::vector<std::size_t> new_shape) const;

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    void fill(double value);
    bool all_finite() const;

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

std::string shape_string(const std::vector<std::size_t>& shape);

// a[M,K] * b[K,N] -> [M,N]
Tensor matmul(const Tensor& a, const Tensor& b);

// Flat index of the maximum element; ties go to the lowest index.
std::size_t argmax(const Tensor& t);

Tensor elementwise(const Tensor& t, const std::function<double(double)>& f);

// Remove `axis`, summing (or averaging) along it.
Tensor reduce_sum(const Tensor& t, std::size_t axis);
Tensor reduce_mean(const Tensor& t, std::size_t axis);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& t, double factor);

}  // namespace mmfusion

#endif
