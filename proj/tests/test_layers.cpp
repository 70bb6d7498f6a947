#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mmfusion/errors.hpp"
#include "mmfusion/layers.hpp"
#include "mmfusion/rng.hpp"
#include "support/reference_kernels.hpp"

using namespace mmfusion;

namespace {

Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng) {
    Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-1.0, 1.0);
    return t;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    REQUIRE(a.shape() == b.shape());
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

TEST_CASE("conv2d centre tap copies the input") {
    Tensor x({1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
    Tensor w({1, 1, 3, 3});
    w.at(0, 0, 1, 1) = 1.0;
    Tensor b({1}, {0.5});
    Tensor y = conv2d_forward(x, w, b);
    for (std::size_t i = 0; i < 9; ++i) CHECK(y[i] == doctest::Approx(x[i] + 0.5));
}

TEST_CASE("conv2d zero padding shows at the borders") {
    // All-ones input and kernel: each output counts its in-bounds taps.
    Tensor x = Tensor::full({1, 3, 3}, 1.0);
    Tensor w = Tensor::full({1, 1, 3, 3}, 1.0);
    Tensor b({1});
    Tensor y = conv2d_forward(x, w, b);
    CHECK(y.at(0, 0, 0) == 4.0);
    CHECK(y.at(0, 0, 1) == 6.0);
    CHECK(y.at(0, 1, 1) == 9.0);
    CHECK(y.at(0, 2, 0) == 4.0);
}

TEST_CASE("conv2d matches the loop reference on random instances") {
    Rng rng(1234);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t C = 1 + rng.below(3);
        const std::size_t OC = 1 + rng.below(4);
        const std::size_t H = 2 + rng.below(8);
        const std::size_t W = 2 + rng.below(8);
        Tensor x = random_tensor({C, H, W}, rng);
        Tensor w = random_tensor({OC, C, 3, 3}, rng);
        Tensor b = random_tensor({OC}, rng);
        CHECK(max_abs_diff(conv2d_forward(x, w, b), refk::conv2d(x, w, b)) < 1e-12);
    }
}

TEST_CASE("conv2d rejects bad shapes") {
    Tensor x({1, 4, 4});
    CHECK_THROWS_AS(conv2d_forward(x, Tensor({1, 1, 2, 2}), Tensor({1})), DimensionError);
    CHECK_THROWS_AS(conv2d_forward(x, Tensor({1, 2, 3, 3}), Tensor({1})), DimensionError);
    CHECK_THROWS_AS(conv2d_forward(x, Tensor({1, 1, 3, 3}), Tensor({2})), DimensionError);
}

TEST_CASE("maxpool picks window maxima and drops odd edges") {
    Tensor x({1, 3, 5}, {1, 2, 3, 4, 9,    //
                         5, 6, 7, 8, 9,    //
                         0, 0, 0, 0, 9});  // third row and fifth column ignored
    std::vector<std::uint32_t> arg;
    Tensor y = maxpool2x2_forward(x, &arg);
    CHECK(y.shape() == std::vector<std::size_t>{1, 1, 2});
    CHECK(y.at(0, 0, 0) == 6.0);
    CHECK(y.at(0, 0, 1) == 8.0);
    CHECK(arg[0] == 6);  // flat index of the 6
    CHECK(arg[1] == 8);

    Tensor g({1, 1, 2}, {10.0, 20.0});
    Tensor dx = maxpool2x2_backward(x.shape(), arg, g);
    CHECK(dx[6] == 10.0);
    CHECK(dx[8] == 20.0);
    double total = 0.0;
    for (std::size_t i = 0; i < dx.size(); ++i) total += dx[i];
    CHECK(total == 30.0);
}

TEST_CASE("maxpool ties route to the first-scanned position") {
    Tensor x = Tensor::full({1, 2, 2}, 3.0);
    std::vector<std::uint32_t> arg;
    maxpool2x2_forward(x, &arg);
    CHECK(arg[0] == 0);
}

TEST_CASE("maxpool matches the loop reference on random instances") {
    Rng rng(99);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t C = 1 + rng.below(3);
        const std::size_t H = 2 + rng.below(9);
        const std::size_t W = 2 + rng.below(9);
        Tensor x = random_tensor({C, H, W}, rng);
        CHECK(max_abs_diff(maxpool2x2_forward(x), refk::maxpool2x2(x)) == 0.0);
    }
}

TEST_CASE("relu gates values and gradients, zero maps to zero") {
    Tensor x({5}, {-2.0, -0.0, 0.0, 0.5, 3.0});
    Tensor y = relu_forward(x);
    CHECK(y[0] == 0.0);
    CHECK(y[2] == 0.0);
    CHECK(y[3] == 0.5);
    Tensor g = Tensor::full({5}, 7.0);
    Tensor dx = relu_backward(x, g);
    CHECK(dx[0] == 0.0);
    CHECK(dx[2] == 0.0);  // derivative at exactly zero is zero
    CHECK(dx[3] == 7.0);
    CHECK(dx[4] == 7.0);
}

TEST_CASE("dense matches a hand computation and keeps the input rank") {
    Tensor x({2}, {1.0, 2.0});
    Tensor w({2, 3}, {1, 2, 3, 4, 5, 6});
    Tensor b({3}, {0.1, 0.2, 0.3});
    Tensor y = dense_forward(x, w, b);
    CHECK(y.shape() == std::vector<std::size_t>{3});
    CHECK(y[0] == doctest::Approx(9.1));
    CHECK(y[1] == doctest::Approx(12.2));
    CHECK(y[2] == doctest::Approx(15.3));

    Tensor y2 = dense_forward(x.reshaped({1, 2}), w, b);
    CHECK(y2.shape() == std::vector<std::size_t>{1, 3});
    CHECK(y2[0] == doctest::Approx(9.1));
}

TEST_CASE("dense matches the loop reference on random instances") {
    Rng rng(4321);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t in = 1 + rng.below(24);
        const std::size_t out = 1 + rng.below(12);
        Tensor x = random_tensor({in}, rng);
        Tensor w = random_tensor({in, out}, rng);
        Tensor b = random_tensor({out}, rng);
        CHECK(max_abs_diff(dense_forward(x, w, b), refk::dense(x, w, b)) < 1e-12);
    }
}

TEST_CASE("dense backward shapes and values") {
    Tensor x({2}, {1.0, 2.0});
    Tensor w({2, 3}, {1, 2, 3, 4, 5, 6});
    Tensor g({3}, {1.0, 0.0, -1.0});
    DenseGrads gr = dense_backward(x, w, g);
    CHECK(gr.db[0] == 1.0);
    CHECK(gr.db[2] == -1.0);
    CHECK(gr.dw.at(1, 0) == 2.0);   // x[1] * g[0]
    CHECK(gr.dw.at(0, 2) == -1.0);  // x[0] * g[2]
    CHECK(gr.dx[0] == doctest::Approx(1.0 * 1 + 2.0 * 0 + 3.0 * -1));
    CHECK(gr.dx[1] == doctest::Approx(4.0 * 1 + 5.0 * 0 + 6.0 * -1));
}

TEST_CASE("concat forward and backward are inverse slices") {
    Tensor a({2}, {1, 2});
    Tensor b({3}, {3, 4, 5});
    Tensor y = concat_forward({&a, &b});
    CHECK(y.shape() == std::vector<std::size_t>{5});
    CHECK(y[0] == 1.0);
    CHECK(y[4] == 5.0);
    std::vector<Tensor> parts = concat_backward({2, 3}, y);
    CHECK(parts.size() == 2);
    CHECK(max_abs_diff(parts[0], a) == 0.0);
    CHECK(max_abs_diff(parts[1], b) == 0.0);
    CHECK_THROWS_AS(concat_forward({}), ArgumentError);
    CHECK_THROWS_AS(concat_backward({2, 2}, y), DimensionError);
}

TEST_CASE("softmax sums to one and is shift invariant") {
    Rng rng(7);
    Tensor z = random_tensor({6}, rng);
    Tensor p = softmax(z);
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        CHECK(p[i] > 0.0);
        s += p[i];
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    // Max subtraction makes shifts cancel. For arbitrary values the add
    // itself rounds, so allow an ulp-scale difference.
    Tensor shifted = z;
    for (std::size_t i = 0; i < shifted.size(); ++i) shifted[i] += 123.25;
    CHECK(max_abs_diff(softmax(shifted), p) < 1e-14);
    // With coarse dyadic logits the shifted sums are exact and the
    // cancellation is bitwise.
    Tensor zd({4}, {0.5, -0.25, 1.75, -1.0});
    Tensor zd_shift({4}, {0.5 + 123.25, -0.25 + 123.25, 1.75 + 123.25, -1.0 + 123.25});
    CHECK(max_abs_diff(softmax(zd_shift), softmax(zd)) == 0.0);
}

TEST_CASE("softmax handles extreme logits without overflow") {
    Tensor z({3}, {1000.0, 0.0, -1000.0});
    Tensor p = softmax(z);
    CHECK(p.all_finite());
    CHECK(p[0] == doctest::Approx(1.0));
}

TEST_CASE("softmax backward equals the explicit Jacobian product") {
    Rng rng(11);
    Tensor z = random_tensor({5}, rng);
    Tensor p = softmax(z);
    Tensor g = random_tensor({5}, rng);
    Tensor dz = softmax_backward(p, g);
    // J[i][j] = p_i (delta_ij - p_j); dz = J^T g (J is symmetric).
    for (std::size_t i = 0; i < 5; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < 5; ++j) {
            const double jac = p[j] * ((i == j ? 1.0 : 0.0) - p[i]);
            acc += jac * g[j];
        }
        CHECK(std::abs(acc - dz[i]) < 1e-15);
    }
}

TEST_CASE("uniform logits give log(n) loss and uniform probabilities") {
    const std::size_t n = 10;
    Tensor z({n});
    SoftmaxXent r = softmax_cross_entropy(z, 3);
    CHECK(std::abs(r.loss - std::log(static_cast<double>(n))) < 1e-12);
    for (std::size_t i = 0; i < n; ++i) CHECK(r.probs[i] == doctest::Approx(0.1));
}

TEST_CASE("softmax cross entropy matches the reference on random instances") {
    Rng rng(2024);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 2 + rng.below(10);
        Tensor z = random_tensor({n}, rng);
        const std::size_t label = rng.below(n);
        Tensor ref_probs;
        const double ref_loss = refk::softmax_xent(z, label, &ref_probs);
        SoftmaxXent got = softmax_cross_entropy(z, label);
        CHECK(std::abs(got.loss - ref_loss) < 1e-12);
        CHECK(max_abs_diff(got.probs, ref_probs) < 1e-12);
    }
}

TEST_CASE("fused backward equals probs minus onehot") {
    Rng rng(5);
    Tensor z = random_tensor({7}, rng);
    SoftmaxXent r = softmax_cross_entropy(z, 2);
    Tensor dz = softmax_cross_entropy_backward(r.probs, 2);
    for (std::size_t i = 0; i < 7; ++i) {
        CHECK(dz[i] == doctest::Approx(r.probs[i] - (i == 2 ? 1.0 : 0.0)).epsilon(1e-12));
    }
    double s = 0.0;
    for (std::size_t i = 0; i < 7; ++i) s += dz[i];
    CHECK(std::abs(s) < 1e-12);  // gradient of a softmax loss sums to zero
}

TEST_CASE("composing softmax JVP with cross entropy grad gives the fused grad") {
    // The trainer backpropagates cross_entropy through the softmax output
    // node; that composition must reproduce probs - onehot.
    Rng rng(6);
    Tensor z = random_tensor({5}, rng);
    const std::size_t label = 4;
    Tensor p = softmax(z);
    Tensor composed = softmax_backward(p, cross_entropy_backward(p, label));
    Tensor fused = softmax_cross_entropy_backward(p, label);
    CHECK(max_abs_diff(composed, fused) < 1e-12);
}

TEST_CASE("cross entropy clamps away from zero probability") {
    Tensor p({3}, {1.0, 0.0, 0.0});
    const double loss = cross_entropy(p, 1);
    CHECK(std::isfinite(loss));
    CHECK(loss > 600.0);  // -log(1e-300)
    Tensor g = cross_entropy_backward(p, 1);
    CHECK(std::isfinite(g[1]));
    CHECK(g[0] == 0.0);
    CHECK(g[2] == 0.0);
}

TEST_CASE("labels out of range are rejected") {
    Tensor z({3});
    CHECK_THROWS_AS(softmax_cross_entropy(z, 3), ArgumentError);
    CHECK_THROWS_AS(cross_entropy(softmax(z), 5), ArgumentError);
    CHECK_THROWS_AS(softmax_cross_entropy_backward(softmax(z), 3), ArgumentError);
}
