#ifndef MMFUSION_RNG_HPP
#define MMFUSION_RNG_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace mmfusion {

// All randomness flows through this wrapper. Only the raw mt19937_64 stream
// is used (its output sequence is fully specified by the standard); the
// derived distributions below are hand-rolled so that results are identical
// across standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform integer in [0, 255].
    int uniform_u8() { return static_cast<int>(gen_() & 0xFFu); }

    // Uniform index in [0, n). Modulo bias is negligible for the index
    // ranges used here (n far below 2^32).
    std::size_t below(std::size_t n) { return static_cast<std::size_t>(gen_() % n); }

    // Uniform double in [0, 1).
    double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Standard normal via Box-Muller.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform01();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// splitmix64 finalizer; used to mix seeds and tags into sub-stream seeds.
inline std::uint64_t mix_u64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t h = mix_u64(seed);
    h = mix_u64(h ^ a);
    h = mix_u64(h ^ b);
    h = mix_u64(h ^ c);
    return h;
}

// Fisher-Yates with the fully specified draws above (std::shuffle is
// implementation-defined and would break cross-platform reproducibility).
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::size_t j = rng.below(i);
        std::swap(v[i - 1], v[j]);
    }
}

inline std::vector<std::size_t> shuffled_indices(std::size_t n, Rng& rng) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    shuffle(idx, rng);
    return idx;
}

}  // namespace mmfusion

#endif
