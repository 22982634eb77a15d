#pragma once

// Counter-based random numbers. A RandomStream is keyed by (seed, stream
// index); the i-th output block is a pure function of (seed, index, i), so
// sample paths are reproducible bit-for-bit regardless of which thread draws
// them or in what order.

#include <array>
#include <cstdint>
#include <limits>

namespace spde {

/// Philox4x32 with 10 rounds (Salmon et al., SC'11).
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key);

class RandomStream {
public:
    using result_type = std::uint64_t;

    RandomStream(std::uint64_t seed, std::uint64_t stream_index);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()();

    /// Uniform on the open interval (0,1), 53-bit resolution.
    double uniform_open();
    /// Exp(1) variate.
    double exponential();
    /// Poisson(mean): inversion for mean ≤ 30, PTRD rejection otherwise.
    std::uint64_t poisson(double mean);

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream_index() const noexcept { return stream_; }

private:
    void refill();

    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    std::array<std::uint32_t, 4> buffer_{};
    unsigned next_ = 4;
};

/// Stream indices at or above this offset are reserved for auxiliary draws
/// (e.g. the independent reference paths of the uncoupled estimator).
inline constexpr std::uint64_t kAuxiliaryStreamOffset = std::uint64_t{1} << 62;

}  // namespace spde
