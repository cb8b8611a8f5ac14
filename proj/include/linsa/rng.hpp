#pragma once

#include <cmath>
#include <cstdint>

namespace linsa {

// SplitMix64 finalizer (bijective 64-bit mixer).
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Counter-based random substream.
///
/// The i-th output is a pure function of (seed, stream, trial, step, i), so
/// draws at distinct (trial, step) pairs come from non-overlapping streams and
/// Monte Carlo trials can run in parallel without shared RNG state. Identical
/// tuples reproduce bit-identical values on every platform with IEEE doubles.
class Substream {
public:
    Substream(std::uint64_t seed, std::uint64_t stream, std::uint64_t trial,
              std::uint64_t step) {
        std::uint64_t k = mix64(seed);
        k = mix64(k ^ (0xa0761d6478bd642fULL * (stream + 1)));
        k = mix64(k ^ (0xe7037ed1a0b428dbULL * (trial + 1)));
        key_ = mix64(k ^ (0x8ebc6af09c88c6e3ULL * (step + 1)));
    }

    std::uint64_t next_u64() {
        return mix64(key_ + 0x9e3779b97f4a7c15ULL * ++counter_);
    }

    /// Uniform in [0, 1) with 53 random bits.
    double next_uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Standard normal (Box-Muller; the second value of each pair is cached).
    double next_normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - next_uniform(); // (0, 1], keeps log finite
        const double u2 = next_uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 6.283185307179586 * u2;
        spare_ = r * std::sin(t);
        have_spare_ = true;
        return r * std::cos(t);
    }

private:
    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// Stream tags used by the ensemble generators. Keeping them centralized
// guarantees the P/u/w (and Lambda/P/C/U) sequences never share a stream.
namespace stream_tag {
inline constexpr std::uint64_t matrix_noise = 0; // P(s) entrywise noise
inline constexpr std::uint64_t input_noise = 1;  // u(s) entrywise noise
inline constexpr std::uint64_t edge_noise = 2;   // state-dependent w_ji(s)
inline constexpr std::uint64_t lambda_noise = 3; // FJ susceptibility noise
inline constexpr std::uint64_t coupling_noise = 4; // FJ interdependency noise
} // namespace stream_tag

} // namespace linsa
