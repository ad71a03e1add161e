#ifndef MARKETRL_RNG_HPP
#define MARKETRL_RNG_HPP

#include <cmath>
#include <cstdint>

namespace marketrl {

/// Counter-based pseudo-random stream (SplitMix64 core).
///
/// The i-th output is a pure function of (base, i), so streams can be split
/// into independent, reproducible child streams by key without sharing any
/// mutable state. All distributions are hand-rolled on top of next_u64() so
/// the draw sequence is identical across platforms and standard libraries;
/// every frozen expected value in the test suites depends on this.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : base_(mix(seed ^ 0x6A09E667F3BCC909ULL)) {}

    std::uint64_t next_u64() {
        counter_ += 1;
        return mix(base_ + counter_ * kGolden);
    }

    /// Child stream derived from the parent's seed and a key. Independent of
    /// how many values the parent has produced.
    Rng split(std::uint64_t key) const {
        return Rng(mix(base_ ^ mix(key * kGolden + 0x9E3779B97F4A7C15ULL)));
    }

    /// Uniform double in [0, 1), 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller. Always consumes exactly two draws.
    double normal() {
        const double u1 = 1.0 - uniform(); // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    }

    /// Uniform integer in [lo, hi], inclusive. Debiased (Lemire rejection).
    int uniform_int(int lo, int hi) {
        const std::uint64_t n = static_cast<std::uint64_t>(hi - lo) + 1;
        std::uint64_t x = next_u64();
        unsigned __int128 m = static_cast<unsigned __int128>(x) * n;
        auto low = static_cast<std::uint64_t>(m);
        if (low < n) {
            const std::uint64_t threshold = (0 - n) % n;
            while (low < threshold) {
                x = next_u64();
                m = static_cast<unsigned __int128>(x) * n;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return lo + static_cast<int>(m >> 64);
    }

  private:
    static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
    static constexpr double kPi = 3.14159265358979323846;

    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xBF58476D1CE4E5B9ULL;
        z ^= z >> 27;
        z *= 0x94D049BB133111EBULL;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t base_;
    std::uint64_t counter_ = 0;
};

} // namespace marketrl

#endif
