#pragma once

#include <cstdint>

namespace ddsmc {

/// Counter-based random source: every draw is a pure function of
/// (key, stream, index), so runs are reproducible cell-by-cell and
/// independent draws can be taken in any order or in parallel.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t key) : key_(key) {}

    /// Uniform double in [0, 1).
    double uniform01(std::uint64_t stream, std::uint64_t index) const {
        std::uint64_t h = mix(key_ + 0x9E3779B97F4A7C15ull);
        h = mix(h ^ (stream + 0xD1B54A32D192ED03ull));
        h = mix(h ^ (index + 0x8BB84B93962EACC9ull));
        return static_cast<double>(h >> 11) * 0x1.0p-53;
    }

    /// Uniform double in [lo, hi).
    double uniform(std::uint64_t stream, std::uint64_t index, double lo, double hi) const {
        return lo + (hi - lo) * uniform01(stream, index);
    }

    std::uint64_t key() const { return key_; }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xBF58476D1CE4E5B9ull;
        z ^= z >> 27;
        z *= 0x94D049BB133111EBull;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t key_;
};

// Stream ids. Globally disjoint so one key may legally drive several specs.
namespace streams {
inline constexpr std::uint64_t kExcitationInput = 0;
inline constexpr std::uint64_t kExcitationX0 = 1;
inline constexpr std::uint64_t kCollectDisturbance = 2;
inline constexpr std::uint64_t kSimDisturbance = 3;
}  // namespace streams

}  // namespace ddsmc
