#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace manar {

/// Seedable, splittable deterministic random stream.
///
/// The stream is a splitmix64 counter generator, so copies are clones: a
/// copied stream replays exactly the same sequence as the original.
/// Independent substreams for (experiment, trial) pairs are derived by
/// hashing rather than by drawing, which keeps every cell of a sweep
/// independent of grid order.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : state_(seed) {}

    /// Derive an independent stream from this stream's seed and two indices.
    /// Does not advance this stream.
    [[nodiscard]] RandomStream substream(std::uint64_t a, std::uint64_t b = 0) const {
        return RandomStream(derive_seed(state_, a, b));
    }

    /// Stateless seed derivation used for per-trial streams.
    [[nodiscard]] static std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a,
                                                   std::uint64_t b = 0) {
        std::uint64_t h = mix(seed ^ mix(a + 0x9E3779B97F4A7C15ULL));
        return mix(h ^ mix(b + 0xBF58476D1CE4E5B9ULL));
    }

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        return mix(state_);
    }

    /// Uniform draw on (0, 1].
    double uniform() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    /// Standard normal draw via Box-Muller. No spare value is cached, so
    /// cloned streams stay in lockstep.
    double normal() {
        const double u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xBF58476D1CE4E5B9ULL;
        z ^= z >> 27;
        z *= 0x94D049BB133111EBULL;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t state_;
};

}  // namespace manar
