#pragma once

#include <cstdint>
#include <limits>

namespace glu {

/// What a random stream is used for. Topology and noise draws come from
/// disjoint streams so link failures stay independent of observation noise.
enum class StreamPurpose : std::uint64_t {
    topology = 1,
    noise = 2,
    auxiliary = 3,
};

/// Counter-based generator: output k is a SplitMix64 finalizer applied to
/// key + (k+1)*golden. Any (seed, trial, iteration, purpose) tuple maps to an
/// independent stream without shared state, so trials can run in parallel
/// and replay bit-identically.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t key) noexcept : key_(mix(key)) {}

    static Rng stream(std::uint64_t seed, std::uint64_t trial, std::uint64_t iteration,
                      StreamPurpose purpose) noexcept {
        std::uint64_t k = mix(seed ^ 0x6a09e667f3bcc909ULL);
        k = mix(k ^ (trial + 0x3c6ef372fe94f82bULL));
        k = mix(k ^ (iteration + 0xa54ff53a5f1d36f1ULL));
        k = mix(k ^ static_cast<std::uint64_t>(purpose));
        return Rng(k);
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        counter_ += kGolden;
        return mix(key_ + counter_);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    std::uint64_t key() const noexcept { return key_; }

private:
    static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

    static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

} // namespace glu
