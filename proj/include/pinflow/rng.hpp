#pragma once

#include <cmath>
#include <cstdint>

namespace pinflow {

/// Counter-based random generator.
///
/// Every output is a pure function of (seed, stream, counter), so draws are
/// reproducible across platforms, independent of call order, and safe to
/// evaluate concurrently. The word function is the SplitMix64 finalizer
/// (Steele/Lea/Flood 2014 constants) applied to the keyed counter:
///
///   x = seed
///   x = mix(x ^ (stream * 0x9E3779B97F4A7C15))
///   x = mix(x ^ (counter * 0xBF58476D1CE4E5B9))
///   where mix(v): v += 0x9E3779B97F4A7C15
///                 v = (v ^ (v >> 30)) * 0xBF58476D1CE4E5B9
///                 v = (v ^ (v >> 27)) * 0x94D049BB133111EB
///                 return v ^ (v >> 31)
///
/// Frozen test vectors live in tests/test_rng.cpp.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
        : seed_(seed), stream_(stream) {}

    static std::uint64_t word(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
        std::uint64_t x = seed;
        x = mix(x ^ (stream * 0x9E3779B97F4A7C15ULL));
        x = mix(x ^ (counter * 0xBF58476D1CE4E5B9ULL));
        return x;
    }

    std::uint64_t word_at(std::uint64_t counter) const { return word(seed_, stream_, counter); }

    /// Uniform in [0,1): top 53 bits of the word, so the value is exact in a double.
    static double to_unit(std::uint64_t w) { return static_cast<double>(w >> 11) * 0x1.0p-53; }

    double uniform_at(std::uint64_t counter) const { return to_unit(word_at(counter)); }

    /// Uniform in [lo, hi).
    double uniform_at(std::uint64_t counter, double lo, double hi) const {
        return lo + (hi - lo) * uniform_at(counter);
    }

    /// Standard normal via Box-Muller on counters (2k, 2k+1) of a dedicated
    /// stream offset, so normal_at(k) never aliases uniform draws.
    double normal_at(std::uint64_t counter) const {
        const double u1 = to_unit(word(seed_, stream_ ^ 0xA02F0D3A5C6E917DULL, 2 * counter));
        const double u2 = to_unit(word(seed_, stream_ ^ 0xA02F0D3A5C6E917DULL, 2 * counter + 1));
        const double r = std::sqrt(-2.0 * std::log(1.0 - u1));  // 1-u1 in (0,1], log finite
        return r * std::cos(2.0 * M_PI * u2);
    }

    /// Integer in [0, n). Modulo reduction; the ~2^-64 bias is irrelevant here,
    /// determinism is what matters.
    std::uint64_t below_at(std::uint64_t counter, std::uint64_t n) const {
        return word_at(counter) % n;
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }

private:
    static std::uint64_t mix(std::uint64_t v) {
        v += 0x9E3779B97F4A7C15ULL;
        v = (v ^ (v >> 30)) * 0xBF58476D1CE4E5B9ULL;
        v = (v ^ (v >> 27)) * 0x94D049BB133111EBULL;
        return v ^ (v >> 31);
    }

    std::uint64_t seed_;
    std::uint64_t stream_;
};

/// Stream identifiers for the fixed purposes in the pipeline.
namespace rng_stream {
constexpr std::uint64_t kSplitShuffle = 1;
constexpr std::uint64_t kEpochShuffle = 2;
constexpr std::uint64_t kFeatureNoise = 3;
constexpr std::uint64_t kWeightInit = 4;
constexpr std::uint64_t kFlowSample = 5;
constexpr std::uint64_t kSynthParams = 6;
constexpr std::uint64_t kSynthCoin = 7;
constexpr std::uint64_t kEval = 8;
}  // namespace rng_stream

/// Seeded Fisher-Yates shuffle of [0, n) index vector, driven by CounterRng.
template <typename IndexVec>
void counter_shuffle(IndexVec& idx, const CounterRng& rng) {
    for (std::size_t i = idx.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.below_at(i - 1, i));
        std::swap(idx[i - 1], idx[j]);
    }
}

}  // namespace pinflow
