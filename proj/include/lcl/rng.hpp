#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace lcl {

/// SplitMix64: a counter-based 64-bit generator. The state is a counter and each
/// output is a bijective hash of it, so a stream is fully determined by its key
/// and streams with different keys can be created for free.
class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit SplitMix64(std::uint64_t state = 0) : state_(state) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() { return mix(state_ += 0x9e3779b97f4a7c15ULL); }

    static constexpr std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

/// Hashes a sequence of counters (seed, step, row, ...) into a stream key.
inline std::uint64_t stream_key(std::initializer_list<std::uint64_t> parts) {
    std::uint64_t h = 0x6a09e667f3bcc908ULL;
    for (auto p : parts) {
        h = SplitMix64::mix(h ^ SplitMix64::mix(p + 0x9e3779b97f4a7c15ULL));
    }
    return h;
}

/// Uniform double in [0, 1) from the top 53 bits.
inline double uniform01(SplitMix64& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

}  // namespace lcl
