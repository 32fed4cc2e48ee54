#pragma once

#include <cstdint>
#include <random>

namespace sethash {

// Every random stream in the library is derived from one user seed plus a
// stream counter: stream_seed(seed, stream) = splitmix64(seed + stream * golden).
// Each stage names its own stream so it can be replayed in isolation.
namespace stream {
inline constexpr std::uint64_t split = 1;
inline constexpr std::uint64_t pool = 2;
inline constexpr std::uint64_t sweep = 3;
inline constexpr std::uint64_t synth = 4;
inline constexpr std::uint64_t lsh = 5;
inline constexpr std::uint64_t gamma_sample = 6;
} // namespace stream

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream,
                                 std::uint64_t sub = 0) {
    return splitmix64(splitmix64(seed + stream * 0x9E3779B97F4A7C15ULL) + sub);
}

inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream,
                                std::uint64_t sub = 0) {
    return std::mt19937_64(stream_seed(seed, stream, sub));
}

// Fisher-Yates with an explicit bounded draw; std::shuffle's draw sequence is
// implementation-defined, this one is not.
template <class Vec>
void shuffle_in_place(Vec& v, std::mt19937_64& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng() % i);
        using std::swap;
        swap(v[i - 1], v[j]);
    }
}

} // namespace sethash
