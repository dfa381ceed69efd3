#pragma once

#include <cstdint>
#include <random>

namespace lrshield {

// All randomness in the workbench flows from a single master seed.  Stage and
// per-scenario seeds are derived with splitmix64 so that results do not depend
// on scheduling order or on how many draws earlier stages consumed.

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Deterministic child seed: master seed x named stream x index.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index = 0) {
    std::uint64_t s = master;
    std::uint64_t a = splitmix64(s);
    s ^= stream + 0x9e3779b97f4a7c15ULL;
    std::uint64_t b = splitmix64(s);
    s ^= index * 0xda942042e4dd58b5ULL + 0x2545f4914f6cdd1dULL;
    std::uint64_t c = splitmix64(s);
    return a ^ (b + (c << 1));
}

// Stable stream ids for the pipeline stages.
namespace seed_stream {
inline constexpr std::uint64_t synth = 1;
inline constexpr std::uint64_t attacks_random = 2;
inline constexpr std::uint64_t detector_split = 3;
inline constexpr std::uint64_t predictor_subsample = 4;
inline constexpr std::uint64_t detector_normals = 5;
} // namespace seed_stream

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

} // namespace lrshield
