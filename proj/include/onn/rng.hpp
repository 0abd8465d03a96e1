#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace onn {

using Rng = std::mt19937_64;

std::uint64_t fnv1a64(std::string_view bytes);
std::uint64_t splitmix64(std::uint64_t x);

// Independent per-purpose seed derived from the master seed and a stream name.
std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view stream);

// The named streams every run draws from. All of them derive from master_seed.
struct SeedStreams {
    std::uint64_t master = 0;
    std::uint64_t split = 0;
    std::uint64_t init = 0;
    std::uint64_t batch = 0;
    std::uint64_t noise = 0;
    std::uint64_t probes = 0;

    static SeedStreams from_master(std::uint64_t master_seed);
};

inline constexpr std::uint64_t kDefaultMasterSeed = 20220707;

}  // namespace onn
