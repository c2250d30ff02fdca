#pragma once

#include <cstdint>
#include <random>

namespace rmt {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t& state);

// Independent stream seed for (seed, stream); stable across platforms.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t sub);

Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0);

}  // namespace rmt
