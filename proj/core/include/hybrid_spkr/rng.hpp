#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace hybrid_spkr {

using Rng = std::mt19937_64;

// Derives an independent stream seed from a root seed, a purpose tag and an index.
std::uint64_t derive_seed(std::uint64_t root, std::string_view tag, std::uint64_t index = 0);

// 64-bit FNV-1a, used for content fingerprints.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace hybrid_spkr
