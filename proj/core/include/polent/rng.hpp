#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace polent {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x) noexcept;
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

// Stable labelled sub-seed: the same (master, label) always yields the same stream,
// independent of which other labels are in use.
std::uint64_t derive_seed(std::uint64_t master, std::string_view label) noexcept;
std::uint64_t derive_seed(std::uint64_t master, std::string_view label, std::uint64_t index) noexcept;

Rng make_rng(std::uint64_t master, std::string_view label);
Rng make_rng(std::uint64_t master, std::string_view label, std::uint64_t index);

}  // namespace polent
