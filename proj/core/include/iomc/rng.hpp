#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace iomc {

/// Per-stream generator. Streams are never shared between chains or cases.
using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

/// Child seed for counter `index` under `parent`. Distinct (parent, index)
/// pairs give statistically independent streams.
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index);

/// Same as above with a named sub-stream, e.g. derive_seed(case_seed, "noise").
std::uint64_t derive_seed(std::uint64_t parent, std::string_view label, std::uint64_t index = 0);

inline Rng make_rng(std::uint64_t seed) { return Rng{seed}; }

void fill_standard_normal(Rng& rng, std::span<double> out);

}  // namespace iomc
