#pragma once

#include <cstdint>
#include <random>

#include "countflow/types.hpp"

namespace countflow {

using Rng = std::mt19937_64;

/// Independent generator for (seed, stream). Work items that own a stream
/// produce the same draws regardless of scheduling or thread count.
Rng make_stream(std::uint64_t seed, std::uint64_t stream);

/// Uniform double in [0, 1).
double uniform01(Rng& rng);

/// Exact Binomial(n, p) draw. Inverse-CDF from zero for n <= 64; for larger n
/// the CDF is inverted outward from the mode so the expected work is
/// O(sqrt(n)). Deterministic given the generator state.
Count sample_binomial(Count n, double p, Rng& rng);

}  // namespace countflow
