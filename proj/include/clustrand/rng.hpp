#pragma once

#include "clustrand/sample.hpp"

#include <cstdint>
#include <random>

namespace clustrand {

using Rng = std::mt19937_64;

/// Independent generator for stream `stream` under `seed`. Replication r of a run always uses
/// substream(seed, r), so results do not depend on scheduling or thread count.
Rng substream(std::uint64_t seed, std::uint64_t stream);

/// Uniformly random assignment with exactly `treated` of `clusters` clusters treated.
Assignment random_assignment(Rng& rng, Index clusters, Index treated);

/// Nearest integer, halves rounded away from zero.
long long round_half_away(double v);

}  // namespace clustrand
