#include "clustrand/rng.hpp"

#include "clustrand/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace clustrand {

Rng substream(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                      0x9e3779b9u};
    return Rng(seq);
}

Assignment random_assignment(Rng& rng, Index clusters, Index treated) {
    if (treated < 0 || treated > clusters) throw ValidationError("treated count outside [0, M]");
    std::vector<Index> idx(static_cast<std::size_t>(clusters));
    std::iota(idx.begin(), idx.end(), Index{0});
    // Partial Fisher-Yates: the first `treated` slots are a uniform random subset.
    for (Index k = 0; k < treated; ++k) {
        std::uniform_int_distribution<Index> pick(k, clusters - 1);
        std::swap(idx[static_cast<std::size_t>(k)], idx[static_cast<std::size_t>(pick(rng))]);
    }
    Assignment z(static_cast<std::size_t>(clusters), 0);
    for (Index k = 0; k < treated; ++k) z[static_cast<std::size_t>(idx[static_cast<std::size_t>(k)])] = 1;
    return z;
}

long long round_half_away(double v) { return std::llround(v); }

}  // namespace clustrand
