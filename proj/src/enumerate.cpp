#include "clustrand/error.hpp"
#include "clustrand/oracle.hpp"
#include "clustrand/parallel.hpp"

#include <cmath>
#include <limits>
#include <numeric>

namespace clustrand {

std::uint64_t binomial_count(Index m, Index k) {
    if (k < 0 || k > m) return 0;
    k = std::min(k, m - k);
    // Saturates at uint64 max so callers can compare against a cap safely.
    unsigned __int128 acc = 1;
    for (Index j = 1; j <= k; ++j) {
        acc = acc * static_cast<unsigned __int128>(m - k + j) / static_cast<unsigned __int128>(j);
        if (acc > std::numeric_limits<std::uint64_t>::max()) return std::numeric_limits<std::uint64_t>::max();
    }
    return static_cast<std::uint64_t>(acc);
}

std::vector<Assignment> enumerate_assignments(Index m, Index k, std::uint64_t cap) {
    const std::uint64_t total = binomial_count(m, k);
    if (total > cap) {
        throw ValidationError("C(" + std::to_string(m) + ", " + std::to_string(k) + ") = " + std::to_string(total) +
                              " assignments exceeds the enumeration cap of " + std::to_string(cap) +
                              "; use Monte Carlo draws instead");
    }
    std::vector<Assignment> out;
    out.reserve(static_cast<std::size_t>(total));
    std::vector<Index> idx(static_cast<std::size_t>(k));
    std::iota(idx.begin(), idx.end(), Index{0});
    while (true) {
        Assignment z(static_cast<std::size_t>(m), 0);
        for (Index i : idx) z[static_cast<std::size_t>(i)] = 1;
        out.push_back(std::move(z));
        // Advance to the next index set in lexicographic order.
        Index pos = k - 1;
        while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == m - k + pos) --pos;
        if (pos < 0) break;
        ++idx[static_cast<std::size_t>(pos)];
        for (Index j = pos + 1; j < k; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
    }
    return out;
}

namespace {

Index treated_count(Index m, double e) {
    if (!(e > 0.0 && e < 1.0)) throw ValidationError("treated fraction e must lie in (0, 1)");
    const double em = e * static_cast<double>(m);
    const double k = std::round(em);
    if (std::abs(em - k) > 1e-9 * std::max(1.0, em)) throw ValidationError("e * M must be an integer for enumeration");
    return static_cast<Index>(k);
}

}  // namespace

ExactDistribution exact_distribution(const ScienceTable& science, const EstimatorSpec& spec, double e,
                                     std::uint64_t cap, unsigned threads) {
    const Index m = science.layout().cluster_count();
    const auto assignments = enumerate_assignments(m, treated_count(m, e), cap);

    std::vector<double> est(assignments.size(), std::numeric_limits<double>::quiet_NaN());
    parallel_for(assignments.size(), resolve_threads(threads), [&](std::size_t a) {
        try {
            est[a] = fit_estimator(science.reveal(assignments[a]), spec).estimate;
        } catch (const Error&) {
            // counted below as a failure
        }
    });

    ExactDistribution out;
    out.estimand = target_estimand(science, spec);
    double sum = 0.0;
    for (double v : est) {
        if (std::isnan(v)) {
            ++out.failures;
            continue;
        }
        sum += v;
        ++out.count;
    }
    if (out.count == 0) throw InsufficientDataError("estimator failed under every assignment");
    out.mean = sum / static_cast<double>(out.count);
    double ss = 0.0;
    double se = 0.0;
    for (double v : est) {
        if (std::isnan(v)) continue;
        ss += (v - out.mean) * (v - out.mean);
        se += (v - out.estimand) * (v - out.estimand);
    }
    out.variance = ss / static_cast<double>(out.count);
    out.mse = se / static_cast<double>(out.count);
    out.estimates = std::move(est);
    return out;
}

}  // namespace clustrand
