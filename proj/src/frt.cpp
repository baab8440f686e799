#include "clustrand/error.hpp"
#include "clustrand/oracle.hpp"
#include "clustrand/parallel.hpp"
#include "clustrand/rng.hpp"

#include <cmath>

namespace clustrand {

namespace {

struct Statistic {
    double t = 0.0;
    bool degenerate = false;  // se = 0 or the fit failed; t is then 0 by convention
};

// An SE at round-off level relative to the outcome scale counts as zero.
bool vanishing_se(double se, const ClusteredSample& sample) {
    return !(se > 1e-10 * std::max(1.0, sample.y().cwiseAbs().maxCoeff()));
}

Statistic studentized(const ClusteredSample& sample, const EstimatorSpec& spec) {
    try {
        const FittedEstimator f = fit_estimator(sample, spec);
        const double se = std::sqrt(f.variance);
        if (vanishing_se(se, sample)) return {0.0, true};
        return {std::abs(f.estimate / se), false};
    } catch (const Error&) {
        return {0.0, true};
    }
}

}  // namespace

FrtResult fisher_randomization_test(const ClusteredSample& sample, const EstimatorSpec& spec,
                                    const FrtOptions& options) {
    sample.require_both_arms();
    // Let errors on the observed data propagate; only reference draws use the t = 0 convention.
    const FittedEstimator observed = fit_estimator(sample, spec);
    const double se_obs = std::sqrt(observed.variance);
    const double t_obs = vanishing_se(se_obs, sample) ? 0.0 : std::abs(observed.estimate / se_obs);

    const Index m = sample.cluster_count();
    const Index k = sample.treated_clusters();

    std::vector<Assignment> refs;
    if (options.exact) {
        refs = enumerate_assignments(m, k, options.cap);
    } else {
        if (options.draws < 1) throw ValidationError("randomization test needs at least one draw");
        refs.resize(static_cast<std::size_t>(options.draws));
        for (std::uint64_t d = 0; d < options.draws; ++d) {
            Rng rng = substream(options.seed, d);
            refs[static_cast<std::size_t>(d)] = random_assignment(rng, m, k);
        }
    }

    std::vector<double> stats(refs.size(), 0.0);
    std::vector<char> degenerate(refs.size(), 0);
    parallel_for(refs.size(), resolve_threads(options.threads), [&](std::size_t a) {
        const Statistic s = studentized(sample.with_assignment(refs[a]), spec);
        stats[a] = s.t;
        degenerate[a] = s.degenerate ? 1 : 0;
    });

    FrtResult out;
    out.exact = options.exact;
    out.statistic = t_obs;
    out.seed = options.seed;
    out.reference_size = refs.size();
    const double threshold = t_obs - 1e-10 * std::max(1.0, t_obs);
    std::uint64_t extreme = 0;
    double sum = 0.0;
    for (std::size_t a = 0; a < stats.size(); ++a) {
        if (stats[a] >= threshold) ++extreme;
        out.degenerate += degenerate[a] ? 1 : 0;
        sum += stats[a];
        out.reference_max = std::max(out.reference_max, stats[a]);
    }
    out.reference_mean = sum / static_cast<double>(stats.size());
    const double n = static_cast<double>(refs.size());
    out.p_value = options.exact ? static_cast<double>(extreme) / n : (static_cast<double>(extreme) + 1.0) / (n + 1.0);
    return out;
}

}  // namespace clustrand
