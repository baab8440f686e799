#include "clustrand/error.hpp"
#include "clustrand/oracle.hpp"
#include "clustrand/parallel.hpp"
#include "clustrand/rng.hpp"
#include "clustrand/sim.hpp"

#include <cmath>
#include <limits>

namespace clustrand {

bool covers(const CoverageInterval& ci, double truth) { return ci.low <= truth && truth <= ci.high; }

double coverage_rate(const std::vector<CoverageInterval>& cis, double truth) {
    if (cis.empty()) return 0.0;
    std::size_t hits = 0;
    for (const auto& ci : cis) hits += covers(ci, truth) ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(cis.size());
}

MonteCarloResult run_monte_carlo(const ScienceTable& science, double e, const std::vector<EstimatorSpec>& specs,
                                 const MonteCarloOptions& options) {
    if (options.replications < 1) throw ValidationError("the number of replications R must be at least 1");
    if (!(e > 0.0 && e < 1.0)) throw ValidationError("treated fraction e must lie in (0, 1)");
    const Index m = science.layout().cluster_count();
    const double em = e * static_cast<double>(m);
    const Index k = static_cast<Index>(std::llround(em));
    if (std::abs(em - static_cast<double>(k)) > 1e-9 * std::max(1.0, em)) {
        throw ValidationError("e * M must be an integer number of treated clusters");
    }
    if (k < 1 || k >= m) throw InsufficientDataError("e * M leaves one arm without clusters");
    const double crit = normal_critical_value(options.level);

    const std::size_t reps = static_cast<std::size_t>(options.replications);
    const std::size_t ns = specs.size();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    MonteCarloResult out;
    out.estimates.assign(ns, std::vector<double>(reps, nan));
    out.ses.assign(ns, std::vector<double>(reps, nan));

    parallel_for(reps, resolve_threads(options.threads), [&](std::size_t r) {
        Rng rng = substream(options.seed, r);
        const ClusteredSample sample = science.reveal(random_assignment(rng, m, k));
        for (std::size_t s = 0; s < ns; ++s) {
            try {
                const FittedEstimator f = fit_estimator(sample, specs[s]);
                out.estimates[s][r] = f.estimate;
                out.ses[s][r] = std::sqrt(f.variance);
            } catch (const Error&) {
                // excluded from this estimator's aggregates
            }
        }
    });

    const double tau = true_estimands(science).tau;
    for (std::size_t s = 0; s < ns; ++s) {
        MetricsRow row;
        row.label = specs[s].label;
        row.truth = options.truth == TruthMode::tau ? tau : target_estimand(science, specs[s]);
        double sum = 0.0, sum_se = 0.0, sq_err = 0.0, covered = 0.0;
        for (std::size_t r = 0; r < reps; ++r) {
            const double est = out.estimates[s][r];
            if (std::isnan(est)) {
                ++row.failures;
                continue;
            }
            ++row.successes;
            const double se = out.ses[s][r];
            sum += est;
            sum_se += se;
            sq_err += (est - row.truth) * (est - row.truth);
            covered += covers({est - crit * se, est + crit * se}, row.truth) ? 1.0 : 0.0;
        }
        if (row.successes > 0) {
            const double n = static_cast<double>(row.successes);
            row.mean_estimate = sum / n;
            row.bias = row.mean_estimate - row.truth;
            row.mean_se = sum_se / n;
            row.rmse = std::sqrt(sq_err / n);
            row.coverage = covered / n;
            double ss = 0.0;
            for (std::size_t r = 0; r < reps; ++r) {
                const double est = out.estimates[s][r];
                if (!std::isnan(est)) ss += (est - row.mean_estimate) * (est - row.mean_estimate);
            }
            row.sd = row.successes > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
        } else {
            row.mean_estimate = row.bias = row.mean_se = row.rmse = row.coverage = row.sd = nan;
        }
        out.rows.push_back(std::move(row));
    }
    return out;
}

}  // namespace clustrand
