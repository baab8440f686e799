// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "fixtures.hpp"

#include "clustrand/error.hpp"
#include "clustrand/estimators.hpp"
#include "clustrand/oracle.hpp"
#include "clustrand/sim.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

using namespace clustrand;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) { return format_short(v); }

EstimatorSpec custom(Family family, Adjustment adj, std::vector<Term> terms, WeightSource w = WeightSource::none) {
    EstimatorSpec s;
    s.label = "custom";
    s.family = family;
    s.adjustment = adj;
    s.covariates = std::move(terms);
    s.weights = w;
    return s;
}

bool at_most(double lhs, double rhs, double tol) { return lhs <= rhs + tol * std::max(1.0, std::abs(rhs)); }

// 1. Omega-weighted estimators reproduce their unit-level and total counterparts.
Outcome equivalence_identities() {
    const auto t0 = Clock::now();
    Rng rng = substream(101, 0);
    std::uniform_int_distribution<Index> m_dist(4, 40), p_dist(1, 3), max_size(2, 10);
    int compared = 0, skipped = 0, mismatched = 0;
    double worst = 0.0;

    auto compare = [&](const ClusteredSample& a, const EstimatorSpec& sa, const ClusteredSample& b,
                       const EstimatorSpec& sb) {
        std::optional<FittedEstimator> fa, fb;
        bool ea = false, eb = false;
        try {
            fa = fit_estimator(a, sa);
        } catch (const Error& ex) {
            if (ex.kind() == ErrorKind::validation) throw;
            ea = true;
        }
        try {
            fb = fit_estimator(b, sb);
        } catch (const Error& ex) {
            if (ex.kind() == ErrorKind::validation) throw;
            eb = true;
        }
        if (ea || eb) {
            // Too few clusters or an arm too small for the interactions: both sides must agree.
            if (ea != eb) ++mismatched;
            ++skipped;
            return;
        }
        ++compared;
        const double de = std::abs(fa->estimate - fb->estimate) / std::max(1.0, std::abs(fb->estimate));
        const double dv = std::abs(fa->variance - fb->variance) / std::max(1.0, std::abs(fb->variance));
        worst = std::max({worst, de, dv});
        if (de > 1e-10 || dv > 1e-10) ++mismatched;
    };

    for (int rep = 0; rep < 50; ++rep) {
        const Index m = m_dist(rng);
        const Index p = p_dist(rng);
        const ClusteredSample s = fixtures::random_sample(rng, {.m = m, .min_size = 1, .max_size = max_size(rng),
                                                                .px = p, .pc = p});
        const auto& l = s.layout();
        auto c_as_x = std::make_shared<const ClusterLayout>(l.with_unit_covariates(l.replicate(l.c())));
        const ClusteredSample su = s.with_layout(c_as_x);

        compare(s, make_estimator("tau_aw"), s, make_estimator("tau_i"));
        compare(s, custom(Family::wls_average, Adjustment::lin, {Term::cluster_c}, WeightSource::omega), su,
                custom(Family::individual, Adjustment::lin, {Term::unit_x}));
        compare(s, custom(Family::wls_average, Adjustment::lin, {Term::cluster_mean_x}, WeightSource::omega), s,
                make_estimator("tau_i_adj_xbar"));
        compare(s, make_estimator("tau_pia", WeightSource::omega), s, make_estimator("tau_t"));
        compare(s, custom(Family::weighted_average_ols, Adjustment::lin, {Term::cluster_c}, WeightSource::omega), s,
                custom(Family::cluster_total, Adjustment::lin, {Term::cluster_c}));
        compare(s,
                custom(Family::weighted_average_ols, Adjustment::lin, {Term::weight, Term::weight_mean_x},
                       WeightSource::omega),
                s, custom(Family::cluster_total, Adjustment::lin, {Term::size, Term::scaled_total_x}));
    }
    const double secs = seconds_since(t0);
    std::ostringstream d;
    d << compared << " pairs compared, " << skipped << " infeasible at small M, max rel diff " << fmt(worst) << ", "
      << fmt(secs) << " s";
    return {mismatched == 0 && compared >= 200 && secs < 5.0, d.str()};
}

// 2. The total estimator is exactly unbiased; the ratio estimator is not when sizes vary.
Outcome horvitz_thompson_unbiased() {
    const auto t0 = Clock::now();
    Rng rng = substream(102, 0);
    double worst_t = 0.0, min_bias_i = std::numeric_limits<double>::infinity();
    for (int rep = 0; rep < 5; ++rep) {
        const ScienceTable s = fixtures::random_science(rng, fixtures::random_layout(rng, {.m = 6, .max_size = 9}));
        const double tau = true_estimands(s).tau;
        const ExactDistribution t = exact_distribution(s, make_estimator("tau_t"), 0.5);
        const ExactDistribution i = exact_distribution(s, make_estimator("tau_i"), 0.5);
        if (t.count != 20) return {false, "expected 20 assignments"};
        worst_t = std::max(worst_t, std::abs(t.mean - tau));
        min_bias_i = std::min(min_bias_i, std::abs(i.mean - tau));
    }
    const double secs = seconds_since(t0);
    std::ostringstream d;
    d << "max |E tau_t - tau| = " << fmt(worst_t) << ", min |E tau_i - tau| = " << fmt(min_bias_i) << ", "
      << fmt(secs) << " s";
    return {worst_t <= 1e-12 && min_bias_i > 1e-6 && secs < 1.0, d.str()};
}

// 3. Exact variance of the cluster-level difference in means against the closed form.
Outcome closed_form_variance() {
    Rng rng = substream(103, 0);
    double worst = 0.0;
    int tables = 0;
    for (Index m = 4; m <= 8; ++m) {
        for (Index k = 1; k < m; ++k) {
            const ScienceTable s = fixtures::random_science(rng, fixtures::random_layout(rng, {.m = m, .max_size = 7}));
            const double e = static_cast<double>(k) / static_cast<double>(m);
            const ExactDistribution d = exact_distribution(s, make_estimator("tau_t"), e);
            const auto& l = s.layout();
            const double scale = static_cast<double>(m) / static_cast<double>(l.unit_count());
            VectorXd t1 = l.sum_by_cluster(s.y1()) * scale, t0 = l.sum_by_cluster(s.y0()) * scale;
            t1.array() -= t1.mean();
            t0.array() -= t0.mean();
            const double v = neyman_variance(t1, t0, e).v;
            worst = std::max(worst, std::abs(d.variance * static_cast<double>(m - 1) - v) / std::max(1.0, v));
            ++tables;
        }
    }
    std::ostringstream d;
    d << tables << " tables with M in [4, 8], max rel diff " << fmt(worst);
    return {worst <= 1e-10, d.str()};
}

// 4. Balanced design with centred outcomes: the total estimator has no larger MSE.
Outcome balanced_mse() {
    Rng rng = substream(104, 0);
    int violations = 0;
    double min_ratio = std::numeric_limits<double>::infinity();
    for (int rep = 0; rep < 20; ++rep) {
        const Index m = 4 + 2 * (rep % 3);
        const ScienceTable raw = fixtures::random_science(rng, fixtures::random_layout(rng, {.m = m, .max_size = 8}));
        const VectorXd y1 = (raw.y1().array() - raw.y1().mean()).matrix();
        const VectorXd y0 = (raw.y0().array() - raw.y0().mean()).matrix();
        const ScienceTable s(raw.layout_ptr(), y1, y0);
        const double mse_t = exact_distribution(s, make_estimator("tau_t"), 0.5).mse;
        const double mse_i = exact_distribution(s, make_estimator("tau_i"), 0.5).mse;
        if (!at_most(mse_t, mse_i, 1e-12)) ++violations;
        min_ratio = std::min(min_ratio, mse_i / mse_t);
    }
    std::ostringstream d;
    d << "20 tables, " << violations << " violations, min MSE(tau_i)/MSE(tau_t) = " << fmt(min_ratio);
    return {violations == 0, d.str()};
}

// 5. Theoretical standard-error orderings for the unit and weighted targets.
Outcome se_orderings() {
    Rng rng = substream(105, 0);
    std::uniform_int_distribution<Index> m_dist(12, 60), px_dist(1, 2), pc_dist(0, 1);
    const double es[3] = {0.3, 0.5, 0.6};
    const WeightSource sources[3] = {WeightSource::column, WeightSource::omega, WeightSource::uniform};
    const EstimatorSpec t_nx = custom(Family::cluster_total, Adjustment::lin, {Term::size, Term::scaled_total_x});
    int violations = 0, checks = 0;
    double tightest = std::numeric_limits<double>::infinity();

    auto leq = [&](double a, double b) {
        ++checks;
        if (!at_most(a, b, 1e-10)) ++violations;
        tightest = std::min(tightest, b - a);
    };
    auto v = [](const ScienceTable& s, const EstimatorSpec& spec, double e) {
        const double se = theoretical_se(s, spec, e).se;
        return se * se;
    };

    for (int rep = 0; rep < 50; ++rep) {
        const ScienceTable s = fixtures::random_science(
            rng, fixtures::random_layout(rng, {.m = m_dist(rng), .max_size = 10, .px = px_dist(rng), .pc = pc_dist(rng),
                                               .weights = true}));
        const double e = es[rep % 3];
        const double nx = v(s, t_nx, e);
        leq(nx, v(s, make_estimator("tau_t_adj_n"), e));
        leq(v(s, make_estimator("tau_t_adj_n"), e), v(s, make_estimator("tau_i"), e));
        leq(nx, v(s, make_estimator("tau_i_adj"), e));

        const WeightSource w = sources[rep % 3];
        const EstimatorSpec pi_only = custom(Family::weighted_average_ols, Adjustment::lin, {Term::weight}, w);
        const double full = v(s, make_estimator("tau_pia_adj", w), e);
        leq(full, v(s, pi_only, e));
        leq(v(s, pi_only, e), v(s, make_estimator("tau_api", w), e));
        leq(full, v(s, make_estimator("tau_api_adj", w), e));
    }
    std::ostringstream d;
    d << checks << " inequalities on 50 tables, " << violations << " violations, smallest slack " << fmt(tightest);
    return {violations == 0, d.str()};
}

std::vector<EstimatorSpec> specs(std::initializer_list<const char*> names) {
    std::vector<EstimatorSpec> out;
    for (const char* n : names) out.push_back(make_estimator(n));
    return out;
}

const MetricsRow& row(const MonteCarloResult& r, const std::string& label) {
    for (const auto& m : r.rows)
        if (m.label == label) return m;
    throw std::runtime_error("missing row " + label);
}

// 6. Deterministic four-type population: adjustment hurts the unit estimator.
Outcome four_type_population() {
    const auto t0 = Clock::now();
    const ScenarioDraw draw = make_scenario("s63", 1);
    MonteCarloOptions o;
    o.replications = 10000;
    o.seed = 2023;
    const auto r = run_monte_carlo(draw.science, draw.scenario.e,
                                   specs({"tau_i", "tau_i_adj", "tau_t_adj_nx", "tau_a"}), o);
    const double sd_i = row(r, "tau_i").sd, sd_ia = row(r, "tau_i_adj").sd, sd_t = row(r, "tau_t_adj_nx").sd;
    const double cov_a = row(r, "tau_a").coverage;
    const double secs = seconds_since(t0);
    std::ostringstream d;
    d << "sd tau_i " << fmt(sd_i) << ", tau_i_adj " << fmt(sd_ia) << ", tau_t_adj_nx " << fmt(sd_t)
      << ", coverage tau_a " << fmt(cov_a) << ", " << fmt(secs) << " s";
    const bool ok = std::abs(sd_i - 0.156) <= 0.005 && std::abs(sd_ia - 0.169) <= 0.005 &&
                    std::abs(sd_t - 0.036) <= 0.003 && cov_a <= 0.45 && secs < 60.0;
    return {ok, d.str()};
}

// 7. Random-size population with x in the outcomes.
Outcome random_size_population() {
    const auto t0 = Clock::now();
    const ScenarioDraw draw = make_scenario("s61", 2023);
    MonteCarloOptions o;
    o.replications = 2000;
    o.seed = 7;
    const auto r = run_monte_carlo(draw.science, draw.scenario.e,
                                   specs({"tau_i", "tau_i_adj", "tau_t", "tau_t_adj_nx", "tau_a"}), o);
    const auto& i = row(r, "tau_i");
    const auto& ia = row(r, "tau_i_adj");
    const auto& t = row(r, "tau_t");
    const auto& tn = row(r, "tau_t_adj_nx");
    const auto& a = row(r, "tau_a");
    const double secs = seconds_since(t0);
    std::ostringstream d;
    d << "bias tau_i " << fmt(i.bias) << ", tau_i_adj " << fmt(ia.bias) << ", tau_t_adj_nx " << fmt(tn.bias)
      << "; coverage tau_i " << fmt(i.coverage) << "; sd tau_t " << fmt(t.sd) << ", tau_i " << fmt(i.sd)
      << ", tau_t_adj_nx " << fmt(tn.sd) << "; bias tau_a " << fmt(a.bias) << ", " << fmt(secs) << " s";
    const bool ok = std::abs(i.bias) < 0.01 && std::abs(ia.bias) < 0.01 && std::abs(tn.bias) < 0.01 &&
                    i.coverage >= 0.93 && i.coverage <= 1.0 && t.sd > 1.5 * i.sd && i.sd > 1.5 * tn.sd &&
                    a.bias < -0.05 && secs < 300.0;
    return {ok, d.str()};
}

// 8. Dominant cluster: average-based estimators stay valid, size-adjusted totals break down.
Outcome dominant_cluster() {
    const ScenarioDraw draw = make_scenario("s65", 2023);
    MonteCarloOptions o;
    o.replications = 1000;
    o.seed = 11;
    const auto r = run_monte_carlo(draw.science, draw.scenario.e, specs({"tau_a", "tau_a_adj", "tau_t_adj_n"}), o);
    const double a = row(r, "tau_a").coverage, aa = row(r, "tau_a_adj").coverage, tn = row(r, "tau_t_adj_n").coverage;
    std::ostringstream d;
    d << "coverage tau_a " << fmt(a) << ", tau_a_adj " << fmt(aa) << ", tau_t_adj_n " << fmt(tn);
    return {a >= 0.92 && a <= 0.98 && aa >= 0.92 && aa <= 0.98 && tn < 0.5, d.str()};
}

// 9. Estimated variances are conservative and approach the conservative limit.
Outcome conservativeness() {
    const ScenarioDraw draw = make_scenario("s61", 2024, 400);
    const double m = static_cast<double>(draw.science.layout().cluster_count());
    const double e = draw.scenario.e;
    MonteCarloOptions o;
    o.replications = 2000;
    o.seed = 13;
    const auto list = specs({"tau_i", "tau_t", "tau_t_adj_nx"});
    const auto r = run_monte_carlo(draw.science, e, list, o);
    bool ok = true;
    std::ostringstream d;
    for (std::size_t k = 0; k < list.size(); ++k) {
        const auto& est = r.estimates[k];
        const auto& ses = r.ses[k];
        const double n = static_cast<double>(est.size());
        double mean = 0.0, mean_v = 0.0;
        for (std::size_t q = 0; q < est.size(); ++q) {
            mean += est[q] / n;
            mean_v += m * ses[q] * ses[q] / n;
        }
        double ss = 0.0, ss_v = 0.0, m4 = 0.0;
        for (std::size_t q = 0; q < est.size(); ++q) {
            const double dev = est[q] - mean;
            ss += dev * dev;
            m4 += dev * dev * dev * dev / n;
            const double dv = m * ses[q] * ses[q] - mean_v;
            ss_v += dv * dv;
        }
        const double var = ss / (n - 1);
        const double mc_var = m * var;
        // Monte Carlo SE of M * sample variance, from the fourth central moment, and of the mean of M se^2.
        const double se_var = m * std::sqrt(std::max(0.0, m4 - var * var * (n - 3) / (n - 1)) / n);
        const double se_mean = std::sqrt(ss_v / (n - 1) / n);
        const double mc_se = std::sqrt(se_var * se_var + se_mean * se_mean);
        const double vc = theoretical_se(draw.science, list[k], e).vc;
        const double rel = std::abs(mean_v - vc) / vc;
        const bool conservative = mean_v >= mc_var - 3.0 * mc_se;
        ok = ok && conservative && rel < 0.10;
        d << list[k].label << ": mean M se^2 " << fmt(mean_v) << " vs M var " << fmt(mc_var) << " (MC se "
          << fmt(mc_se) << "), V_c " << fmt(vc) << " rel err " << fmt(rel) << "; ";
    }
    return {ok, d.str()};
}

// 10. Randomization tests under the sharp null.
Outcome randomization_validity() {
    Rng rng = substream(110, 0);
    int grid_violations = 0;
    for (int rep = 0; rep < 5; ++rep) {
        const ScienceTable raw = fixtures::random_science(rng, fixtures::random_layout(rng, {.m = 6, .max_size = 6}));
        const ScienceTable null(raw.layout_ptr(), raw.y0(), raw.y0());
        for (const char* name : {"tau_i", "tau_t", "tau_a"}) {
            const auto all = enumerate_assignments(6, 3, 100);
            std::vector<double> p;
            FrtOptions f;
            f.exact = true;
            for (const auto& z : all) p.push_back(fisher_randomization_test(null.reveal(z), make_estimator(name), f).p_value);
            for (int k = 1; k <= 20; ++k) {
                const double alpha = k / 20.0;
                double hits = 0;
                for (double pv : p) hits += pv <= alpha + 1e-12 ? 1.0 : 0.0;
                if (hits / 20.0 > alpha + 1e-12) ++grid_violations;
            }
        }
    }

    int rejections = 0;
    const int datasets = 1000;
    for (int rep = 0; rep < datasets; ++rep) {
        Rng r = substream(111, static_cast<std::uint64_t>(rep));
        const ScienceTable raw = fixtures::random_science(r, fixtures::random_layout(r, {.m = 20, .max_size = 6}));
        const ScienceTable null(raw.layout_ptr(), raw.y0(), raw.y0());
        const ClusteredSample obs = null.reveal(random_assignment(r, 20, 10));
        FrtOptions f;
        f.draws = 199;
        f.seed = static_cast<std::uint64_t>(rep) + 1;
        if (fisher_randomization_test(obs, make_estimator("tau_i"), f).p_value <= 0.05) ++rejections;
    }
    const double rate = static_cast<double>(rejections) / datasets;
    std::ostringstream d;
    d << "exact grid violations " << grid_violations << " (15 fixtures x 20 levels); Monte Carlo type-I error "
      << fmt(rate) << " over " << datasets << " datasets";
    return {grid_violations == 0 && rate <= 0.065, d.str()};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"equivalence identities under omega weights", equivalence_identities},
        {"exact unbiasedness of the total estimator", horvitz_thompson_unbiased},
        {"exact variance of the cluster-level difference in means", closed_form_variance},
        {"balanced centred design: MSE(tau_t) <= MSE(tau_i)", balanced_mse},
        {"theoretical standard-error orderings", se_orderings},
        {"four-type population (s63)", four_type_population},
        {"random-size population (s61)", random_size_population},
        {"dominant cluster (s65)", dominant_cluster},
        {"conservative variance estimation at M = 400", conservativeness},
        {"randomization test validity", randomization_validity},
    };
    int failed = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        Outcome o;
        try {
            o = criteria[k].second();
        } catch (const std::exception& ex) {
            o = {false, std::string("exception: ") + ex.what()};
        }
        if (!o.pass) ++failed;
        std::cout << "criterion " << k + 1 << ": " << (o.pass ? "PASS" : "FAIL") << "  " << criteria[k].first << "  ["
                  << o.detail << "]" << std::endl;
    }
    std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
    return failed == 0 ? 0 : 1;
}
