#pragma once

#include "clustrand/estimators.hpp"
#include "clustrand/sample.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace clustrand {

struct EstimandSet {
    double tau = 0.0;      // sum_i omega_i tau_i (unit ATE)
    double tau_bar = 0.0;  // (1/M) sum_i tau_i
    double tau_pi = 0.0;   // sum_i pi_i tau_i; equals tau_bar when no pi given
    Eigen::VectorXd tau_i;
};

EstimandSet true_estimands(const ScienceTable& science, const std::optional<Eigen::VectorXd>& pi = std::nullopt);

/// The estimand an estimator targets: tau, or tau_pi under its own weights.
double target_estimand(const ScienceTable& science, const EstimatorSpec& spec);

struct NeymanVariance {
    double v = 0.0;
    double vc = 0.0;
};

/// V_c = (1/M) sum {E1^2/e + E0^2/(1-e)}, V = V_c - (1/M) sum (E1 - E0)^2.
/// Inputs must average to zero over clusters.
NeymanVariance neyman_variance(const Eigen::VectorXd& e1, const Eigen::VectorXd& e0, double e);

struct ClusterResiduals {
    Eigen::VectorXd r1;
    Eigen::VectorXd r0;
    Eigen::VectorXd q1;  // projection coefficients by arm, empty when unadjusted
    Eigen::VectorXd q0;
};

/// Theoretical residuals r_i(z) of the asymptotic variance for the given estimator.
ClusterResiduals theoretical_residuals(const ScienceTable& science, const EstimatorSpec& spec, double e);

struct TheoreticalSe {
    double se = 0.0;               // sqrt(V / M)
    double se_conservative = 0.0;  // sqrt(V_c / M), the limit of the estimated SE
    double v = 0.0;
    double vc = 0.0;
};

TheoreticalSe theoretical_se(const ScienceTable& science, const EstimatorSpec& spec, double e);

/// Treated-cluster index sets of size k in lexicographic order.
std::vector<Assignment> enumerate_assignments(Index m, Index k, std::uint64_t cap);
std::uint64_t binomial_count(Index m, Index k);

struct ExactDistribution {
    double mean = 0.0;
    double variance = 0.0;  // over assignments (denominator = count)
    double mse = 0.0;       // about the estimator's own estimand
    double estimand = 0.0;
    std::uint64_t count = 0;
    std::uint64_t failures = 0;
    std::vector<double> estimates;
};

inline constexpr std::uint64_t default_enumeration_cap = 1'000'000;

ExactDistribution exact_distribution(const ScienceTable& science, const EstimatorSpec& spec, double e,
                                     std::uint64_t cap = default_enumeration_cap, unsigned threads = 0);

struct FrtOptions {
    bool exact = false;
    std::uint64_t draws = 1000;
    std::uint64_t seed = 1;
    std::uint64_t cap = default_enumeration_cap;
    unsigned threads = 0;
};

struct FrtResult {
    double p_value = 1.0;
    double statistic = 0.0;  // observed |estimate / se|
    bool exact = false;
    std::uint64_t reference_size = 0;  // draws, or assignments enumerated
    std::uint64_t degenerate = 0;      // reference draws with se = 0 or a failed fit
    std::uint64_t seed = 0;
    double reference_mean = 0.0;
    double reference_max = 0.0;
};

FrtResult fisher_randomization_test(const ClusteredSample& sample, const EstimatorSpec& spec, const FrtOptions& options);

struct RegularityReport {
    double max_share = 0.0;           // Omega
    double max_omega_tilde = 0.0;
    double median_omega_tilde = 0.0;
    double second_moment = 0.0;       // (1/M) sum omega-tilde^2
    double fourth_moment = 0.0;       // (1/M) sum omega-tilde^4
    bool dominant_cluster = false;    // Omega > 0.1
    bool heavy_tailed_sizes = false;  // max omega-tilde > 5 * median
    std::vector<std::string> warnings;
};

RegularityReport regularity_diagnostics(const ClusterLayout& layout);

unsigned resolve_threads(unsigned requested);

}  // namespace clustrand
