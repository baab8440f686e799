#pragma once

#include "clustrand/design.hpp"
#include "clustrand/wls.hpp"

#include <string>
#include <vector>

namespace clustrand {

enum class SeFlavor { lz, hw };

struct Diagnostics {
    double max_share = 0.0;  // Omega
    Index clusters = 0;
    Index treated_units = 0;
    Index control_units = 0;
    double treated_fraction = 0.0;
};

struct EstimatorReport {
    std::string label;
    double estimate = 0.0;
    double se = 0.0;
    SeFlavor se_flavor = SeFlavor::lz;
    double ci_low = 0.0;
    double ci_high = 0.0;
    double level = 0.95;
    EstimatorSpec spec;
    Diagnostics diagnostics;
    std::vector<std::string> warnings;
};

struct FittedEstimator {
    Design design;
    FitResult fit;
    double estimate = 0.0;
    double variance = 0.0;
    SeFlavor se_flavor = SeFlavor::lz;
};

/// Fit without CI assembly; the SE flavor follows the family (LZ for unit rows, HW otherwise).
FittedEstimator fit_estimator(const ClusteredSample& sample, const EstimatorSpec& spec);

/// Dispatches on spec.family and forms the Wald interval estimate +/- z_{(1+level)/2} se.
EstimatorReport estimate(const ClusteredSample& sample, const EstimatorSpec& spec, double level = 0.95);

EstimatorReport individual_regression(const ClusteredSample& sample, Adjustment adjustment,
                                      std::vector<Term> covariates = {Term::unit_x}, double level = 0.95);
EstimatorReport cluster_total_regression(const ClusteredSample& sample, Adjustment adjustment,
                                         std::vector<Term> covariates = {Term::size, Term::scaled_total_x},
                                         double level = 0.95);
EstimatorReport wls_average_regression(const ClusteredSample& sample, WeightSource pi, Adjustment adjustment,
                                       std::vector<Term> covariates = {Term::cluster_mean_x}, double level = 0.95);
EstimatorReport weighted_average_ols_regression(const ClusteredSample& sample, WeightSource pi, Adjustment adjustment,
                                                std::vector<Term> covariates = {Term::weight, Term::weight_mean_x},
                                                double level = 0.95);

/// Wald interval half-width multiplier; level in [0, 1).
double normal_critical_value(double level);

std::string to_string(SeFlavor f);

// Registry of named estimators. `pi_source` supplies the weights of tau_api / tau_pia variants.
EstimatorSpec make_estimator(const std::string& name, WeightSource pi_source = WeightSource::omega);
std::vector<std::string> registry_names();

}  // namespace clustrand
