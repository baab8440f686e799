#include "clustrand/estimators.hpp"

#include "clustrand/error.hpp"

#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <sstream>

namespace clustrand {

double normal_critical_value(double level) {
    if (!(level >= 0.0 && level < 1.0)) {
        throw ValidationError("confidence level must lie in [0, 1)");
    }
    if (level == 0.0) return 0.0;
    static const boost::math::normal standard;
    return boost::math::quantile(standard, 0.5 * (1.0 + level));
}

std::string to_string(SeFlavor f) { return f == SeFlavor::lz ? "LZ" : "HW"; }

FittedEstimator fit_estimator(const ClusteredSample& sample, const EstimatorSpec& spec) {
    sample.require_both_arms();
    FittedEstimator out;
    out.design = build_design(sample, spec);
    const Design& d = out.design;

    if (spec.adjustment != Adjustment::none && d.matrix.rows() <= d.matrix.cols()) {
        std::ostringstream msg;
        msg << spec.label << ": " << d.matrix.rows() << (d.unit_level ? " units" : " clusters")
            << " are too few for a design with " << d.matrix.cols() << " columns";
        throw InsufficientDataError(msg.str());
    }

    out.fit = wls_fit(d);
    if (d.unit_level) {
        out.fit.cov_lz = cr_sandwich(out.fit, d.row_cluster, static_cast<int>(d.cluster_count));
        out.se_flavor = SeFlavor::lz;
        out.variance = (*out.fit.cov_lz)(d.treatment_column, d.treatment_column);
    } else {
        out.fit.cov_hw = hw_sandwich(out.fit);
        out.se_flavor = SeFlavor::hw;
        out.variance = (*out.fit.cov_hw)(d.treatment_column, d.treatment_column);
    }
    out.estimate = out.fit.treatment_coefficient();
    // Round-off can leave a tiny negative diagonal for exact fits.
    if (out.variance < 0.0) out.variance = 0.0;
    return out;
}

EstimatorReport estimate(const ClusteredSample& sample, const EstimatorSpec& spec, double level) {
    const double crit = normal_critical_value(level);
    FittedEstimator f = fit_estimator(sample, spec);

    EstimatorReport rep;
    rep.label = spec.label;
    rep.spec = spec;
    rep.level = level;
    rep.estimate = f.estimate;
    rep.se = std::sqrt(f.variance);
    rep.se_flavor = f.se_flavor;
    rep.ci_low = rep.estimate - crit * rep.se;
    rep.ci_high = rep.estimate + crit * rep.se;
    rep.warnings = std::move(f.design.warnings);
    if (spec.not_recommended) rep.warnings.push_back("not recommended: can be less efficient than the unadjusted fit");

    const auto& layout = sample.layout();
    rep.diagnostics.max_share = layout.max_share();
    rep.diagnostics.clusters = layout.cluster_count();
    rep.diagnostics.treated_units = sample.treated_units();
    rep.diagnostics.control_units = sample.control_units();
    rep.diagnostics.treated_fraction = sample.treated_fraction();
    return rep;
}

namespace {

EstimatorSpec adhoc(std::string label, Family family, Adjustment adjustment, std::vector<Term> covariates,
                    WeightSource weights) {
    EstimatorSpec s;
    s.label = std::move(label);
    s.family = family;
    s.adjustment = adjustment;
    if (adjustment != Adjustment::none) s.covariates = std::move(covariates);
    s.weights = weights;
    return s;
}

}  // namespace

EstimatorReport individual_regression(const ClusteredSample& sample, Adjustment adjustment, std::vector<Term> covariates,
                                      double level) {
    return estimate(sample, adhoc("individual", Family::individual, adjustment, std::move(covariates), WeightSource::none),
                    level);
}

EstimatorReport cluster_total_regression(const ClusteredSample& sample, Adjustment adjustment,
                                         std::vector<Term> covariates, double level) {
    return estimate(
        sample, adhoc("cluster_total", Family::cluster_total, adjustment, std::move(covariates), WeightSource::none),
        level);
}

EstimatorReport wls_average_regression(const ClusteredSample& sample, WeightSource pi, Adjustment adjustment,
                                       std::vector<Term> covariates, double level) {
    return estimate(sample, adhoc("wls_average", Family::wls_average, adjustment, std::move(covariates), pi), level);
}

EstimatorReport weighted_average_ols_regression(const ClusteredSample& sample, WeightSource pi, Adjustment adjustment,
                                                std::vector<Term> covariates, double level) {
    return estimate(
        sample, adhoc("weighted_average_ols", Family::weighted_average_ols, adjustment, std::move(covariates), pi),
        level);
}

}  // namespace clustrand
