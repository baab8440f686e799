#pragma once

#include "clustrand/sample.hpp"

#include <string>
#include <vector>

namespace clustrand {

enum class Family { individual, cluster_total, wls_average, weighted_average_ols };
enum class Adjustment { none, lin, ancova };
enum class WeightSource { none, omega, uniform, column };

// Covariate terms that can enter an adjustment. Terms derived from x are built from
// unit-centered x. `size` is omega-tilde_i, `weight*` terms carry the factor M*pi_i.
enum class Term {
    unit_x,          // x_ij (individual family only)
    cluster_mean_x,  // x-bar_i
    scaled_total_x,  // x-tilde_i
    cluster_c,       // c_i
    size,            // omega-tilde_i, scale-equivalent to n_i
    weight,          // M pi_i
    weight_mean_x,   // M pi_i x-bar_i
    weight_c,        // M pi_i c_i
};

struct EstimatorSpec {
    std::string label;
    Family family = Family::individual;
    Adjustment adjustment = Adjustment::none;
    std::vector<Term> covariates;
    WeightSource weights = WeightSource::none;
    bool recommended = false;
    bool not_recommended = false;
};

/// Whether the estimator targets tau (unit ATE) or the weighted estimand tau_pi.
bool targets_weighted_estimand(const EstimatorSpec& spec);

/// pi_i for the given source, normalized to sum 1. `none` is an error.
Eigen::VectorXd resolve_weights(const ClusterLayout& layout, WeightSource source);

struct CovariateBlock {
    Eigen::MatrixXd values;  // centered, one row per design row
    std::vector<std::string> names;
    std::vector<std::string> warnings;
};

/// Centered adjustment covariates for an estimator (unit rows for the individual family,
/// cluster rows otherwise). Columns that vanish after centering are dropped with a warning.
CovariateBlock covariate_block(const ClusterLayout& layout, const EstimatorSpec& spec);

struct Design {
    Eigen::VectorXd response;
    Eigen::MatrixXd matrix;
    Eigen::VectorXd weights;
    Index treatment_column = 1;
    std::vector<std::string> column_names;
    std::vector<int> row_cluster;  // cluster index of every row
    Index cluster_count = 0;
    bool unit_level = false;
    Adjustment adjustment = Adjustment::none;
    Eigen::VectorXd z;           // treatment indicator per row
    Eigen::MatrixXd covariates;  // centered covariates actually used
    std::vector<std::string> warnings;
};

Design build_design(const ClusteredSample& sample, const EstimatorSpec& spec);

void validate_spec(const EstimatorSpec& spec);

std::string to_string(Family f);
std::string to_string(Adjustment a);
std::string to_string(WeightSource w);
WeightSource parse_weight_source(const std::string& s);

}  // namespace clustrand
