#pragma once

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace clustrand {

struct Design;

struct FitResult {
    Eigen::VectorXd beta;
    Eigen::VectorXd residuals;  // y - X beta, unweighted
    Eigen::MatrixXd xtwx_inv;   // (X' W X)^{-1}
    Eigen::MatrixXd design;
    Eigen::VectorXd weights;
    Eigen::Index treatment_index = 1;
    std::vector<std::string> column_names;
    std::optional<Eigen::MatrixXd> cov_hw;
    std::optional<Eigen::MatrixXd> cov_lz;

    double treatment_coefficient() const { return beta(treatment_index); }
};

// Multiplier hook for small-sample corrections. The estimators use `none` (HC0/CR0).
enum class SandwichCorrection { none, hc1 };

/// Weighted least squares through a Householder QR of sqrt(W) X.
/// Throws RankDeficiencyError naming the columns of a detected linear dependency.
FitResult wls_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& w,
                  std::vector<std::string> column_names = {}, Eigen::Index treatment_index = 1);

FitResult wls_fit(const Design& design);

/// HC0: (X'WX)^{-1} (sum_r w_r^2 e_r^2 x_r x_r') (X'WX)^{-1}
Eigen::MatrixXd hw_sandwich(const FitResult& fit, SandwichCorrection correction = SandwichCorrection::none);

/// CR0 with meat sum_g s_g s_g', s_g = sum_{r in g} w_r e_r x_r. `row_cluster` maps rows to 0..G-1.
Eigen::MatrixXd cr_sandwich(const FitResult& fit, std::span<const int> row_cluster, int cluster_count,
                            SandwichCorrection correction = SandwichCorrection::none);

struct AltSandwich {
    Eigen::MatrixXd covariance;
    double treatment_variance = 0.0;  // [1,1] + [2,2] - 2 [1,2]
};

/// Treatment variance via the arm-specific parameterization (Z, 1-Z, Z x, (1-Z) x).
/// Cluster-robust for unit-level designs, HC0 otherwise. Cross-check only.
AltSandwich cr_sandwich_alt(const Design& design);

}  // namespace clustrand
