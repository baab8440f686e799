#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace clustrand {

using Eigen::Index;

/// Per-cluster treatment indicators in canonical cluster order (1 = treated).
using Assignment = std::vector<std::uint8_t>;

/// Cluster structure and covariates, shared by observed samples and science tables.
///
/// Units are stored contiguously by cluster: rows offset(i) .. offset(i)+size(i)-1 of
/// the unit covariate matrix belong to cluster i. Cluster order is preserved from
/// construction and is the iteration order used everywhere downstream.
class ClusterLayout {
public:
    ClusterLayout(std::vector<std::string> ids, std::vector<Index> sizes, Eigen::MatrixXd x,
                  Eigen::MatrixXd c, std::optional<Eigen::VectorXd> weights = std::nullopt,
                  std::vector<std::string> x_names = {}, std::vector<std::string> c_names = {});

    Index cluster_count() const noexcept { return static_cast<Index>(sizes_.size()); }
    Index unit_count() const noexcept { return unit_count_; }
    Index size(Index i) const { return sizes_[static_cast<std::size_t>(i)]; }
    Index offset(Index i) const { return offsets_[static_cast<std::size_t>(i)]; }
    const std::vector<Index>& sizes() const noexcept { return sizes_; }
    const std::vector<std::string>& ids() const noexcept { return ids_; }

    const Eigen::MatrixXd& x() const noexcept { return x_; }
    const Eigen::MatrixXd& c() const noexcept { return c_; }
    Index px() const noexcept { return x_.cols(); }
    Index pc() const noexcept { return c_.cols(); }
    const std::vector<std::string>& x_names() const noexcept { return x_names_; }
    const std::vector<std::string>& c_names() const noexcept { return c_names_; }

    bool has_weights() const noexcept { return weights_.has_value(); }
    /// Normalized cluster weights pi_i (sum 1). Throws ValidationError when absent.
    const Eigen::VectorXd& weights() const;

    /// omega_i = n_i / N
    Eigen::VectorXd omega() const;
    /// omega-tilde_i = n_i M / N (mean one over clusters)
    Eigen::VectorXd omega_tilde() const;
    /// Omega = max_i omega_i
    double max_share() const;

    std::vector<int> row_cluster() const;
    Eigen::VectorXd sum_by_cluster(const Eigen::VectorXd& unit_values) const;
    Eigen::MatrixXd sum_by_cluster(const Eigen::MatrixXd& unit_values) const;
    Eigen::VectorXd mean_by_cluster(const Eigen::VectorXd& unit_values) const;
    Eigen::MatrixXd mean_by_cluster(const Eigen::MatrixXd& unit_values) const;
    /// Expands an M x p per-cluster matrix to N x p by repeating each row n_i times.
    Eigen::MatrixXd replicate(const Eigen::MatrixXd& per_cluster) const;

    ClusterLayout with_unit_covariates(Eigen::MatrixXd x) const;
    ClusterLayout with_cluster_covariates(Eigen::MatrixXd c) const;
    ClusterLayout with_weights(std::optional<Eigen::VectorXd> weights) const;

private:
    std::vector<std::string> ids_;
    std::vector<Index> sizes_;
    std::vector<Index> offsets_;
    Index unit_count_ = 0;
    Eigen::MatrixXd x_;
    Eigen::MatrixXd c_;
    std::optional<Eigen::VectorXd> weights_;
    std::vector<std::string> x_names_;
    std::vector<std::string> c_names_;
};

/// Observed data of a cluster-randomized experiment. Immutable after construction.
class ClusteredSample {
public:
    ClusteredSample(std::shared_ptr<const ClusterLayout> layout, Assignment z, Eigen::VectorXd y);

    const ClusterLayout& layout() const noexcept { return *layout_; }
    const std::shared_ptr<const ClusterLayout>& layout_ptr() const noexcept { return layout_; }
    const Assignment& assignment() const noexcept { return z_; }
    bool treated(Index i) const { return z_[static_cast<std::size_t>(i)] != 0; }
    const Eigen::VectorXd& y() const noexcept { return y_; }

    Index cluster_count() const noexcept { return layout_->cluster_count(); }
    Index unit_count() const noexcept { return layout_->unit_count(); }
    Index treated_clusters() const noexcept { return treated_clusters_; }
    Index control_clusters() const noexcept { return cluster_count() - treated_clusters_; }
    Index treated_units() const noexcept { return treated_units_; }
    Index control_units() const noexcept { return unit_count() - treated_units_; }
    /// e: realized fraction of treated clusters.
    double treated_fraction() const noexcept;

    /// Throws InsufficientDataError unless both arms contain at least one cluster.
    void require_both_arms() const;

    /// Same assignment and outcomes over a different layout with identical cluster structure.
    ClusteredSample with_layout(std::shared_ptr<const ClusterLayout> layout) const;
    /// Same layout and outcomes under another assignment (randomization tests).
    ClusteredSample with_assignment(Assignment z) const;

private:
    std::shared_ptr<const ClusterLayout> layout_;
    Assignment z_;
    Eigen::VectorXd y_;
    Index treated_clusters_ = 0;
    Index treated_units_ = 0;
};

/// Both potential outcomes for every unit; the ground truth for oracles and simulation.
class ScienceTable {
public:
    ScienceTable(std::shared_ptr<const ClusterLayout> layout, Eigen::VectorXd y1, Eigen::VectorXd y0);

    const ClusterLayout& layout() const noexcept { return *layout_; }
    const std::shared_ptr<const ClusterLayout>& layout_ptr() const noexcept { return layout_; }
    const Eigen::VectorXd& y1() const noexcept { return y1_; }
    const Eigen::VectorXd& y0() const noexcept { return y0_; }
    const Eigen::VectorXd& outcomes(int arm) const noexcept { return arm == 1 ? y1_ : y0_; }

    /// Observed sample Y_ij = Z_i Y_ij(1) + (1 - Z_i) Y_ij(0).
    ClusteredSample reveal(const Assignment& z) const;

private:
    std::shared_ptr<const ClusterLayout> layout_;
    Eigen::VectorXd y1_;
    Eigen::VectorXd y0_;
};

struct ClusterAggregate {
    double scaled_total = 0.0;        // Y-tilde_i = sum_j Y_ij M / N
    double mean = 0.0;                // Y-bar_i
    Eigen::VectorXd scaled_x_total;   // x-tilde_i
    Eigen::VectorXd x_mean;           // x-bar_i
    Index size = 0;
    std::optional<double> weight;
};

std::vector<ClusterAggregate> aggregate(const ClusteredSample& sample);

ClusteredSample center_unit_covariates(const ClusteredSample& sample);

enum class CenteringMode { unweighted, pi_weighted };
ClusteredSample center_cluster_covariates(const ClusteredSample& sample, CenteringMode mode);

/// Column-wise centering; with `weights` the weighted mean (weights summing to one) is removed.
Eigen::MatrixXd center_columns(const Eigen::MatrixXd& m, const Eigen::VectorXd* weights = nullptr);

}  // namespace clustrand
