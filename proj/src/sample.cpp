#include "clustrand/sample.hpp"

#include "clustrand/error.hpp"

#include <cmath>
#include <sstream>
#include <unordered_set>

namespace clustrand {

namespace {

void require_finite(const Eigen::MatrixXd& m, const char* what) {
    if (!m.allFinite()) {
        throw ValidationError(std::string(what) + " contains missing or non-finite values");
    }
}

std::vector<std::string> default_names(const char* prefix, Index count) {
    std::vector<std::string> names;
    for (Index k = 0; k < count; ++k) names.push_back(prefix + std::to_string(k + 1));
    return names;
}

}  // namespace

ClusterLayout::ClusterLayout(std::vector<std::string> ids, std::vector<Index> sizes,
                             Eigen::MatrixXd x, Eigen::MatrixXd c,
                             std::optional<Eigen::VectorXd> weights,
                             std::vector<std::string> x_names, std::vector<std::string> c_names)
    : ids_(std::move(ids)),
      sizes_(std::move(sizes)),
      x_(std::move(x)),
      c_(std::move(c)),
      weights_(std::move(weights)),
      x_names_(std::move(x_names)),
      c_names_(std::move(c_names)) {
    const auto m = static_cast<Index>(sizes_.size());
    if (m == 0) throw ValidationError("a layout needs at least one cluster");
    if (ids_.empty()) {
        for (Index i = 0; i < m; ++i) ids_.push_back(std::to_string(i + 1));
    }
    if (static_cast<Index>(ids_.size()) != m) throw ValidationError("cluster id count does not match cluster count");
    std::unordered_set<std::string> seen;
    for (const auto& id : ids_) {
        if (!seen.insert(id).second) throw ValidationError("duplicate cluster id '" + id + "'");
    }

    offsets_.resize(sizes_.size() + 1);
    offsets_[0] = 0;
    for (std::size_t i = 0; i < sizes_.size(); ++i) {
        if (sizes_[i] < 1) {
            throw ValidationError("cluster '" + ids_[i] + "' has no units");
        }
        offsets_[i + 1] = offsets_[i] + sizes_[i];
    }
    unit_count_ = offsets_.back();

    if (x_.size() == 0) x_.resize(unit_count_, x_.cols());
    if (c_.size() == 0) c_.resize(m, c_.cols());
    if (x_.rows() != unit_count_) throw ValidationError("unit covariate rows do not match unit count");
    if (c_.rows() != m) throw ValidationError("cluster covariate rows do not match cluster count");
    require_finite(x_, "unit covariates");
    require_finite(c_, "cluster covariates");

    if (x_names_.empty()) x_names_ = default_names("x_", x_.cols());
    if (c_names_.empty()) c_names_ = default_names("c_", c_.cols());
    if (static_cast<Index>(x_names_.size()) != x_.cols() || static_cast<Index>(c_names_.size()) != c_.cols()) {
        throw ValidationError("covariate names do not match covariate columns");
    }

    if (weights_) {
        auto& w = *weights_;
        if (w.size() != m) throw ValidationError("weight vector length does not match cluster count");
        if (!w.allFinite() || (w.array() <= 0.0).any()) {
            throw ValidationError("cluster weights must be finite and strictly positive");
        }
        w /= w.sum();
    }
}

const Eigen::VectorXd& ClusterLayout::weights() const {
    if (!weights_) throw ValidationError("cluster weights pi are required but absent");
    return *weights_;
}

Eigen::VectorXd ClusterLayout::omega() const {
    Eigen::VectorXd w(cluster_count());
    const auto n = static_cast<double>(unit_count_);
    for (Index i = 0; i < cluster_count(); ++i) w(i) = static_cast<double>(size(i)) / n;
    return w;
}

Eigen::VectorXd ClusterLayout::omega_tilde() const {
    return omega() * static_cast<double>(cluster_count());
}

double ClusterLayout::max_share() const { return omega().maxCoeff(); }

std::vector<int> ClusterLayout::row_cluster() const {
    std::vector<int> rows(static_cast<std::size_t>(unit_count_));
    for (Index i = 0; i < cluster_count(); ++i) {
        for (Index j = offset(i); j < offset(i) + size(i); ++j) rows[static_cast<std::size_t>(j)] = static_cast<int>(i);
    }
    return rows;
}

Eigen::VectorXd ClusterLayout::sum_by_cluster(const Eigen::VectorXd& unit_values) const {
    Eigen::VectorXd out(cluster_count());
    for (Index i = 0; i < cluster_count(); ++i) out(i) = unit_values.segment(offset(i), size(i)).sum();
    return out;
}

Eigen::MatrixXd ClusterLayout::sum_by_cluster(const Eigen::MatrixXd& unit_values) const {
    Eigen::MatrixXd out(cluster_count(), unit_values.cols());
    for (Index i = 0; i < cluster_count(); ++i) {
        out.row(i) = unit_values.middleRows(offset(i), size(i)).colwise().sum();
    }
    return out;
}

Eigen::VectorXd ClusterLayout::mean_by_cluster(const Eigen::VectorXd& unit_values) const {
    Eigen::VectorXd out = sum_by_cluster(unit_values);
    for (Index i = 0; i < cluster_count(); ++i) out(i) /= static_cast<double>(size(i));
    return out;
}

Eigen::MatrixXd ClusterLayout::mean_by_cluster(const Eigen::MatrixXd& unit_values) const {
    Eigen::MatrixXd out = sum_by_cluster(unit_values);
    for (Index i = 0; i < cluster_count(); ++i) out.row(i) /= static_cast<double>(size(i));
    return out;
}

Eigen::MatrixXd ClusterLayout::replicate(const Eigen::MatrixXd& per_cluster) const {
    Eigen::MatrixXd out(unit_count_, per_cluster.cols());
    for (Index i = 0; i < cluster_count(); ++i) {
        out.middleRows(offset(i), size(i)).rowwise() = per_cluster.row(i);
    }
    return out;
}

ClusterLayout ClusterLayout::with_unit_covariates(Eigen::MatrixXd x) const {
    auto names = x.cols() == px() ? x_names_ : std::vector<std::string>{};
    return ClusterLayout(ids_, sizes_, std::move(x), c_, weights_, std::move(names), c_names_);
}

ClusterLayout ClusterLayout::with_cluster_covariates(Eigen::MatrixXd c) const {
    auto names = c.cols() == pc() ? c_names_ : std::vector<std::string>{};
    return ClusterLayout(ids_, sizes_, x_, std::move(c), weights_, x_names_, std::move(names));
}

ClusterLayout ClusterLayout::with_weights(std::optional<Eigen::VectorXd> weights) const {
    return ClusterLayout(ids_, sizes_, x_, c_, std::move(weights), x_names_, c_names_);
}

ClusteredSample::ClusteredSample(std::shared_ptr<const ClusterLayout> layout, Assignment z, Eigen::VectorXd y)
    : layout_(std::move(layout)), z_(std::move(z)), y_(std::move(y)) {
    if (!layout_) throw ValidationError("sample without layout");
    if (static_cast<Index>(z_.size()) != layout_->cluster_count()) {
        throw ValidationError("assignment length does not match cluster count");
    }
    if (y_.size() != layout_->unit_count()) throw ValidationError("outcome length does not match unit count");
    require_finite(y_, "outcomes");
    for (Index i = 0; i < layout_->cluster_count(); ++i) {
        const auto zi = z_[static_cast<std::size_t>(i)];
        if (zi > 1) throw ValidationError("treatment indicator must be 0 or 1");
        if (zi == 1) {
            ++treated_clusters_;
            treated_units_ += layout_->size(i);
        }
    }
}

double ClusteredSample::treated_fraction() const noexcept {
    return static_cast<double>(treated_clusters_) / static_cast<double>(cluster_count());
}

void ClusteredSample::require_both_arms() const {
    if (treated_clusters_ == 0 || treated_clusters_ == cluster_count()) {
        std::ostringstream msg;
        msg << "estimation needs at least one treated and one control cluster (treated "
            << treated_clusters_ << " of " << cluster_count() << ")";
        throw InsufficientDataError(msg.str());
    }
}

ClusteredSample ClusteredSample::with_layout(std::shared_ptr<const ClusterLayout> layout) const {
    if (layout->sizes() != layout_->sizes()) throw ValidationError("layout has a different cluster structure");
    return ClusteredSample(std::move(layout), z_, y_);
}

ClusteredSample ClusteredSample::with_assignment(Assignment z) const {
    return ClusteredSample(layout_, std::move(z), y_);
}

ScienceTable::ScienceTable(std::shared_ptr<const ClusterLayout> layout, Eigen::VectorXd y1, Eigen::VectorXd y0)
    : layout_(std::move(layout)), y1_(std::move(y1)), y0_(std::move(y0)) {
    if (!layout_) throw ValidationError("science table without layout");
    if (y1_.size() != layout_->unit_count() || y0_.size() != layout_->unit_count()) {
        throw ValidationError("potential outcome length does not match unit count");
    }
    require_finite(y1_, "treated potential outcomes");
    require_finite(y0_, "control potential outcomes");
}

ClusteredSample ScienceTable::reveal(const Assignment& z) const {
    if (static_cast<Index>(z.size()) != layout_->cluster_count()) {
        throw ValidationError("assignment length does not match cluster count");
    }
    Eigen::VectorXd y(layout_->unit_count());
    for (Index i = 0; i < layout_->cluster_count(); ++i) {
        const auto& src = z[static_cast<std::size_t>(i)] ? y1_ : y0_;
        y.segment(layout_->offset(i), layout_->size(i)) = src.segment(layout_->offset(i), layout_->size(i));
    }
    return ClusteredSample(layout_, z, std::move(y));
}

std::vector<ClusterAggregate> aggregate(const ClusteredSample& sample) {
    const auto& layout = sample.layout();
    const double scale = static_cast<double>(layout.cluster_count()) / static_cast<double>(layout.unit_count());
    const Eigen::VectorXd totals = layout.sum_by_cluster(sample.y());
    const Eigen::MatrixXd x_totals = layout.sum_by_cluster(layout.x());

    std::vector<ClusterAggregate> out;
    out.reserve(static_cast<std::size_t>(layout.cluster_count()));
    for (Index i = 0; i < layout.cluster_count(); ++i) {
        const auto n = static_cast<double>(layout.size(i));
        ClusterAggregate a;
        a.size = layout.size(i);
        a.mean = totals(i) / n;
        a.scaled_total = totals(i) * scale;
        a.x_mean = x_totals.row(i).transpose() / n;
        a.scaled_x_total = x_totals.row(i).transpose() * scale;
        if (layout.has_weights()) a.weight = layout.weights()(i);
        out.push_back(std::move(a));
    }
    return out;
}

Eigen::MatrixXd center_columns(const Eigen::MatrixXd& m, const Eigen::VectorXd* weights) {
    if (m.cols() == 0 || m.rows() == 0) return m;
    Eigen::RowVectorXd mean;
    if (weights) {
        mean = (weights->transpose() * m) / weights->sum();
    } else {
        mean = m.colwise().mean();
    }
    return m.rowwise() - mean;
}

ClusteredSample center_unit_covariates(const ClusteredSample& sample) {
    const auto& layout = sample.layout();
    if (layout.px() < 1) throw ValidationError("unit covariate centering needs at least one unit covariate");
    auto centered = std::make_shared<const ClusterLayout>(layout.with_unit_covariates(center_columns(layout.x())));
    return sample.with_layout(std::move(centered));
}

ClusteredSample center_cluster_covariates(const ClusteredSample& sample, CenteringMode mode) {
    const auto& layout = sample.layout();
    if (layout.pc() < 1) throw ValidationError("cluster covariate centering needs at least one cluster covariate");
    Eigen::MatrixXd c;
    if (mode == CenteringMode::pi_weighted) {
        const Eigen::VectorXd& w = layout.weights();
        c = center_columns(layout.c(), &w);
    } else {
        c = center_columns(layout.c());
    }
    auto centered = std::make_shared<const ClusterLayout>(layout.with_cluster_covariates(std::move(c)));
    return sample.with_layout(std::move(centered));
}

}  // namespace clustrand
