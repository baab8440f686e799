#include "clustrand/design.hpp"

#include "clustrand/error.hpp"

#include <algorithm>
#include <cmath>

namespace clustrand {

namespace {

bool is_cluster_family(Family f) { return f != Family::individual; }

bool needs_weights(Term t) { return t == Term::weight || t == Term::weight_mean_x || t == Term::weight_c; }

bool needs_x(Term t) {
    return t == Term::unit_x || t == Term::cluster_mean_x || t == Term::scaled_total_x || t == Term::weight_mean_x;
}

bool needs_c(Term t) { return t == Term::cluster_c || t == Term::weight_c; }

std::vector<std::string> prefixed(const std::string& prefix, const std::vector<std::string>& names) {
    std::vector<std::string> out;
    out.reserve(names.size());
    for (const auto& n : names) out.push_back(prefix + n);
    return out;
}

void append(Eigen::MatrixXd& m, std::vector<std::string>& names, const Eigen::MatrixXd& block,
            const std::vector<std::string>& block_names) {
    const Index old_cols = m.cols();
    m.conservativeResize(block.rows(), old_cols + block.cols());
    m.rightCols(block.cols()) = block;
    names.insert(names.end(), block_names.begin(), block_names.end());
}

}  // namespace

bool targets_weighted_estimand(const EstimatorSpec& spec) {
    return spec.family == Family::wls_average || spec.family == Family::weighted_average_ols;
}

Eigen::VectorXd resolve_weights(const ClusterLayout& layout, WeightSource source) {
    switch (source) {
        case WeightSource::omega:
            return layout.omega();
        case WeightSource::uniform:
            return Eigen::VectorXd::Constant(layout.cluster_count(), 1.0 / static_cast<double>(layout.cluster_count()));
        case WeightSource::column:
            return layout.weights();
        case WeightSource::none:
            break;
    }
    throw ValidationError("estimator requires cluster weights but no weight source was given");
}

void validate_spec(const EstimatorSpec& spec) {
    if (targets_weighted_estimand(spec) && spec.weights == WeightSource::none) {
        throw ValidationError(spec.label + ": weighted-average estimators require a weight source");
    }
    if (spec.adjustment == Adjustment::ancova &&
        (spec.family == Family::wls_average || spec.family == Family::weighted_average_ols)) {
        throw ValidationError(spec.label + ": ancova adjustment is only defined for individual and cluster-total fits");
    }
    if (spec.adjustment != Adjustment::none && spec.covariates.empty()) {
        throw ValidationError(spec.label + ": adjusted estimator needs at least one covariate");
    }
    if (spec.adjustment == Adjustment::none && !spec.covariates.empty()) {
        throw ValidationError(spec.label + ": covariates given for an unadjusted estimator");
    }
    for (Term t : spec.covariates) {
        if (t == Term::unit_x && is_cluster_family(spec.family)) {
            throw ValidationError(spec.label + ": unit-level covariates cannot enter a cluster-level regression");
        }
        if (needs_weights(t) && spec.weights == WeightSource::none) {
            throw ValidationError(spec.label + ": weight-based covariates require a weight source");
        }
    }
}

CovariateBlock covariate_block(const ClusterLayout& layout, const EstimatorSpec& spec) {
    validate_spec(spec);
    const bool unit_rows = spec.family == Family::individual;
    const Index rows = unit_rows ? layout.unit_count() : layout.cluster_count();
    const double m = static_cast<double>(layout.cluster_count());
    const double n = static_cast<double>(layout.unit_count());

    const Eigen::MatrixXd xc = center_columns(layout.x());
    const Eigen::MatrixXd xbar = layout.mean_by_cluster(xc);
    Eigen::VectorXd mpi;
    // x- and c-derived terms expand to every available column and to nothing when the
    // sample has none; an adjustment left without any column is an error.
    Index available = 0;
    for (Term t : spec.covariates) {
        if (needs_x(t)) {
            available += layout.px();
        } else if (needs_c(t)) {
            available += layout.pc();
        } else {
            available += 1;
        }
        if (needs_weights(t) && mpi.size() == 0) mpi = resolve_weights(layout, spec.weights) * m;
    }
    if (available == 0) {
        throw ValidationError(spec.label + ": the sample provides none of the requested covariates");
    }

    // Cluster-row blocks first, replicated to units for the individual family.
    Eigen::MatrixXd raw(rows, 0);
    std::vector<std::string> names;
    auto add_cluster = [&](const Eigen::MatrixXd& per_cluster, const std::vector<std::string>& nm) {
        append(raw, names, unit_rows ? layout.replicate(per_cluster) : per_cluster, nm);
    };
    for (Term t : spec.covariates) {
        switch (t) {
            case Term::unit_x:
                append(raw, names, xc, layout.x_names());
                break;
            case Term::cluster_mean_x:
                add_cluster(xbar, prefixed("xbar:", layout.x_names()));
                break;
            case Term::scaled_total_x:
                add_cluster(layout.sum_by_cluster(xc) * (m / n), prefixed("xtilde:", layout.x_names()));
                break;
            case Term::cluster_c:
                add_cluster(layout.c(), layout.c_names());
                break;
            case Term::size:
                add_cluster(layout.omega_tilde(), {"n"});
                break;
            case Term::weight:
                add_cluster(mpi, {"pi"});
                break;
            case Term::weight_mean_x:
                add_cluster(mpi.asDiagonal() * xbar, prefixed("pi*xbar:", layout.x_names()));
                break;
            case Term::weight_c:
                add_cluster(mpi.asDiagonal() * layout.c(), prefixed("pi*", layout.c_names()));
                break;
        }
    }

    Eigen::MatrixXd centered;
    if (spec.family == Family::wls_average) {
        const Eigen::VectorXd pi = resolve_weights(layout, spec.weights);
        centered = center_columns(raw, &pi);
    } else {
        centered = center_columns(raw);
    }

    CovariateBlock block;
    std::vector<Index> keep;
    for (Index k = 0; k < centered.cols(); ++k) {
        const double scale = std::max(1.0, raw.col(k).cwiseAbs().maxCoeff());
        if (centered.col(k).cwiseAbs().maxCoeff() <= 1e-12 * scale) {
            block.warnings.push_back("covariate '" + names[static_cast<std::size_t>(k)] +
                                     "' is constant after centering and was dropped");
        } else {
            keep.push_back(k);
            block.names.push_back(names[static_cast<std::size_t>(k)]);
        }
    }
    block.values.resize(rows, static_cast<Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) block.values.col(static_cast<Index>(k)) = centered.col(keep[k]);
    return block;
}

Design build_design(const ClusteredSample& sample, const EstimatorSpec& spec) {
    validate_spec(spec);
    const auto& layout = sample.layout();
    const Index m = layout.cluster_count();

    Design d;
    d.adjustment = spec.adjustment;
    d.cluster_count = m;
    d.unit_level = spec.family == Family::individual;

    Eigen::VectorXd z_cluster(m);
    for (Index i = 0; i < m; ++i) z_cluster(i) = sample.treated(i) ? 1.0 : 0.0;

    if (d.unit_level) {
        d.response = sample.y();
        d.z = layout.replicate(z_cluster);
        d.weights = Eigen::VectorXd::Ones(layout.unit_count());
        d.row_cluster = layout.row_cluster();
    } else {
        const Eigen::VectorXd ybar = layout.mean_by_cluster(sample.y());
        d.z = z_cluster;
        d.weights = Eigen::VectorXd::Ones(m);
        d.row_cluster.resize(static_cast<std::size_t>(m));
        for (Index i = 0; i < m; ++i) d.row_cluster[static_cast<std::size_t>(i)] = static_cast<int>(i);
        switch (spec.family) {
            case Family::cluster_total:
                d.response = layout.sum_by_cluster(sample.y()) * (static_cast<double>(m) / static_cast<double>(layout.unit_count()));
                break;
            case Family::wls_average:
                d.response = ybar;
                d.weights = resolve_weights(layout, spec.weights);
                break;
            case Family::weighted_average_ols:
                d.response = (resolve_weights(layout, spec.weights) * static_cast<double>(m)).cwiseProduct(ybar);
                break;
            case Family::individual:
                break;
        }
    }

    const Index rows = d.response.size();
    std::vector<std::string> cov_names;
    if (spec.adjustment != Adjustment::none) {
        auto block = covariate_block(layout, spec);
        d.covariates = std::move(block.values);
        cov_names = std::move(block.names);
        d.warnings = std::move(block.warnings);
    } else {
        d.covariates.resize(rows, 0);
    }
    const Index p = d.covariates.cols();
    const bool interact = spec.adjustment == Adjustment::lin;

    d.matrix.resize(rows, 2 + p * (interact ? 2 : 1));
    d.matrix.col(0).setOnes();
    d.matrix.col(1) = d.z;
    if (p > 0) {
        d.matrix.middleCols(2, p) = d.covariates;
        if (interact) d.matrix.middleCols(2 + p, p) = d.z.asDiagonal() * d.covariates;
    }
    d.column_names = {"(intercept)", "z"};
    d.column_names.insert(d.column_names.end(), cov_names.begin(), cov_names.end());
    if (interact) {
        for (const auto& nm : cov_names) d.column_names.push_back("z:" + nm);
    }
    d.treatment_column = 1;
    return d;
}

std::string to_string(Family f) {
    switch (f) {
        case Family::individual: return "individual";
        case Family::cluster_total: return "cluster_total";
        case Family::wls_average: return "wls_average";
        case Family::weighted_average_ols: return "weighted_average_ols";
    }
    return "?";
}

std::string to_string(Adjustment a) {
    switch (a) {
        case Adjustment::none: return "none";
        case Adjustment::lin: return "lin";
        case Adjustment::ancova: return "ancova";
    }
    return "?";
}

std::string to_string(WeightSource w) {
    switch (w) {
        case WeightSource::none: return "none";
        case WeightSource::omega: return "omega";
        case WeightSource::uniform: return "uniform";
        case WeightSource::column: return "column";
    }
    return "?";
}

WeightSource parse_weight_source(const std::string& s) {
    if (s == "omega") return WeightSource::omega;
    if (s == "uniform") return WeightSource::uniform;
    if (s == "column") return WeightSource::column;
    if (s == "none") return WeightSource::none;
    throw ValidationError("unknown weight source '" + s + "' (expected omega, uniform or column)");
}

}  // namespace clustrand
