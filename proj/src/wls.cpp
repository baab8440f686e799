#include "clustrand/wls.hpp"

#include "clustrand/design.hpp"
#include "clustrand/error.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <cmath>
#include <sstream>

namespace clustrand {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

FitResult wls_fit(const MatrixXd& x, const VectorXd& y, const VectorXd& w, std::vector<std::string> column_names,
                  Index treatment_index) {
    const Index n = x.rows();
    const Index p = x.cols();
    if (y.size() != n || w.size() != n) throw ValidationError("design, response and weights disagree in length");
    if (p == 0) throw ValidationError("design has no columns");
    if (n < p) {
        std::ostringstream msg;
        msg << "design has " << n << " rows but " << p << " columns";
        throw InsufficientDataError(msg.str());
    }
    if (!w.allFinite() || (w.array() <= 0.0).any()) throw ValidationError("regression weights must be strictly positive");
    if (!x.allFinite() || !y.allFinite()) throw NumericalError("design or response contains non-finite values");
    if (column_names.empty()) {
        for (Index k = 0; k < p; ++k) column_names.push_back("col" + std::to_string(k));
    }

    const VectorXd sw = w.cwiseSqrt();
    const MatrixXd xs = sw.asDiagonal() * x;
    const VectorXd ys = sw.cwiseProduct(y);

    Eigen::HouseholderQR<MatrixXd> qr(xs);
    const MatrixXd r = qr.matrixQR().topRows(p).triangularView<Eigen::Upper>();

    Eigen::JacobiSVD<MatrixXd> svd(r, Eigen::ComputeFullV);
    const VectorXd& sv = svd.singularValues();
    const double tol = sv(0) * 1e-10 * static_cast<double>(p);
    if (sv(0) == 0.0 || sv(p - 1) < tol) {
        const VectorXd null = svd.matrixV().col(p - 1);
        std::vector<std::string> involved;
        for (Index k = 0; k < p; ++k) {
            if (std::abs(null(k)) > 1e-6) involved.push_back(column_names[static_cast<std::size_t>(k)]);
        }
        std::ostringstream msg;
        msg << "rank-deficient design; dependent columns:";
        for (const auto& c : involved) msg << ' ' << c;
        throw RankDeficiencyError(msg.str(), involved);
    }

    FitResult fit;
    fit.beta = qr.solve(ys);
    fit.residuals = y - x * fit.beta;
    const MatrixXd r_inv = r.triangularView<Eigen::Upper>().solve(MatrixXd::Identity(p, p));
    fit.xtwx_inv = r_inv * r_inv.transpose();
    fit.design = x;
    fit.weights = w;
    fit.treatment_index = treatment_index;
    fit.column_names = std::move(column_names);
    return fit;
}

FitResult wls_fit(const Design& design) {
    return wls_fit(design.matrix, design.response, design.weights, design.column_names, design.treatment_column);
}

MatrixXd hw_sandwich(const FitResult& fit, SandwichCorrection correction) {
    const VectorXd score = fit.weights.cwiseProduct(fit.residuals);
    const MatrixXd xs = score.asDiagonal() * fit.design;
    MatrixXd cov = fit.xtwx_inv * (xs.transpose() * xs) * fit.xtwx_inv;
    if (correction == SandwichCorrection::hc1) {
        const auto n = static_cast<double>(fit.design.rows());
        const auto p = static_cast<double>(fit.design.cols());
        if (n > p) cov *= n / (n - p);
    }
    return 0.5 * (cov + cov.transpose());
}

MatrixXd cr_sandwich(const FitResult& fit, std::span<const int> row_cluster, int cluster_count,
                     SandwichCorrection correction) {
    const Index n = fit.design.rows();
    if (static_cast<Index>(row_cluster.size()) != n) throw ValidationError("cluster map length does not match rows");
    MatrixXd scores = MatrixXd::Zero(cluster_count, fit.design.cols());
    for (Index r = 0; r < n; ++r) {
        const int g = row_cluster[static_cast<std::size_t>(r)];
        if (g < 0 || g >= cluster_count) throw ValidationError("row mapped to unknown cluster " + std::to_string(g));
        scores.row(g) += (fit.weights(r) * fit.residuals(r)) * fit.design.row(r);
    }
    MatrixXd cov = fit.xtwx_inv * (scores.transpose() * scores) * fit.xtwx_inv;
    if (correction == SandwichCorrection::hc1) {
        const auto g = static_cast<double>(cluster_count);
        const auto nn = static_cast<double>(n);
        const auto p = static_cast<double>(fit.design.cols());
        if (g > 1 && nn > p) cov *= g / (g - 1) * (nn - 1) / (nn - p);
    }
    return 0.5 * (cov + cov.transpose());
}

AltSandwich cr_sandwich_alt(const Design& design) {
    const Index rows = design.matrix.rows();
    const Index p = design.covariates.cols();
    const VectorXd z = design.z;
    const VectorXd zc = VectorXd::Ones(rows) - z;

    const bool interact = design.adjustment == Adjustment::lin;
    const Index cols = 2 + (interact ? 2 * p : p);
    MatrixXd x(rows, cols);
    x.col(0) = z;
    x.col(1) = zc;
    if (p > 0) {
        if (interact) {
            x.middleCols(2, p) = z.asDiagonal() * design.covariates;
            x.middleCols(2 + p, p) = zc.asDiagonal() * design.covariates;
        } else {
            x.middleCols(2, p) = design.covariates;
        }
    }
    const FitResult fit = wls_fit(x, design.response, design.weights, {}, 0);
    AltSandwich out;
    out.covariance = design.unit_level
                         ? cr_sandwich(fit, design.row_cluster, static_cast<int>(design.cluster_count))
                         : hw_sandwich(fit);
    out.treatment_variance = out.covariance(0, 0) + out.covariance(1, 1) - 2.0 * out.covariance(0, 1);
    return out;
}

}  // namespace clustrand
