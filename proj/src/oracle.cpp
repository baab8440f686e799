#include "clustrand/oracle.hpp"

#include "clustrand/error.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace clustrand {

using Eigen::MatrixXd;
using Eigen::VectorXd;

unsigned resolve_threads(unsigned requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

EstimandSet true_estimands(const ScienceTable& science, const std::optional<VectorXd>& pi) {
    const auto& layout = science.layout();
    EstimandSet out;
    out.tau_i = layout.mean_by_cluster(VectorXd(science.y1() - science.y0()));
    out.tau = layout.omega().dot(out.tau_i);
    out.tau_bar = out.tau_i.mean();
    if (pi) {
        if (pi->size() != layout.cluster_count() || (pi->array() <= 0.0).any()) {
            throw ValidationError("estimand weights must be positive, one per cluster");
        }
        out.tau_pi = pi->dot(out.tau_i) / pi->sum();
    } else {
        out.tau_pi = out.tau_bar;
    }
    return out;
}

double target_estimand(const ScienceTable& science, const EstimatorSpec& spec) {
    if (!targets_weighted_estimand(spec)) return true_estimands(science).tau;
    return true_estimands(science, resolve_weights(science.layout(), spec.weights)).tau_pi;
}

NeymanVariance neyman_variance(const VectorXd& e1, const VectorXd& e0, double e) {
    if (e1.size() != e0.size() || e1.size() == 0) throw ValidationError("residual vectors must share a positive length");
    if (!(e > 0.0 && e < 1.0)) throw ValidationError("treated fraction e must lie in (0, 1)");
    const double scale = std::max({1.0, e1.cwiseAbs().maxCoeff(), e0.cwiseAbs().maxCoeff()});
    if (std::abs(e1.mean()) > 1e-8 * scale || std::abs(e0.mean()) > 1e-8 * scale) {
        throw ValidationError("residual vectors must be centered over clusters");
    }
    const double m = static_cast<double>(e1.size());
    NeymanVariance out;
    out.vc = (e1.squaredNorm() / e + e0.squaredNorm() / (1.0 - e)) / m;
    out.v = out.vc - (e1 - e0).squaredNorm() / m;
    return out;
}

namespace {

// Least-squares slope of y on centered columns c (intercept included, then discarded).
VectorXd slopes(const MatrixXd& c, const VectorXd& y, const VectorXd& w) {
    MatrixXd x(c.rows(), c.cols() + 1);
    x.col(0).setOnes();
    x.rightCols(c.cols()) = c;
    const FitResult fit = wls_fit(x, y, w, {}, 0);
    return fit.beta.tail(c.cols());
}

}  // namespace

ClusterResiduals theoretical_residuals(const ScienceTable& science, const EstimatorSpec& spec, double e) {
    validate_spec(spec);
    if (!(e > 0.0 && e < 1.0)) throw ValidationError("treated fraction e must lie in (0, 1)");
    const auto& layout = science.layout();
    const Index m = layout.cluster_count();
    const double md = static_cast<double>(m);
    const double nd = static_cast<double>(layout.unit_count());
    const VectorXd wt = layout.omega_tilde();

    MatrixXd cov;
    if (spec.adjustment != Adjustment::none) cov = covariate_block(layout, spec).values;
    const bool adjusted = cov.cols() > 0;
    const bool pooled = spec.adjustment == Adjustment::ancova;

    ClusterResiduals out;
    VectorXd* r[2] = {&out.r0, &out.r1};
    VectorXd* q[2] = {&out.q0, &out.q1};

    switch (spec.family) {
        case Family::individual: {
            const VectorXd ones = VectorXd::Ones(layout.unit_count());
            const MatrixXd xt = adjusted ? MatrixXd(layout.sum_by_cluster(cov) * (md / nd)) : MatrixXd(m, 0);
            for (int z = 0; z < 2; ++z) {
                const VectorXd& y = science.outcomes(z);
                const VectorXd eps = y.array() - y.mean();
                *r[z] = layout.sum_by_cluster(eps) * (md / nd);
                if (adjusted) *q[z] = slopes(cov, eps, ones);
            }
            if (adjusted) {
                VectorXd qz[2] = {out.q0, out.q1};
                if (pooled) qz[0] = qz[1] = e * out.q1 + (1.0 - e) * out.q0;
                for (int z = 0; z < 2; ++z) *r[z] -= xt * qz[z];
            }
            break;
        }
        case Family::cluster_total:
        case Family::weighted_average_ols: {
            const VectorXd ones = VectorXd::Ones(m);
            VectorXd mpi;
            if (spec.family == Family::weighted_average_ols) mpi = resolve_weights(layout, spec.weights) * md;
            for (int z = 0; z < 2; ++z) {
                const VectorXd ybar = layout.mean_by_cluster(science.outcomes(z));
                const VectorXd resp = spec.family == Family::cluster_total ? VectorXd(wt.cwiseProduct(ybar))
                                                                            : VectorXd(mpi.cwiseProduct(ybar));
                *r[z] = resp.array() - resp.mean();
                if (adjusted) *q[z] = slopes(cov, resp, ones);
            }
            if (adjusted) {
                VectorXd qz[2] = {out.q0, out.q1};
                if (pooled) qz[0] = qz[1] = e * out.q1 + (1.0 - e) * out.q0;
                for (int z = 0; z < 2; ++z) *r[z] -= cov * qz[z];
            }
            break;
        }
        case Family::wls_average: {
            const VectorXd pi = resolve_weights(layout, spec.weights);
            for (int z = 0; z < 2; ++z) {
                const VectorXd ybar = layout.mean_by_cluster(science.outcomes(z));
                VectorXd dev = ybar.array() - pi.dot(ybar);
                if (adjusted) {
                    *q[z] = slopes(cov, ybar, pi);
                    dev -= cov * *q[z];
                }
                *r[z] = (pi * md).cwiseProduct(dev);
            }
            break;
        }
    }
    return out;
}

TheoreticalSe theoretical_se(const ScienceTable& science, const EstimatorSpec& spec, double e) {
    const ClusterResiduals res = theoretical_residuals(science, spec, e);
    const NeymanVariance nv = neyman_variance(res.r1, res.r0, e);
    const double m = static_cast<double>(science.layout().cluster_count());
    TheoreticalSe out;
    out.v = nv.v;
    out.vc = nv.vc;
    out.se = std::sqrt(std::max(0.0, nv.v) / m);
    out.se_conservative = std::sqrt(nv.vc / m);
    return out;
}

RegularityReport regularity_diagnostics(const ClusterLayout& layout) {
    RegularityReport out;
    const VectorXd wt = layout.omega_tilde();
    out.max_share = layout.max_share();
    out.max_omega_tilde = wt.maxCoeff();
    std::vector<double> sorted(wt.data(), wt.data() + wt.size());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    out.median_omega_tilde = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    out.second_moment = wt.array().square().mean();
    out.fourth_moment = wt.array().square().square().mean();
    out.dominant_cluster = out.max_share > 0.1;
    out.heavy_tailed_sizes = out.max_omega_tilde > 5.0 * out.median_omega_tilde;
    if (out.dominant_cluster) out.warnings.push_back("dominant cluster: largest cluster holds more than 10% of units");
    if (out.heavy_tailed_sizes) out.warnings.push_back("heavy-tailed sizes: largest cluster exceeds 5x the median size");
    return out;
}

}  // namespace clustrand
