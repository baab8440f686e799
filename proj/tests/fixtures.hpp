#pragma once

#include "clustrand/rng.hpp"
#include "clustrand/sample.hpp"

#include <memory>
#include <optional>
#include <random>

namespace fixtures {

using clustrand::Assignment;
using clustrand::ClusteredSample;
using clustrand::ClusterLayout;
using clustrand::Index;
using clustrand::Rng;
using clustrand::ScienceTable;

struct LayoutOptions {
    Index m = 8;
    Index min_size = 1;
    Index max_size = 6;
    Index px = 1;
    Index pc = 0;
    bool weights = false;
};

inline std::shared_ptr<const ClusterLayout> random_layout(Rng& rng, const LayoutOptions& o) {
    std::uniform_int_distribution<Index> size(o.min_size, o.max_size);
    std::normal_distribution<double> z01;
    std::vector<Index> sizes(static_cast<std::size_t>(o.m));
    Index n = 0;
    for (auto& s : sizes) n += (s = size(rng));
    Eigen::MatrixXd x(n, o.px), c(o.m, o.pc);
    for (Index r = 0; r < n; ++r)
        for (Index k = 0; k < o.px; ++k) x(r, k) = z01(rng);
    for (Index i = 0; i < o.m; ++i)
        for (Index k = 0; k < o.pc; ++k) c(i, k) = z01(rng);
    std::optional<Eigen::VectorXd> w;
    if (o.weights) {
        std::uniform_real_distribution<double> u(0.2, 2.0);
        w = Eigen::VectorXd(o.m);
        for (Index i = 0; i < o.m; ++i) (*w)(i) = u(rng);
    }
    return std::make_shared<const ClusterLayout>(std::vector<std::string>{}, sizes, x, c, w);
}

// Potential outcomes with cluster-level heterogeneity and dependence on x and size.
inline ScienceTable random_science(Rng& rng, std::shared_ptr<const ClusterLayout> layout) {
    std::normal_distribution<double> z01;
    const Index n = layout->unit_count();
    Eigen::VectorXd y1(n), y0(n);
    for (Index i = 0; i < layout->cluster_count(); ++i) {
        const double shift = z01(rng);
        const double effect = z01(rng);
        for (Index j = layout->offset(i); j < layout->offset(i) + layout->size(i); ++j) {
            const double xj = layout->px() > 0 ? layout->x()(j, 0) : 0.0;
            y0(j) = shift + 0.5 * xj + 0.3 * static_cast<double>(layout->size(i)) + z01(rng);
            y1(j) = y0(j) + 1.0 + effect + xj * xj;
        }
    }
    return ScienceTable(std::move(layout), y1, y0);
}

// Assignment treating `treated` clusters, always leaving both arms non-empty.
inline Assignment random_assignment(Rng& rng, Index m, Index treated) {
    return clustrand::random_assignment(rng, m, treated);
}

inline ClusteredSample random_sample(Rng& rng, const LayoutOptions& o) {
    const ScienceTable science = random_science(rng, random_layout(rng, o));
    return science.reveal(random_assignment(rng, o.m, o.m / 2));
}

}  // namespace fixtures
