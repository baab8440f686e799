#include "clustrand/error.hpp"
#include "clustrand/rng.hpp"
#include "clustrand/sim.hpp"

#include <array>
#include <cmath>

namespace clustrand {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Science tables draw from a stream that replications never use.
constexpr std::uint64_t science_stream = 0xffffffffffffffffULL;

const std::vector<std::string> kCommon = {"tau_i", "tau_i_adj", "tau_t", "tau_t_adj_n", "tau_t_adj_nx",
                                          "tau_a", "tau_a_adj"};

std::vector<std::string> with(std::vector<std::string> base, std::initializer_list<const char*> extra) {
    for (const char* e : extra) base.emplace_back(e);
    return base;
}

std::vector<Index> uniform_sizes(Rng& rng, Index count, double centre) {
    std::uniform_real_distribution<double> u(centre * 0.6, centre * 1.4);
    std::vector<Index> sizes(static_cast<std::size_t>(count));
    for (auto& n : sizes) n = std::max<Index>(1, static_cast<Index>(round_half_away(u(rng))));
    return sizes;
}

ScienceTable smooth_science(Index m, std::uint64_t seed, bool x_in_outcomes) {
    Rng rng = substream(seed, science_stream);
    const std::vector<Index> sizes = uniform_sizes(rng, m, 3000.0 / static_cast<double>(m));
    Index n = 0;
    for (Index s : sizes) n += s;

    std::uniform_real_distribution<double> noise_x(-1.0, 1.0);
    MatrixXd x(n, 1);
    Index row = 0;
    for (Index i = 0; i < m; ++i) {
        for (Index j = 0; j < sizes[static_cast<std::size_t>(i)]; ++j) {
            x(row++, 0) = static_cast<double>(i + 1) / static_cast<double>(m) + noise_x(rng);
        }
    }
    const double xbar = x.col(0).mean();

    std::normal_distribution<double> z01(0.0, 1.0);
    VectorXd y1(n), y0(n);
    row = 0;
    for (Index i = 0; i < m; ++i) {
        const double ni = static_cast<double>(sizes[static_cast<std::size_t>(i)]);
        const double wt = ni * static_cast<double>(m) / static_cast<double>(n);
        const double im = static_cast<double>(i + 1) / static_cast<double>(m);
        for (Index j = 0; j < sizes[static_cast<std::size_t>(i)]; ++j, ++row) {
            const double d = x(row, 0) - xbar;
            const double mu1 = 2.0 * wt + (x_in_outcomes ? d * d * d : 0.0);
            const double mu0 = im + (x_in_outcomes ? d * d : 0.0);
            y1(row) = mu1 + z01(rng);
            y0(row) = mu0 + z01(rng);
        }
    }
    auto layout = std::make_shared<const ClusterLayout>(std::vector<std::string>{}, sizes, x, MatrixXd(m, 0));
    return ScienceTable(layout, y1, y0);
}

ScienceTable counterexample_science(Index m, bool large_last) {
    if (m % 4 != 0 || m < 4) throw ValidationError("this scenario needs M to be a positive multiple of 4");
    struct Type {
        Index n;
        double x, y1, y0;
    };
    const std::array<Type, 4> types = {{{20, -5, -1, 0}, {20, -5, 0, 0}, {30, 4, -1, 0}, {10, 8, 5, 0}}};
    std::vector<Index> sizes(static_cast<std::size_t>(m));
    for (Index i = 0; i < m; ++i) sizes[static_cast<std::size_t>(i)] = types[static_cast<std::size_t>(i % 4)].n;
    if (large_last) sizes.back() = 50;
    Index n = 0;
    for (Index s : sizes) n += s;

    MatrixXd x(n, 1);
    VectorXd y1(n), y0(n);
    Index row = 0;
    for (Index i = 0; i < m; ++i) {
        const Type& t = types[static_cast<std::size_t>(i % 4)];
        for (Index j = 0; j < sizes[static_cast<std::size_t>(i)]; ++j, ++row) {
            x(row, 0) = t.x;
            y1(row) = t.y1;
            y0(row) = t.y0;
        }
    }
    auto layout = std::make_shared<const ClusterLayout>(std::vector<std::string>{}, sizes, x, MatrixXd(m, 0));
    return ScienceTable(layout, y1, y0);
}

ScienceTable dominant_science(Index m, std::uint64_t seed) {
    if (m < 2) throw ValidationError("this scenario needs at least two clusters");
    Rng rng = substream(seed, science_stream);
    std::vector<Index> sizes = uniform_sizes(rng, m - 1, 2000.0 / static_cast<double>(m));
    sizes.push_back(800);
    Index n = 0;
    for (Index s : sizes) n += s;

    MatrixXd x(n, 1);
    Index row = 0;
    for (Index i = 0; i < m; ++i) {
        for (Index j = 0; j < sizes[static_cast<std::size_t>(i)]; ++j) {
            x(row++, 0) = static_cast<double>(i + 1) / static_cast<double>(m);
        }
    }
    const double xbar = x.col(0).mean();
    std::normal_distribution<double> z01(0.0, 1.0);
    VectorXd y(n);
    row = 0;
    for (Index i = 0; i < m; ++i) {
        const double im = static_cast<double>(i + 1) / static_cast<double>(m);
        for (Index j = 0; j < sizes[static_cast<std::size_t>(i)]; ++j, ++row) {
            const double d = x(row, 0) - xbar;
            y(row) = im * im + d * d + z01(rng);
        }
    }
    auto layout = std::make_shared<const ClusterLayout>(std::vector<std::string>{}, sizes, x, MatrixXd(m, 0));
    return ScienceTable(layout, y, y);
}

}  // namespace

std::vector<std::string> scenario_ids() { return {"s61", "s62", "s63", "s64", "s65"}; }

ScenarioDraw make_scenario(const std::string& id, std::uint64_t seed, std::optional<Index> m) {
    Scenario s;
    s.id = id;
    s.seed = seed;
    if (m && *m < 2) throw ValidationError("scenario needs at least two clusters");
    if (id == "s61" || id == "s62") {
        s.m = m.value_or(160);
        s.e = 0.3;
        const bool with_x = id == "s61";
        s.description = with_x ? "predictive unit covariate, heterogeneous effects"
                               : "covariate unrelated to the potential outcomes";
        s.default_estimators = with(kCommon, {"tau_aw", "tau_aw_adj"});
        return {smooth_science(s.m, seed, with_x), s};
    }
    if (id == "s63" || id == "s64") {
        s.m = m.value_or(100);
        s.e = 0.5;
        const bool large = id == "s64";
        s.description = large ? "counterexample population with a large last cluster"
                              : "counterexample where unit-level adjustment loses efficiency";
        s.default_estimators = large ? with(kCommon, {"tau_t_adj_xbar", "tau_t_adj_xtilde"}) : kCommon;
        return {counterexample_science(s.m, large), s};
    }
    if (id == "s65") {
        s.m = m.value_or(100);
        s.e = 0.4;
        s.description = "dominant last cluster under the sharp null";
        s.default_estimators = kCommon;
        return {dominant_science(s.m, seed), s};
    }
    throw ValidationError("unknown scenario '" + id + "' (expected s61, s62, s63, s64 or s65)");
}

}  // namespace clustrand
