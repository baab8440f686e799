#pragma once

#include "clustrand/estimators.hpp"
#include "clustrand/sample.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace clustrand {

struct Scenario {
    std::string id;
    Index m = 0;
    double e = 0.5;
    std::uint64_t seed = 0;
    std::string description;
    std::vector<std::string> default_estimators;
};

struct ScenarioDraw {
    ScienceTable science;
    Scenario scenario;
};

/// Builds the fixed science table of scenario s61..s65. `m` overrides the default cluster
/// count (s63/s64 need a multiple of 4). The science is drawn once from `seed`.
ScenarioDraw make_scenario(const std::string& id, std::uint64_t seed, std::optional<Index> m = std::nullopt);

std::vector<std::string> scenario_ids();

enum class TruthMode {
    tau,           // every estimator is scored against the unit ATE
    own_estimand,  // weighted estimators are scored against their tau_pi
};

struct MetricsRow {
    std::string label;
    double truth = 0.0;
    double mean_estimate = 0.0;
    double bias = 0.0;
    double sd = 0.0;       // Monte Carlo standard deviation, R-1 denominator
    double mean_se = 0.0;  // average estimated standard error
    double rmse = 0.0;
    double coverage = 0.0;
    std::uint64_t successes = 0;
    std::uint64_t failures = 0;
};

struct MonteCarloOptions {
    std::uint64_t replications = 1000;
    std::uint64_t seed = 1;
    unsigned threads = 0;
    TruthMode truth = TruthMode::tau;
    double level = 0.95;
};

struct MonteCarloResult {
    std::vector<MetricsRow> rows;
    // Per estimator and replication; NaN marks a failed fit.
    std::vector<std::vector<double>> estimates;
    std::vector<std::vector<double>> ses;
};

MonteCarloResult run_monte_carlo(const ScienceTable& science, double e, const std::vector<EstimatorSpec>& specs,
                                 const MonteCarloOptions& options);

struct CoverageInterval {
    double low = 0.0;
    double high = 0.0;
};

/// Closed-interval convention: a truth on the boundary is covered.
bool covers(const CoverageInterval& ci, double truth);
double coverage_rate(const std::vector<CoverageInterval>& cis, double truth);

// Plain key = value scenario configuration; '#' starts a comment.
struct SimConfig {
    std::optional<std::string> id;
    std::optional<Index> m;
    std::optional<double> e;
    std::optional<std::uint64_t> replications;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> estimators;
    std::optional<std::string> weights;
    std::optional<std::string> science_csv;
};

SimConfig parse_sim_config(std::istream& in);
SimConfig load_sim_config(const std::string& path);

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows, double scale = 1.0);
void write_metrics_json(std::ostream& out, const std::vector<MetricsRow>& rows, double scale = 1.0);
void write_metrics_table(std::ostream& out, const std::vector<MetricsRow>& rows, double scale = 1.0);

/// Shortest round-trip decimal representation.
std::string format_double(double v);
/// Six significant digits.
std::string format_short(double v);

}  // namespace clustrand
