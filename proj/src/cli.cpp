#include "clustrand/cli.hpp"

#include "clustrand/csv.hpp"
#include "clustrand/sim.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace clustrand {

int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::validation: return 2;
        case ErrorKind::insufficient_data: return 3;
        case ErrorKind::numerical: return 4;
    }
    return 4;
}

namespace {

struct Options {
    std::string input;
    std::string estimators;
    std::string weights = "omega";
    double level = 0.95;
    long long replications = 1000;
    std::uint64_t seed = 1;
    std::string format = "table";
    std::string output;
    std::string id;
    bool exact = false;
    unsigned threads = 0;
    std::string config;
    long long m = 0;
    double e = 0.0;
    double scale = 1.0;
};

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        if (b == std::string::npos) continue;
        out.push_back(item.substr(b, item.find_last_not_of(" \t") - b + 1));
    }
    return out;
}

std::vector<EstimatorSpec> resolve_specs(const std::vector<std::string>& names, WeightSource pi) {
    std::vector<EstimatorSpec> specs;
    for (const auto& n : names) specs.push_back(make_estimator(n, pi));
    return specs;
}

void check_level(double level) {
    if (!(level > 0.0 && level < 1.0)) throw ValidationError("--level must lie strictly between 0 and 1");
}

void check_format(const std::string& f) {
    if (f != "table" && f != "csv" && f != "json") throw ValidationError("--format must be table, csv or json");
}

// Writes `emit` to --output when given, else to the console stream.
template <class Emit>
void deliver(const Options& o, std::ostream& console, Emit&& emit) {
    if (o.output.empty()) {
        emit(console);
        return;
    }
    std::ofstream file(o.output);
    if (!file) throw ValidationError("cannot open output file '" + o.output + "'");
    emit(file);
}

int cmd_analyze(const Options& o, std::ostream& out) {
    check_level(o.level);
    check_format(o.format);
    const ClusteredSample sample = read_sample_csv_file(o.input);
    sample.require_both_arms();
    const WeightSource pi = parse_weight_source(o.weights);

    std::vector<std::string> names = split_list(o.estimators);
    const bool defaults = names.empty();
    if (defaults) {
        names = {"tau_i", "tau_i_adj", "tau_t", "tau_t_adj_nx"};
        if (sample.layout().px() == 0) names.erase(names.begin() + 1);
    }

    AnalyzeReport report;
    report.clusters = sample.cluster_count();
    report.units = sample.unit_count();
    report.treated_clusters = sample.treated_clusters();
    report.regularity = regularity_diagnostics(sample.layout());
    for (const auto& spec : resolve_specs(names, pi)) {
        // Explicitly requested estimators must succeed; a default one that cannot be fitted
        // (for instance too few clusters for the adjusted design) is listed as skipped.
        try {
            report.estimators.push_back(estimate(sample, spec, o.level));
        } catch (const Error& e) {
            if (!defaults || e.kind() == ErrorKind::validation) throw;
            std::string reason = e.what();
            if (const std::string prefix = spec.label + ": "; reason.rfind(prefix, 0) == 0) reason.erase(0, prefix.size());
            report.skipped.emplace_back(spec.label, reason);
        }
    }

    deliver(o, out, [&](std::ostream& s) {
        if (o.format == "csv") {
            write_report_csv(s, report);
        } else if (o.format == "json") {
            write_report_json(s, report);
        } else {
            write_report_table(s, report);
        }
    });
    return 0;
}

int cmd_simulate(Options o, std::ostream& out, const CLI::App& sub) {
    check_format(o.format);
    SimConfig cfg;
    if (!o.config.empty()) cfg = load_sim_config(o.config);
    // Command-line flags override the config file.
    std::string id = sub.count("--id") ? o.id : cfg.id.value_or(o.id);
    const auto reps = sub.count("--R") ? o.replications : static_cast<long long>(cfg.replications.value_or(1000));
    if (reps < 1) throw ValidationError("--R must be at least 1");
    const std::uint64_t seed = sub.count("--seed") ? o.seed : cfg.seed.value_or(o.seed);
    std::optional<Index> m;
    if (sub.count("--M")) {
        m = static_cast<Index>(o.m);
    } else if (cfg.m) {
        m = *cfg.m;
    }
    const std::string weights = sub.count("--weights") ? o.weights : cfg.weights.value_or(o.weights);
    std::vector<std::string> names = sub.count("--estimators") ? split_list(o.estimators) : cfg.estimators;

    std::optional<ScienceTable> science;
    double e = 0.0;
    if (cfg.science_csv) {
        science = read_science_csv_file(*cfg.science_csv);
        e = sub.count("--e") ? o.e : cfg.e.value_or(0.0);
        if (names.empty()) names = {"tau_i", "tau_t", "tau_t_adj_n", "tau_a"};
        if (id.empty()) id = "science";
    } else {
        if (id.empty()) throw ValidationError("simulate needs --id (s61..s65) or a config with id or science");
        ScenarioDraw draw = make_scenario(id, seed, m);
        e = sub.count("--e") ? o.e : cfg.e.value_or(draw.scenario.e);
        if (names.empty()) names = draw.scenario.default_estimators;
        science = std::move(draw.science);
    }

    MonteCarloOptions mc;
    mc.replications = static_cast<std::uint64_t>(reps);
    mc.seed = seed;
    mc.threads = o.threads;
    const auto specs = resolve_specs(names, parse_weight_source(weights));
    const MonteCarloResult result = run_monte_carlo(*science, e, specs, mc);

    deliver(o, out, [&](std::ostream& s) {
        if (o.format == "csv") {
            write_metrics_csv(s, result.rows, o.scale);
        } else if (o.format == "json") {
            write_metrics_json(s, result.rows, o.scale);
        } else {
            s << "scenario " << id << ", M = " << science->layout().cluster_count() << ", e = " << format_short(e)
              << ", R = " << reps << ", seed = " << seed << '\n';
            write_metrics_table(s, result.rows, o.scale);
        }
    });
    return 0;
}

int cmd_frt(const Options& o, std::ostream& out) {
    check_format(o.format);
    const ClusteredSample sample = read_sample_csv_file(o.input);
    std::vector<std::string> names = split_list(o.estimators);
    if (names.size() > 1) throw ValidationError("frt takes a single estimator");
    const EstimatorSpec spec = make_estimator(names.empty() ? "tau_i" : names.front(), parse_weight_source(o.weights));
    if (!o.exact && o.replications < 1) throw ValidationError("--R must be at least 1");

    FrtOptions f;
    f.exact = o.exact;
    f.draws = static_cast<std::uint64_t>(std::max<long long>(1, o.replications));
    f.seed = o.seed;
    f.threads = o.threads;
    const FrtResult r = fisher_randomization_test(sample, spec, f);

    deliver(o, out, [&](std::ostream& s) {
        if (o.format == "json") {
            nlohmann::json doc = {{"estimator", spec.label},     {"p_value", r.p_value},
                                  {"statistic", r.statistic},    {"mode", r.exact ? "exact" : "monte_carlo"},
                                  {"reference_size", r.reference_size}, {"degenerate", r.degenerate},
                                  {"seed", r.seed}};
            s << doc.dump(2) << '\n';
        } else if (o.format == "csv") {
            s << "estimator,p_value,statistic,mode,reference_size,degenerate,seed\n"
              << spec.label << ',' << format_double(r.p_value) << ',' << format_double(r.statistic) << ','
              << (r.exact ? "exact" : "monte_carlo") << ',' << r.reference_size << ',' << r.degenerate << ','
              << r.seed << '\n';
        } else {
            s << "estimator " << spec.label << '\n'
              << "statistic |t| = " << format_short(r.statistic) << '\n'
              << "p-value = " << format_short(r.p_value) << '\n'
              << (r.exact ? "exact enumeration over " : "Monte Carlo draws: ") << r.reference_size << '\n'
              << "degenerate reference draws (t := 0): " << r.degenerate << '\n'
              << "seed " << r.seed << '\n';
        }
    });
    return 0;
}

int cmd_diagnose(const Options& o, std::ostream& out) {
    check_format(o.format);
    const ClusteredSample sample = read_sample_csv_file(o.input);
    const RegularityReport g = regularity_diagnostics(sample.layout());
    deliver(o, out, [&](std::ostream& s) {
        if (o.format == "json") {
            nlohmann::json doc = {{"clusters", sample.cluster_count()},
                                  {"units", sample.unit_count()},
                                  {"max_share", g.max_share},
                                  {"max_omega_tilde", g.max_omega_tilde},
                                  {"median_omega_tilde", g.median_omega_tilde},
                                  {"omega_tilde_second_moment", g.second_moment},
                                  {"omega_tilde_fourth_moment", g.fourth_moment},
                                  {"dominant_cluster", g.dominant_cluster},
                                  {"heavy_tailed_sizes", g.heavy_tailed_sizes},
                                  {"warnings", g.warnings}};
            s << doc.dump(2) << '\n';
        } else if (o.format == "csv") {
            s << "clusters,units,max_share,max_omega_tilde,median_omega_tilde,second_moment,fourth_moment,"
                 "dominant_cluster,heavy_tailed_sizes\n"
              << sample.cluster_count() << ',' << sample.unit_count() << ',' << format_double(g.max_share) << ','
              << format_double(g.max_omega_tilde) << ',' << format_double(g.median_omega_tilde) << ','
              << format_double(g.second_moment) << ',' << format_double(g.fourth_moment) << ','
              << (g.dominant_cluster ? 1 : 0) << ',' << (g.heavy_tailed_sizes ? 1 : 0) << '\n';
        } else {
            s << "M = " << sample.cluster_count() << ", N = " << sample.unit_count() << '\n'
              << "Omega (max n_i/N)         " << format_short(g.max_share) << '\n'
              << "max omega-tilde           " << format_short(g.max_omega_tilde) << '\n'
              << "median omega-tilde        " << format_short(g.median_omega_tilde) << '\n'
              << "mean omega-tilde^2        " << format_short(g.second_moment) << '\n'
              << "mean omega-tilde^4        " << format_short(g.fourth_moment) << '\n';
            for (const auto& w : g.warnings) s << "warning: " << w << '\n';
        }
    });
    return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Design-based analysis of cluster-randomized experiments", "clustrand"};
    app.require_subcommand(1);
    Options o;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--format", o.format, "table, csv or json")->capture_default_str();
        sub->add_option("--output", o.output, "write to this file instead of stdout");
        sub->add_option("--estimators", o.estimators, "comma-separated estimator names");
        sub->add_option("--weights", o.weights, "pi source for weighted estimators: omega, uniform or column")
            ->capture_default_str();
        sub->add_option("--threads", o.threads, "worker threads (0 = hardware concurrency)");
    };

    auto* analyze = app.add_subcommand("analyze", "estimate effects from a unit-level CSV");
    analyze->add_option("--input", o.input, "unit-level CSV")->required();
    analyze->add_option("--level", o.level, "confidence level")->capture_default_str();
    add_common(analyze);

    auto* simulate = app.add_subcommand("simulate", "Monte Carlo metrics for a simulation scenario");
    simulate->add_option("--id", o.id, "scenario id: s61, s62, s63, s64 or s65");
    simulate->add_option("--config", o.config, "key = value scenario file");
    simulate->add_option("--R", o.replications, "replications")->capture_default_str();
    simulate->add_option("--seed", o.seed, "seed for the science draw and the assignments")->capture_default_str();
    simulate->add_option("--M", o.m, "override the number of clusters");
    simulate->add_option("--e", o.e, "override the treated fraction");
    simulate->add_option("--scale", o.scale, "multiply bias/se/se-hat/rmse for display")->capture_default_str();
    add_common(simulate);

    auto* frt = app.add_subcommand("frt", "studentized Fisher randomization test");
    frt->add_option("--input", o.input, "unit-level CSV")->required();
    frt->add_flag("--exact", o.exact, "enumerate every assignment instead of sampling");
    frt->add_option("--R", o.replications, "Monte Carlo draws")->capture_default_str();
    frt->add_option("--seed", o.seed, "seed for the draws")->capture_default_str();
    add_common(frt);

    auto* diagnose = app.add_subcommand("diagnose", "cluster-size regularity diagnostics");
    diagnose->add_option("--input", o.input, "unit-level CSV")->required();
    diagnose->add_option("--format", o.format, "table, csv or json")->capture_default_str();
    diagnose->add_option("--output", o.output, "write to this file instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (analyze->parsed()) return cmd_analyze(o, out);
        if (simulate->parsed()) return cmd_simulate(o, out, *simulate);
        if (frt->parsed()) return cmd_frt(o, out);
        if (diagnose->parsed()) return cmd_diagnose(o, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code(e.kind());
    } catch (const nlohmann::json::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 4;
    }
    return 2;
}

}  // namespace clustrand
