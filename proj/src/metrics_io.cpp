#include "clustrand/error.hpp"
#include "clustrand/sim.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace clustrand {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string format_short(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
    T out{};
    const auto res = std::from_chars(value.data(), value.data() + value.size(), out);
    if (res.ec != std::errc{} || res.ptr != value.data() + value.size()) {
        throw ValidationError("config key '" + key + "': cannot parse '" + value + "'");
    }
    return out;
}

struct Scaled {
    double bias, sd, se, rmse;
};

Scaled scaled(const MetricsRow& r, double scale) { return {r.bias * scale, r.sd * scale, r.mean_se * scale, r.rmse * scale}; }

}  // namespace

SimConfig parse_sim_config(std::istream& in) {
    SimConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ValidationError("config line " + std::to_string(lineno) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key == "id") {
            cfg.id = value;
        } else if (key == "M") {
            cfg.m = parse_number<Index>(key, value);
        } else if (key == "e") {
            cfg.e = parse_number<double>(key, value);
        } else if (key == "R") {
            cfg.replications = parse_number<std::uint64_t>(key, value);
        } else if (key == "seed") {
            cfg.seed = parse_number<std::uint64_t>(key, value);
        } else if (key == "estimators") {
            std::stringstream ss(value);
            std::string item;
            while (std::getline(ss, item, ',')) {
                item = trim(item);
                if (!item.empty()) cfg.estimators.push_back(item);
            }
        } else if (key == "weights") {
            cfg.weights = value;
        } else if (key == "science") {
            cfg.science_csv = value;
        } else {
            throw ValidationError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        }
    }
    return cfg;
}

SimConfig load_sim_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config file '" + path + "'");
    return parse_sim_config(in);
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows, double scale) {
    out << "estimator,bias,se,se-hat,rmse,coverage,replications,failures\n";
    for (const auto& r : rows) {
        const Scaled s = scaled(r, scale);
        out << r.label << ',' << format_double(s.bias) << ',' << format_double(s.sd) << ',' << format_double(s.se) << ','
            << format_double(s.rmse) << ',' << format_double(r.coverage) << ',' << r.successes << ',' << r.failures
            << '\n';
    }
}

void write_metrics_json(std::ostream& out, const std::vector<MetricsRow>& rows, double scale) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : rows) {
        const Scaled s = scaled(r, scale);
        arr.push_back({{"estimator", r.label},
                       {"truth", r.truth},
                       {"bias", s.bias},
                       {"se", s.sd},
                       {"se-hat", s.se},
                       {"rmse", s.rmse},
                       {"coverage", r.coverage},
                       {"replications", r.successes},
                       {"failures", r.failures}});
    }
    nlohmann::json doc = {{"scale", scale}, {"metrics", arr}};
    out << doc.dump(2) << '\n';
}

void write_metrics_table(std::ostream& out, const std::vector<MetricsRow>& rows, double scale) {
    out << std::left << std::setw(18) << "estimator" << std::right;
    for (const char* h : {"bias", "se", "se-hat", "rmse", "coverage"}) out << std::setw(13) << h;
    out << std::setw(8) << "R" << std::setw(9) << "failures" << '\n';
    for (const auto& r : rows) {
        const Scaled s = scaled(r, scale);
        out << std::left << std::setw(18) << r.label << std::right;
        for (double v : {s.bias, s.sd, s.se, s.rmse, r.coverage}) out << std::setw(13) << format_short(v);
        out << std::setw(8) << r.successes << std::setw(9) << r.failures << '\n';
    }
    if (scale != 1.0) out << "(bias, se, se-hat and rmse multiplied by " << format_short(scale) << ")\n";
}

}  // namespace clustrand
