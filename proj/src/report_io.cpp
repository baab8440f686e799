#include "clustrand/cli.hpp"
#include "clustrand/error.hpp"
#include "clustrand/sim.hpp"

#include <json.hpp>

#include <charconv>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

namespace clustrand {

namespace {

std::string note_of(const EstimatorReport& r) {
    if (r.spec.recommended) return "recommended";
    if (r.spec.not_recommended) return "not recommended";
    return "";
}

double parse_field(const std::string& s) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) throw ValidationError("report: bad number '" + s + "'");
    return v;
}

}  // namespace

void write_report_csv(std::ostream& out, const AnalyzeReport& report) {
    out << "estimator,estimate,se,se_flavor,ci_low,ci_high,level,note\n";
    for (const auto& r : report.estimators) {
        out << r.label << ',' << format_double(r.estimate) << ',' << format_double(r.se) << ',' << to_string(r.se_flavor)
            << ',' << format_double(r.ci_low) << ',' << format_double(r.ci_high) << ',' << format_double(r.level) << ','
            << note_of(r) << '\n';
    }
}

void write_report_json(std::ostream& out, const AnalyzeReport& report) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : report.estimators) {
        rows.push_back({{"estimator", r.label},
                        {"estimate", r.estimate},
                        {"se", r.se},
                        {"se_flavor", to_string(r.se_flavor)},
                        {"ci_low", r.ci_low},
                        {"ci_high", r.ci_high},
                        {"level", r.level},
                        {"note", note_of(r)},
                        {"warnings", r.warnings}});
    }
    const auto& g = report.regularity;
    nlohmann::json doc = {
        {"clusters", report.clusters},
        {"units", report.units},
        {"treated_clusters", report.treated_clusters},
        {"diagnostics",
         {{"max_share", g.max_share},
          {"max_omega_tilde", g.max_omega_tilde},
          {"median_omega_tilde", g.median_omega_tilde},
          {"omega_tilde_second_moment", g.second_moment},
          {"omega_tilde_fourth_moment", g.fourth_moment},
          {"dominant_cluster", g.dominant_cluster},
          {"heavy_tailed_sizes", g.heavy_tailed_sizes}}},
        {"estimators", rows}};
    nlohmann::json skipped = nlohmann::json::array();
    for (const auto& [label, reason] : report.skipped) skipped.push_back({{"estimator", label}, {"reason", reason}});
    doc["skipped"] = skipped;
    out << doc.dump(2) << '\n';
}

void write_report_table(std::ostream& out, const AnalyzeReport& report) {
    out << "M = " << report.clusters << " clusters, N = " << report.units << " units, " << report.treated_clusters
        << " treated clusters, Omega = " << format_short(report.regularity.max_share) << '\n';
    for (const auto& w : report.regularity.warnings) out << "warning: " << w << '\n';
    out << std::left << std::setw(18) << "estimator" << std::right << std::setw(13) << "estimate" << std::setw(13)
        << "se" << std::setw(5) << "" << std::setw(13) << "ci_low" << std::setw(13) << "ci_high" << "  note\n";
    for (const auto& r : report.estimators) {
        out << std::left << std::setw(18) << r.label << std::right << std::setw(13) << format_short(r.estimate)
            << std::setw(13) << format_short(r.se) << std::setw(5) << to_string(r.se_flavor) << std::setw(13)
            << format_short(r.ci_low) << std::setw(13) << format_short(r.ci_high) << "  " << note_of(r) << '\n';
        for (const auto& w : r.warnings) out << "  warning: " << w << '\n';
    }
    for (const auto& [label, reason] : report.skipped) out << "skipped " << label << ": " << reason << '\n';
    if (!report.estimators.empty()) {
        out << "confidence level " << format_short(report.estimators.front().level) << '\n';
    }
}

std::vector<ParsedReportRow> parse_report_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("report: empty input");
    std::vector<ParsedReportRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string item;
        while (std::getline(ss, item, ',')) f.push_back(item);
        if (f.size() == 7) f.emplace_back();
        if (f.size() != 8) throw ValidationError("report: malformed row '" + line + "'");
        rows.push_back({f[0], parse_field(f[1]), parse_field(f[2]), f[3], parse_field(f[4]), parse_field(f[5]),
                        parse_field(f[6]), f[7]});
    }
    return rows;
}

std::vector<ParsedReportRow> parse_report_json(std::istream& in) {
    const nlohmann::json doc = nlohmann::json::parse(in);
    std::vector<ParsedReportRow> rows;
    for (const auto& r : doc.at("estimators")) {
        rows.push_back({r.at("estimator").get<std::string>(), r.at("estimate").get<double>(), r.at("se").get<double>(),
                        r.at("se_flavor").get<std::string>(), r.at("ci_low").get<double>(),
                        r.at("ci_high").get<double>(), r.at("level").get<double>(), r.at("note").get<std::string>()});
    }
    return rows;
}

}  // namespace clustrand
