#pragma once

#include "clustrand/error.hpp"
#include "clustrand/estimators.hpp"
#include "clustrand/oracle.hpp"

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace clustrand {

/// Runs the command line; returns the process exit code
/// (0 ok, 2 usage or validation, 3 insufficient data, 4 numerical failure).
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

int exit_code(ErrorKind kind);

// Report serialization for `analyze`; the CSV and JSON forms parse back losslessly.
struct AnalyzeReport {
    std::vector<EstimatorReport> estimators;
    RegularityReport regularity;
    Index clusters = 0;
    Index units = 0;
    Index treated_clusters = 0;
    // Default estimators that could not be fitted on this sample, with the reason.
    std::vector<std::pair<std::string, std::string>> skipped;
};

void write_report_csv(std::ostream& out, const AnalyzeReport& report);
void write_report_json(std::ostream& out, const AnalyzeReport& report);
void write_report_table(std::ostream& out, const AnalyzeReport& report);

struct ParsedReportRow {
    std::string label;
    double estimate = 0.0;
    double se = 0.0;
    std::string se_flavor;
    double ci_low = 0.0;
    double ci_high = 0.0;
    double level = 0.0;
    std::string note;
};

std::vector<ParsedReportRow> parse_report_csv(std::istream& in);
std::vector<ParsedReportRow> parse_report_json(std::istream& in);

}  // namespace clustrand
