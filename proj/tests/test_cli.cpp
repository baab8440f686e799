#include "doctest.h"

#include "clustrand/cli.hpp"
#include "clustrand/error.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace clustrand;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = 0;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "clustrand");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name, const std::string& contents) {
    const fs::path dir = fs::temp_directory_path() / "clustrand_cli_tests";
    fs::create_directories(dir);
    const fs::path p = dir / name;
    std::ofstream(p) << contents;
    return p;
}

const char* six_units = "cluster_id,z,y\n"
                        "a,1,2\n"
                        "b,1,6\n"
                        "c,0,1\n"
                        "c,0,3\n"
                        "d,0,5\n"
                        "d,0,9\n";

std::string twelve_clusters() {
    std::ostringstream s;
    s << "cluster_id,z,y,x_age,c_site\n";
    for (int i = 0; i < 12; ++i) {
        const int size = 1 + (i * 7) % 4;
        for (int j = 0; j < size; ++j) {
            const double x = std::sin(i * 3.1 + j);
            s << "k" << i << ',' << (i % 2) << ',' << (i % 2) * 1.5 + x + 0.1 * j + 0.3 * i << ',' << x << ','
              << std::cos(i * 1.7) << '\n';
        }
    }
    return s.str();
}

}  // namespace

TEST_CASE("analyze: six-unit fixture") {
    const fs::path p = scratch("six.csv", six_units);
    const Run r = run({"analyze", "--input", p.string(), "--format", "csv"});
    CHECK(r.code == 0);
    std::istringstream in(r.out);
    const auto rows = parse_report_csv(in);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].label == "tau_i");
    CHECK(rows[0].estimate == doctest::Approx(-0.5));
    CHECK(rows[0].se_flavor == "LZ");
    CHECK(rows[1].label == "tau_t");
    CHECK(rows[1].estimate == doctest::Approx(-10.0 / 3.0));

    const Run table = run({"analyze", "--input", p.string()});
    CHECK(table.code == 0);
    CHECK(table.out.find("-3.33333") != std::string::npos);
    CHECK(table.out.find("skipped tau_t_adj_nx") != std::string::npos);
}

TEST_CASE("analyze: default set and round-trip") {
    const fs::path p = scratch("twelve.csv", twelve_clusters());
    const Run csv = run({"analyze", "--input", p.string(), "--format", "csv"});
    REQUIRE(csv.code == 0);
    std::istringstream cin(csv.out);
    const auto rows = parse_report_csv(cin);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].label == "tau_i");
    CHECK(rows[1].label == "tau_i_adj");
    CHECK(rows[2].label == "tau_t");
    CHECK(rows[3].label == "tau_t_adj_nx");
    CHECK(rows[3].note == "recommended");
    CHECK(rows[3].se_flavor == "HW");

    const Run json = run({"analyze", "--input", p.string(), "--format", "json"});
    REQUIRE(json.code == 0);
    std::istringstream jin(json.out);
    const auto jrows = parse_report_json(jin);
    REQUIRE(jrows.size() == rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
        CHECK(jrows[k].label == rows[k].label);
        // Both emit shortest round-trip decimals, so values agree bit for bit.
        CHECK(jrows[k].estimate == rows[k].estimate);
        CHECK(jrows[k].se == rows[k].se);
        CHECK(jrows[k].ci_low == rows[k].ci_low);
        CHECK(jrows[k].ci_high == rows[k].ci_high);
        CHECK(jrows[k].level == rows[k].level);
        CHECK(jrows[k].note == rows[k].note);
    }
    const auto doc = nlohmann::json::parse(json.out);
    CHECK(doc.at("clusters") == 12);
    CHECK(doc.at("diagnostics").contains("max_share"));

    // Same bytes in, same bytes out.
    CHECK(run({"analyze", "--input", p.string(), "--format", "csv"}).out == csv.out);

    const fs::path outp = fs::temp_directory_path() / "clustrand_cli_tests" / "report.csv";
    CHECK(run({"analyze", "--input", p.string(), "--format", "csv", "--output", outp.string()}).code == 0);
    std::ifstream f(outp);
    std::stringstream buf;
    buf << f.rdbuf();
    CHECK(buf.str() == csv.out);
}

TEST_CASE("analyze: explicit estimators, weights and level") {
    const fs::path p = scratch("twelve_w.csv", twelve_clusters());
    const Run r = run({"analyze", "--input", p.string(), "--format", "csv", "--estimators", "tau_a,tau_pia_adj",
                       "--weights", "uniform", "--level", "0.9"});
    REQUIRE(r.code == 0);
    std::istringstream in(r.out);
    const auto rows = parse_report_csv(in);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].level == 0.9);
    CHECK(rows[1].label == "tau_pia_adj");

    CHECK(run({"analyze", "--input", p.string(), "--level", "1.5"}).code == 2);
    CHECK(run({"analyze", "--input", p.string(), "--level", "0"}).code == 2);
    CHECK(run({"analyze", "--input", p.string(), "--estimators", "tau_zz"}).code == 2);
    CHECK(run({"analyze", "--input", p.string(), "--weights", "heavy"}).code == 2);
    CHECK(run({"analyze", "--input", p.string(), "--format", "xml"}).code == 2);
    // Column weights requested but the CSV has no pi column.
    CHECK(run({"analyze", "--input", p.string(), "--estimators", "tau_api", "--weights", "column"}).code == 2);
}

TEST_CASE("analyze: constant outcomes") {
    // Equal sizes: every estimator sees identical outcomes in both arms.
    const fs::path p = scratch("flat.csv", "cluster_id,z,y\n1,1,3\n1,1,3\n2,1,3\n2,1,3\n3,0,3\n3,0,3\n4,0,3\n4,0,3\n");
    const Run r = run({"analyze", "--input", p.string(), "--format", "csv", "--estimators", "tau_i,tau_t,tau_a"});
    REQUIRE(r.code == 0);
    std::istringstream in(r.out);
    const auto rows = parse_report_csv(in);
    REQUIRE(rows.size() == 3);
    for (const auto& row : rows) {
        CHECK(std::abs(row.estimate) < 1e-12);
        CHECK(std::abs(row.se) < 1e-12);
    }

    // Unequal sizes make the scaled totals vary, so the total estimator keeps a positive SE.
    const fs::path q = scratch("flat_unequal.csv", "cluster_id,z,y\n1,1,3\n2,1,3\n2,1,3\n3,0,3\n4,0,3\n4,0,3\n");
    const Run u = run({"analyze", "--input", q.string(), "--format", "csv"});
    REQUIRE(u.code == 0);
    std::istringstream uin(u.out);
    const auto urows = parse_report_csv(uin);
    CHECK(std::abs(urows[0].se) < 1e-12);
    CHECK(urows[1].estimate == doctest::Approx(0.0));
    CHECK(urows[1].se == doctest::Approx(1.0));
}

TEST_CASE("exit codes") {
    CHECK(run({"analyze", "--input", scratch("empty.csv", "").string()}).code == 2);
    const Run bad = run({"analyze", "--input", scratch("badz.csv", "cluster_id,z,y\n1,2,3\n2,0,1\n").string()});
    CHECK(bad.code == 2);
    CHECK(bad.err.find("row") != std::string::npos);
    CHECK(run({"analyze", "--input", scratch("onearm.csv", "cluster_id,z,y\n1,1,3\n2,1,4\n").string()}).code == 3);
    CHECK(run({"analyze", "--input", "/nonexistent/file.csv"}).code == 2);
    CHECK(run({"analyze"}).code == 2);
    CHECK(run({}).code == 2);
    CHECK(run({"bogus"}).code == 2);
    CHECK(run({"--help"}).code == 0);
    CHECK(exit_code(ErrorKind::validation) == 2);
    CHECK(exit_code(ErrorKind::insufficient_data) == 3);
    CHECK(exit_code(ErrorKind::numerical) == 4);
}

TEST_CASE("simulate") {
    CHECK(run({"simulate", "--id", "s63", "--R", "0"}).code == 2);
    CHECK(run({"simulate", "--id", "s99"}).code == 2);
    CHECK(run({"simulate"}).code == 2);

    const Run a = run({"simulate", "--id", "s63", "--M", "20", "--R", "200", "--seed", "7", "--format", "csv"});
    REQUIRE(a.code == 0);
    CHECK(a.out.rfind("estimator,bias,se,se-hat,rmse,coverage,replications,failures\n", 0) == 0);
    const Run b = run({"simulate", "--id", "s63", "--M", "20", "--R", "200", "--seed", "7", "--format", "csv",
                       "--threads", "3"});
    CHECK(a.out == b.out);

    const Run scaled = run({"simulate", "--id", "s63", "--M", "20", "--R", "200", "--seed", "7", "--format", "json",
                            "--scale", "100", "--estimators", "tau_i"});
    REQUIRE(scaled.code == 0);
    const auto doc = nlohmann::json::parse(scaled.out);
    CHECK(doc.at("scale") == 100.0);
    CHECK(doc.at("metrics").size() == 1);

    const fs::path cfg = scratch("s63.cfg", "id = s63\nM = 20\nR = 200\nseed = 7\n");
    const Run c = run({"simulate", "--config", cfg.string(), "--format", "csv"});
    CHECK(c.out == a.out);
    CHECK(run({"simulate", "--config", cfg.string(), "--R", "0"}).code == 2);
}

TEST_CASE("simulate from a science CSV") {
    std::ostringstream s;
    s << "cluster_id,y1,y0,x_a\n";
    for (int i = 0; i < 10; ++i)
        for (int j = 0; j <= i % 3; ++j) s << i << ',' << 1.0 + 0.2 * i + j << ',' << 0.1 * i * j << ',' << j - 1 << '\n';
    const fs::path sci = scratch("science.csv", s.str());
    const fs::path cfg = scratch("sci.cfg", "science = " + sci.string() + "\ne = 0.5\nR = 50\nestimators = tau_i, tau_t\n");
    const Run r = run({"simulate", "--config", cfg.string(), "--format", "csv"});
    CHECK(r.code == 0);
    CHECK(r.out.find("tau_t,") != std::string::npos);
}

TEST_CASE("frt") {
    const fs::path p = scratch("six_frt.csv", six_units);
    const Run r = run({"frt", "--input", p.string(), "--exact", "--format", "json"});
    REQUIRE(r.code == 0);
    const auto doc = nlohmann::json::parse(r.out);
    CHECK(doc.at("reference_size") == 6);
    CHECK(doc.at("mode") == "exact");
    const double k = doc.at("p_value").get<double>() * 6.0;
    CHECK(std::abs(k - std::round(k)) < 1e-12);

    const Run mc = run({"frt", "--input", p.string(), "--R", "99", "--seed", "5", "--format", "csv"});
    REQUIRE(mc.code == 0);
    CHECK(mc.out.find("monte_carlo,99") != std::string::npos);
    CHECK(mc.out.find(",5\n") != std::string::npos);
    CHECK(run({"frt", "--input", p.string(), "--R", "99", "--seed", "5", "--format", "csv"}).out == mc.out);
    CHECK(run({"frt", "--input", p.string(), "--R", "0"}).code == 2);
    CHECK(run({"frt", "--input", p.string(), "--estimators", "tau_i,tau_t"}).code == 2);

    const fs::path flat = scratch("flat_frt.csv", "cluster_id,z,y\n1,1,3\n2,1,3\n3,0,3\n4,0,3\n");
    const Run f = run({"frt", "--input", flat.string(), "--exact", "--format", "json"});
    REQUIRE(f.code == 0);
    const auto fd = nlohmann::json::parse(f.out);
    CHECK(fd.at("p_value") == 1.0);
    CHECK(fd.at("degenerate") == 6);
}

TEST_CASE("diagnose") {
    const fs::path p = scratch("diag.csv", "cluster_id,z,y\n1,1,0\n2,0,0\n3,1,0\n3,1,0\n4,0,0\n4,0,0\n");
    const Run r = run({"diagnose", "--input", p.string(), "--format", "json"});
    REQUIRE(r.code == 0);
    const auto doc = nlohmann::json::parse(r.out);
    CHECK(doc.at("max_share").get<double>() == doctest::Approx(1.0 / 3.0));
    CHECK(doc.at("dominant_cluster") == true);
    CHECK(run({"diagnose", "--input", p.string()}).out.find("warning") != std::string::npos);
}
