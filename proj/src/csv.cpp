#include "clustrand/csv.hpp"

#include "clustrand/error.hpp"
#include "clustrand/sim.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <unordered_map>

namespace clustrand {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (ch == '"') {
                quoted = false;
            } else {
                cur += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    for (auto& f : out) {
        const auto b = f.find_first_not_of(" \t");
        const auto e = f.find_last_not_of(" \t");
        f = b == std::string::npos ? "" : f.substr(b, e - b + 1);
    }
    return out;
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<int> line_numbers;
};

Table read_table(std::istream& in) {
    Table t;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto fields = split_line(line);
        if (t.header.empty()) {
            t.header = std::move(fields);
            continue;
        }
        if (fields.size() != t.header.size()) {
            throw ValidationError("row " + std::to_string(lineno) + ": expected " + std::to_string(t.header.size()) +
                                  " fields, found " + std::to_string(fields.size()));
        }
        t.rows.push_back(std::move(fields));
        t.line_numbers.push_back(lineno);
    }
    if (t.header.empty()) throw ValidationError("input is empty: a header row is required");
    if (t.rows.empty()) throw ValidationError("input has a header but no data rows");
    return t;
}

std::string where(int line, const std::string& column) {
    return "row " + std::to_string(line) + ", column '" + column + "'";
}

double parse_value(const std::string& s, int line, const std::string& column) {
    if (s.empty() || s == "NA" || s == "na" || s == "NaN" || s == "nan" || s == "null") {
        throw ValidationError(where(line, column) + ": missing value");
    }
    double v = 0.0;
    const char* begin = s.data();
    if (*begin == '+') ++begin;
    const auto res = std::from_chars(begin, s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw ValidationError(where(line, column) + ": '" + s + "' is not a number");
    }
    if (!std::isfinite(v)) throw ValidationError(where(line, column) + ": non-finite value");
    return v;
}

// Columns shared by both CSV kinds, grouped by cluster.
struct Parsed {
    std::vector<std::string> ids;
    std::vector<std::vector<std::size_t>> members;  // row indices per cluster
    std::vector<std::string> x_names, c_names;
    std::vector<std::size_t> x_cols, c_cols;
    std::optional<std::size_t> pi_col;
    std::map<std::string, std::size_t> named;
};

Parsed classify(const Table& t, const std::vector<std::string>& required) {
    Parsed p;
    for (std::size_t k = 0; k < t.header.size(); ++k) {
        const std::string& h = t.header[k];
        if (h.empty()) throw ValidationError("header column " + std::to_string(k + 1) + " is empty");
        if (p.named.count(h) || std::count(p.x_names.begin(), p.x_names.end(), h) ||
            std::count(p.c_names.begin(), p.c_names.end(), h)) {
            throw ValidationError("header: duplicate column '" + h + "'");
        }
        if (h.rfind("x_", 0) == 0) {
            p.x_names.push_back(h);
            p.x_cols.push_back(k);
        } else if (h.rfind("c_", 0) == 0) {
            p.c_names.push_back(h);
            p.c_cols.push_back(k);
        } else if (h == "pi") {
            p.pi_col = k;
        } else if (std::find(required.begin(), required.end(), h) != required.end()) {
            p.named[h] = k;
        } else {
            throw ValidationError("header: unexpected column '" + h + "'");
        }
    }
    for (const auto& r : required) {
        if (!p.named.count(r)) throw ValidationError("header: required column '" + r + "' is missing");
    }

    std::unordered_map<std::string, std::size_t> index;
    const std::size_t id_col = p.named.at("cluster_id");
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const std::string& id = t.rows[r][id_col];
        if (id.empty()) throw ValidationError(where(t.line_numbers[r], "cluster_id") + ": missing value");
        auto [it, fresh] = index.emplace(id, p.ids.size());
        if (fresh) {
            p.ids.push_back(id);
            p.members.emplace_back();
        }
        p.members[it->second].push_back(r);
    }
    return p;
}

// Reads a per-cluster column and checks it is constant within every cluster.
double cluster_constant(const Table& t, const Parsed& p, std::size_t cluster, std::size_t col) {
    const auto& rows = p.members[cluster];
    const std::string& name = t.header[col];
    const double first = parse_value(t.rows[rows[0]][col], t.line_numbers[rows[0]], name);
    for (std::size_t r : rows) {
        const double v = parse_value(t.rows[r][col], t.line_numbers[r], name);
        if (v != first) {
            throw ValidationError(where(t.line_numbers[r], name) + ": value differs within cluster '" + p.ids[cluster] +
                                  "'");
        }
    }
    return first;
}

struct LayoutAndOrder {
    std::shared_ptr<const ClusterLayout> layout;
    std::vector<std::size_t> order;  // table row for each stored unit
};

LayoutAndOrder build_layout(const Table& t, const Parsed& p) {
    const std::size_t m = p.ids.size();
    std::vector<Index> sizes;
    LayoutAndOrder out;
    for (const auto& rows : p.members) {
        sizes.push_back(static_cast<Index>(rows.size()));
        out.order.insert(out.order.end(), rows.begin(), rows.end());
    }
    const auto n = static_cast<Index>(out.order.size());
    Eigen::MatrixXd x(n, static_cast<Index>(p.x_cols.size()));
    for (Index u = 0; u < n; ++u) {
        const std::size_t r = out.order[static_cast<std::size_t>(u)];
        for (std::size_t k = 0; k < p.x_cols.size(); ++k) {
            x(u, static_cast<Index>(k)) = parse_value(t.rows[r][p.x_cols[k]], t.line_numbers[r], p.x_names[k]);
        }
    }
    Eigen::MatrixXd c(static_cast<Index>(m), static_cast<Index>(p.c_cols.size()));
    std::optional<Eigen::VectorXd> pi;
    if (p.pi_col) pi = Eigen::VectorXd(static_cast<Index>(m));
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t k = 0; k < p.c_cols.size(); ++k) {
            c(static_cast<Index>(i), static_cast<Index>(k)) = cluster_constant(t, p, i, p.c_cols[k]);
        }
        if (pi) {
            const double w = cluster_constant(t, p, i, *p.pi_col);
            if (!(w > 0.0)) {
                throw ValidationError(where(t.line_numbers[p.members[i][0]], "pi") + ": weight must be positive");
            }
            (*pi)(static_cast<Index>(i)) = w;
        }
    }
    out.layout = std::make_shared<const ClusterLayout>(p.ids, sizes, x, c, pi, p.x_names, p.c_names);
    return out;
}

Eigen::VectorXd unit_column(const Table& t, const LayoutAndOrder& lo, std::size_t col) {
    Eigen::VectorXd v(static_cast<Index>(lo.order.size()));
    for (std::size_t u = 0; u < lo.order.size(); ++u) {
        const std::size_t r = lo.order[u];
        v(static_cast<Index>(u)) = parse_value(t.rows[r][col], t.line_numbers[r], t.header[col]);
    }
    return v;
}

}  // namespace

ClusteredSample read_sample_csv(std::istream& in) {
    const Table t = read_table(in);
    const Parsed p = classify(t, {"cluster_id", "z", "y"});
    const std::size_t zcol = p.named.at("z");
    Assignment z;
    for (std::size_t i = 0; i < p.ids.size(); ++i) {
        const double v = cluster_constant(t, p, i, zcol);
        if (v != 0.0 && v != 1.0) {
            throw ValidationError(where(t.line_numbers[p.members[i][0]], "z") + ": treatment must be 0 or 1");
        }
        z.push_back(static_cast<std::uint8_t>(v));
    }
    const LayoutAndOrder lo = build_layout(t, p);
    return ClusteredSample(lo.layout, std::move(z), unit_column(t, lo, p.named.at("y")));
}

ClusteredSample read_sample_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open input file '" + path + "'");
    return read_sample_csv(in);
}

ScienceTable read_science_csv(std::istream& in) {
    const Table t = read_table(in);
    const Parsed p = classify(t, {"cluster_id", "y1", "y0"});
    const LayoutAndOrder lo = build_layout(t, p);
    return ScienceTable(lo.layout, unit_column(t, lo, p.named.at("y1")), unit_column(t, lo, p.named.at("y0")));
}

ScienceTable read_science_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open science file '" + path + "'");
    return read_science_csv(in);
}

void write_sample_csv(std::ostream& out, const ClusteredSample& sample) {
    const auto& layout = sample.layout();
    out << "cluster_id,z,y";
    for (const auto& n : layout.x_names()) out << ',' << n;
    for (const auto& n : layout.c_names()) out << ',' << n;
    if (layout.has_weights()) out << ",pi";
    out << '\n';
    for (Index i = 0; i < layout.cluster_count(); ++i) {
        for (Index j = layout.offset(i); j < layout.offset(i) + layout.size(i); ++j) {
            out << layout.ids()[static_cast<std::size_t>(i)] << ',' << (sample.treated(i) ? 1 : 0) << ','
                << format_double(sample.y()(j));
            for (Index k = 0; k < layout.px(); ++k) out << ',' << format_double(layout.x()(j, k));
            for (Index k = 0; k < layout.pc(); ++k) out << ',' << format_double(layout.c()(i, k));
            if (layout.has_weights()) out << ',' << format_double(layout.weights()(i));
            out << '\n';
        }
    }
}

}  // namespace clustrand
