#pragma once

// CSV traces and JSON helpers.
//
// Discrete trace columns, in order:
//   k, lambda, accumulator, f_gap, grad_norm_sq, hpe_lhs, hpe_rhs,
//   large_step_value, lyapunov, probe_count, coupling, eps, displacement_sq,
//   v_dist_sq, recurrence_residual, x_0.., v_0.., tv_0.., w_0..
// Flow trace columns, in order:
//   t, a, lambda, f_gap, grad_norm_sq, lyapunov, algebraic_residual, a_dot, s,
//   dissipation_rate, x_0.., v_0..
// Reals are written with 17 significant digits so a trace reads back to the
// exact doubles that were computed.

#include "hoa/accel.hpp"
#include "hoa/flow.hpp"
#include "hoa/rates.hpp"

#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace hoa::harness {

using json = nlohmann::ordered_json;

inline const std::vector<std::string>& discrete_scalar_columns()
{
    static const std::vector<std::string> cols{
        "k",          "lambda",           "accumulator", "f_gap",    "grad_norm_sq",
        "hpe_lhs",    "hpe_rhs",          "large_step_value", "lyapunov", "probe_count",
        "coupling",   "eps",              "displacement_sq", "v_dist_sq", "recurrence_residual"};
    return cols;
}

inline const std::vector<std::string>& flow_scalar_columns()
{
    static const std::vector<std::string> cols{"t",     "a",         "lambda", "f_gap",
                                               "grad_norm_sq", "lyapunov", "algebraic_residual", "a_dot",
                                               "s",     "dissipation_rate"};
    return cols;
}

inline std::string format_real(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace detail {

inline void append_vector_header(std::ostream& out, const std::string& prefix, Eigen::Index d)
{
    for (Eigen::Index i = 0; i < d; ++i) out << ',' << prefix << '_' << i;
}

inline void append_vector(std::ostream& out, const Vector& v)
{
    for (Eigen::Index i = 0; i < v.size(); ++i) out << ',' << format_real(v(i));
}

inline std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline double parse_real(const std::string& s, int row, const std::string& col)
{
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size())
        throw InvalidArgument("csv: row " + std::to_string(row) + " column " + col + ": '" + s + "' is not a number");
    return v;
}

} // namespace detail

inline void write_discrete_csv(std::ostream& out, const std::vector<IterateRecord>& recs)
{
    const Eigen::Index d = recs.empty() ? 0 : recs.front().x.size();
    const auto& cols = discrete_scalar_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    detail::append_vector_header(out, "x", d);
    detail::append_vector_header(out, "v", d);
    detail::append_vector_header(out, "tv", d);
    detail::append_vector_header(out, "w", d);
    out << '\n';
    for (const auto& r : recs) {
        out << r.k;
        for (double v : {r.lambda, r.accumulator, r.f_gap, r.grad_norm_sq, r.hpe_lhs, r.hpe_rhs, r.large_step,
                         r.lyapunov})
            out << ',' << format_real(v);
        out << ',' << r.probes;
        for (double v : {r.coupling, r.eps, r.displacement_sq, r.v_dist_sq, r.recurrence_residual})
            out << ',' << format_real(v);
        detail::append_vector(out, r.x);
        detail::append_vector(out, r.v);
        detail::append_vector(out, r.tilde_v);
        detail::append_vector(out, r.w);
        out << '\n';
    }
}

inline void write_flow_csv(std::ostream& out, const std::vector<FlowSample>& samples)
{
    const Eigen::Index d = samples.empty() ? 0 : samples.front().x.size();
    const auto& cols = flow_scalar_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    detail::append_vector_header(out, "x", d);
    detail::append_vector_header(out, "v", d);
    out << '\n';
    for (const auto& s : samples) {
        out << format_real(s.t);
        for (double v : {s.a, s.lambda, s.f_gap, s.grad_norm_sq, s.lyapunov, s.algebraic_residual, s.a_dot, s.s,
                         s.dissipation_rate})
            out << ',' << format_real(v);
        detail::append_vector(out, s.x);
        detail::append_vector(out, s.v);
        out << '\n';
    }
}

/// Parsed CSV: header plus numeric rows.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    int column(const std::string& name) const
    {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        return -1;
    }
    int require(const std::string& name) const
    {
        const int c = column(name);
        if (c < 0) throw InvalidArgument("csv: missing column '" + name + "'");
        return c;
    }
    std::vector<double> values(const std::string& name) const
    {
        const int c = require(name);
        std::vector<double> out;
        out.reserve(rows.size());
        for (const auto& r : rows) out.push_back(r[c]);
        return out;
    }
    /// Number of columns named prefix_0, prefix_1, ...
    Eigen::Index vector_width(const std::string& prefix) const
    {
        Eigen::Index d = 0;
        while (column(prefix + "_" + std::to_string(d)) >= 0) ++d;
        return d;
    }
    Vector vector_at(std::size_t row, const std::string& prefix, Eigen::Index d) const
    {
        const int c0 = require(prefix + "_0");
        Vector v(d);
        for (Eigen::Index i = 0; i < d; ++i) v(i) = rows[row][c0 + i];
        return v;
    }
};

inline Table read_table(std::istream& in)
{
    Table t;
    std::string line;
    if (!std::getline(in, line)) throw InvalidArgument("csv: empty input");
    t.header = detail::split_csv_line(line);
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != t.header.size())
            throw InvalidArgument("csv: row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                                  " cells, header has " + std::to_string(t.header.size()));
        std::vector<double> r;
        r.reserve(cells.size());
        for (std::size_t i = 0; i < cells.size(); ++i) r.push_back(detail::parse_real(cells[i], row, t.header[i]));
        t.rows.push_back(std::move(r));
    }
    return t;
}

inline Table read_table(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    return read_table(in);
}

inline bool is_discrete_table(const Table& t) { return t.column("k") == 0; }
inline bool is_flow_table(const Table& t) { return t.column("t") == 0; }

inline std::vector<IterateRecord> records_from_table(const Table& t)
{
    for (const auto& c : discrete_scalar_columns()) t.require(c);
    const Eigen::Index d = t.vector_width("x");
    if (d == 0 || t.vector_width("v") != d || t.vector_width("tv") != d || t.vector_width("w") != d)
        throw InvalidArgument("csv: point columns x_i, v_i, tv_i, w_i are missing or uneven");
    const int ck = t.require("k"), cl = t.require("lambda"), ca = t.require("accumulator"), cg = t.require("f_gap"),
              cn = t.require("grad_norm_sq"), chl = t.require("hpe_lhs"), chr = t.require("hpe_rhs"),
              cm = t.require("large_step_value"), ce = t.require("lyapunov"), cp = t.require("probe_count"),
              cc = t.require("coupling"), cps = t.require("eps"), cd = t.require("displacement_sq"),
              cv = t.require("v_dist_sq"), cr = t.require("recurrence_residual");
    std::vector<IterateRecord> out;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& row = t.rows[i];
        IterateRecord r;
        r.k = static_cast<int>(row[ck]);
        r.lambda = row[cl];
        r.accumulator = row[ca];
        r.f_gap = row[cg];
        r.grad_norm_sq = row[cn];
        r.hpe_lhs = row[chl];
        r.hpe_rhs = row[chr];
        r.large_step = row[cm];
        r.lyapunov = row[ce];
        r.probes = static_cast<int>(row[cp]);
        r.coupling = row[cc];
        r.eps = row[cps];
        r.displacement_sq = row[cd];
        r.v_dist_sq = row[cv];
        r.recurrence_residual = row[cr];
        r.x = t.vector_at(i, "x", d);
        r.v = t.vector_at(i, "v", d);
        r.tilde_v = t.vector_at(i, "tv", d);
        r.w = t.vector_at(i, "w", d);
        out.push_back(std::move(r));
    }
    return out;
}

inline std::vector<FlowSample> samples_from_table(const Table& t)
{
    for (const auto& c : flow_scalar_columns()) t.require(c);
    const Eigen::Index d = t.vector_width("x");
    if (d == 0 || t.vector_width("v") != d) throw InvalidArgument("csv: point columns x_i, v_i are missing or uneven");
    std::vector<FlowSample> out;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& row = t.rows[i];
        FlowSample s;
        s.t = row[t.require("t")];
        s.a = row[t.require("a")];
        s.lambda = row[t.require("lambda")];
        s.f_gap = row[t.require("f_gap")];
        s.grad_norm_sq = row[t.require("grad_norm_sq")];
        s.lyapunov = row[t.require("lyapunov")];
        s.algebraic_residual = row[t.require("algebraic_residual")];
        s.a_dot = row[t.require("a_dot")];
        s.s = row[t.require("s")];
        s.dissipation_rate = row[t.require("dissipation_rate")];
        s.x = t.vector_at(i, "x", d);
        s.v = t.vector_at(i, "v", d);
        out.push_back(std::move(s));
    }
    return out;
}

/// Writes `text` to `path`, creating parent directories.
inline void write_file(const std::filesystem::path& path, const std::string& text)
{
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
    if (!out) throw Error("write failed: " + path.string());
}

inline json read_json(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw InvalidArgument(path.string() + ": " + e.what());
    }
}

/// JSON number, or null for NaN and infinities.
inline json real(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json to_json(const RateFit& f)
{
    return {{"slope", f.slope},
            {"intercept", f.intercept},
            {"r_squared", f.r_squared},
            {"window", {f.window_min, f.window_max}},
            {"points", f.points}};
}

inline json to_json(const AuditReport& r)
{
    json checks = json::array();
    for (const auto& c : r.checks)
        checks.push_back({{"name", c.name},
                          {"pass", c.pass},
                          {"checked", c.checked},
                          {"violations", c.violations},
                          {"first_violation", c.first_violation},
                          {"worst", real(c.worst)}});
    return {{"pass", r.pass()}, {"checks", checks}};
}

} // namespace hoa::harness
