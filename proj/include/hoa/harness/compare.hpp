#pragma once

// Aggregate table over discrete run summaries.

#include "hoa/harness/io.hpp"

#include <algorithm>
#include <sstream>
#include <string>
#include <vector>

namespace hoa::harness {

struct AggregateTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::string to_csv() const
    {
        std::ostringstream out;
        auto line = [&](const std::vector<std::string>& cells) {
            for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
            out << '\n';
        };
        line(header);
        for (const auto& r : rows) line(r);
        return out.str();
    }

    std::string to_text() const
    {
        std::vector<std::size_t> width(header.size());
        for (std::size_t i = 0; i < header.size(); ++i) width[i] = header[i].size();
        for (const auto& r : rows)
            for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
        std::ostringstream out;
        auto line = [&](const std::vector<std::string>& cells) {
            for (std::size_t i = 0; i < cells.size(); ++i) {
                out << (i ? "  " : "") << cells[i];
                if (i + 1 < cells.size()) out << std::string(width[i] - cells[i].size(), ' ');
            }
            out << '\n';
        };
        line(header);
        for (const auto& r : rows) line(r);
        return out.str();
    }
};

namespace detail {

inline const json& require_field(const json& j, const std::vector<std::string>& path, const std::string& who)
{
    const json* cur = &j;
    std::string dotted;
    for (const auto& key : path) {
        dotted += (dotted.empty() ? "" : ".") + key;
        if (!cur->is_object() || !cur->contains(key))
            throw InvalidArgument("compare: summary '" + who + "' lacks field " + dotted);
        cur = &(*cur)[key];
    }
    return *cur;
}

inline std::string cell(const json& j)
{
    if (j.is_null()) return "";
    if (j.is_string()) return j.get<std::string>();
    if (j.is_boolean()) return j.get<bool>() ? "true" : "false";
    if (j.is_number_integer()) return std::to_string(j.get<long long>());
    if (j.is_number()) return format_real(j.get<double>());
    return j.dump();
}

inline json slope_of(const json& fit) { return fit.is_object() && fit.contains("slope") ? fit["slope"] : json(nullptr); }

} // namespace detail

/// One row per summary. A tensor1/tensor2 pair on the same problem and order
/// gets the difference of their f_gap slopes in `slope_diff_tensor`.
inline AggregateTable compare(const std::vector<json>& summaries)
{
    if (summaries.empty()) throw InvalidArgument("compare: no summaries given");
    AggregateTable t;
    t.header = {"name",       "problem",        "algorithm",   "p",           "status",
                "termination", "iterations",    "final_f_gap", "final_grad_norm_sq", "gap_slope",
                "grad_slope", "total_probes",   "max_probes",  "audit_pass",  "slope_diff_tensor"};

    struct Key {
        std::string problem, algorithm;
        long long p;
        json gap_slope;
    };
    std::vector<Key> keys;
    for (const auto& s : summaries) {
        const std::string who = s.is_object() && s.contains("name") ? detail::cell(s["name"]) : "?";
        const json& version = detail::require_field(s, {"schema_version"}, who);
        if (!version.is_number_integer() || version.get<int>() != 1)
            throw InvalidArgument("compare: summary '" + who + "' has unsupported schema_version");
        if (detail::require_field(s, {"kind"}, who) != "discrete")
            throw InvalidArgument("compare: summary '" + who + "' is not a discrete run");
        const std::string problem = detail::require_field(s, {"config", "problem", "name"}, who).get<std::string>();
        const std::string alg = detail::require_field(s, {"config", "algorithm", "name"}, who).get<std::string>();
        const long long p = detail::require_field(s, {"config", "algorithm", "p"}, who).get<long long>();
        const std::string status = detail::require_field(s, {"status"}, who).get<std::string>();

        std::vector<std::string> row{who, problem, alg, std::to_string(p), status};
        json gap_slope = nullptr;
        if (status == "ok") {
            gap_slope = detail::slope_of(detail::require_field(s, {"rates", "f_gap"}, who));
            row.push_back(detail::cell(detail::require_field(s, {"termination"}, who)));
            row.push_back(detail::cell(detail::require_field(s, {"iterations"}, who)));
            row.push_back(detail::cell(detail::require_field(s, {"final", "f_gap"}, who)));
            row.push_back(detail::cell(detail::require_field(s, {"final", "grad_norm_sq"}, who)));
            row.push_back(detail::cell(gap_slope));
            row.push_back(detail::cell(detail::slope_of(detail::require_field(s, {"rates", "grad_norm_sq_running_min"}, who))));
            row.push_back(detail::cell(detail::require_field(s, {"probes", "total"}, who)));
            row.push_back(detail::cell(detail::require_field(s, {"probes", "max_per_iteration"}, who)));
            row.push_back(detail::cell(detail::require_field(s, {"audit", "pass"}, who)));
        } else {
            row.resize(t.header.size() - 1);
        }
        row.emplace_back();
        t.rows.push_back(std::move(row));
        keys.push_back({problem, alg, p, gap_slope});
    }

    const std::size_t diff_col = t.header.size() - 1;
    for (std::size_t i = 0; i < keys.size(); ++i) {
        if (keys[i].algorithm != "tensor1" || !keys[i].gap_slope.is_number()) continue;
        for (std::size_t j = 0; j < keys.size(); ++j) {
            if (keys[j].algorithm != "tensor2" || keys[j].problem != keys[i].problem || keys[j].p != keys[i].p ||
                !keys[j].gap_slope.is_number())
                continue;
            const double d = keys[i].gap_slope.get<double>() - keys[j].gap_slope.get<double>();
            t.rows[i][diff_col] = format_real(d);
            t.rows[j][diff_col] = format_real(-d);
        }
    }
    return t;
}

} // namespace hoa::harness
