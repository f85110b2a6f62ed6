#pragma once

// Invariant audit of a trace on disk, driven by its JSON summary.

#include "hoa/harness/compare.hpp"
#include "hoa/harness/experiment.hpp"

#include <filesystem>

namespace hoa::harness {

struct TraceAudit {
    std::string kind; ///< discrete | flow
    AuditReport report;
};

namespace detail {

inline ProblemSpec problem_from_summary(const json& s)
{
    const json& p = require_field(s, {"config", "problem"}, "trace");
    ProblemSpec spec;
    spec.name = p.at("name").get<std::string>();
    spec.seed = p.at("seed").get<std::uint64_t>();
    spec.init = p.at("init").get<std::string>();
    spec.init_scale = p.at("init_scale").get<double>();
    for (const auto& [k, v] : p.at("params").items()) spec.params[k] = v.get<double>();
    return spec;
}

} // namespace detail

/// Audits the trace at `trace` using run parameters from `summary`. With
/// `rebuild_problem`, the problem is regenerated from the recorded config so
/// tensor traces can also be checked for w = grad Phi(x).
inline TraceAudit check_trace(const std::filesystem::path& trace, const std::filesystem::path& summary,
                              bool rebuild_problem = true)
{
    const json s = read_json(summary);
    const Table table = read_table(trace);
    const std::string kind = detail::require_field(s, {"kind"}, summary.string()).get<std::string>();
    TraceAudit out;
    out.kind = kind;

    if (kind == "discrete") {
        if (!is_discrete_table(table)) throw InvalidArgument("check: " + trace.string() + " is not a discrete trace");
        const json& r = detail::require_field(s, {"resolved"}, summary.string());
        const std::string alg = detail::require_field(s, {"config", "algorithm", "name"}, summary.string());
        AuditSpec spec;
        spec.variant = r.at("variant").get<std::string>() == "caf1" ? Variant::caf1 : Variant::caf2;
        spec.window.p = detail::require_field(s, {"config", "algorithm", "p"}, summary.string()).get<int>();
        spec.window.theta = r.at("theta").get<double>();
        spec.window.theta_low = r.at("theta_low").get<double>();
        spec.window.theta_high = r.at("theta_high").get<double>();
        spec.sigma = r.at("sigma").get<double>();
        spec.tensor = is_tensor(parse_algorithm(alg));
        std::shared_ptr<Problem> problem;
        if (rebuild_problem) {
            problem = build_problem(detail::problem_from_summary(s));
            spec.problem = problem.get();
        }
        out.report = audit_trace(records_from_table(table), spec);
    } else if (kind == "flow") {
        if (!is_flow_table(table)) throw InvalidArgument("check: " + trace.string() + " is not a flow trace");
        const json& f = detail::require_field(s, {"config", "flow"}, summary.string());
        FlowConfig cfg;
        cfg.p = f.at("p").get<int>();
        cfg.theta = f.at("theta").get<double>();
        cfg.c = f.at("c").get<double>();
        cfg.t_end = f.at("t_end").get<double>();
        out.report = audit_flow(samples_from_table(table), cfg, flow_audit_options(cfg));
    } else {
        throw InvalidArgument("check: unknown summary kind '" + kind + "'");
    }
    return out;
}

} // namespace hoa::harness
