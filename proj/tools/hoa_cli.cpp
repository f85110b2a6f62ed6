// hoa: command-line front end for discrete runs, flow integrations, suites,
// rate fits and trace audits.
//
// Exit codes: 0 success, 2 invariant audit failed, 1 error.

#include "hoa/harness/audit.hpp"
#include "hoa/harness/compare.hpp"
#include "hoa/harness/config.hpp"
#include "hoa/harness/experiment.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace hoa;
using namespace hoa::harness;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_error = 1;
constexpr int exit_audit = 2;

struct CommonOptions {
    std::string config;
    std::string out;
    std::optional<long> seed;
    std::vector<std::string> overrides;
};

void add_common(CLI::App* app, CommonOptions& o)
{
    app->add_option("--config,-c", o.config, "INI experiment file")->check(CLI::ExistingFile);
    app->add_option("--out,-o", o.out, "output directory (overrides output.dir)");
    app->add_option("--seed", o.seed, "problem seed (overrides problem.seed)");
    app->add_option("--set", o.overrides, "override a config value, section.key=value")->take_all();
}

Config load_config(const CommonOptions& o)
{
    Config c = o.config.empty() ? Config() : Config::load(o.config);
    for (const auto& s : o.overrides) c.apply_override(s);
    if (o.seed) c.set("problem", "seed", std::to_string(*o.seed));
    if (!o.out.empty()) c.set("output", "dir", o.out);
    return c;
}

void print_audit(const AuditReport& r)
{
    for (const auto& c : r.checks) {
        std::printf("  %-24s %s  checked=%d violations=%d", c.name.c_str(), c.pass ? "PASS" : "FAIL", c.checked,
                    c.violations);
        if (!c.pass) std::printf(" first=%d worst=%.3g", c.first_violation, c.worst);
        std::printf("\n");
    }
}

int report(const Outcome& o)
{
    const json& s = o.summary;
    std::printf("%s: %s", s["name"].get<std::string>().c_str(), s["status"].get<std::string>().c_str());
    if (!o.ok) {
        if (s.contains("failure")) std::printf(" (%s)", s["failure"]["message"].get<std::string>().c_str());
        std::printf("\n");
        return exit_error;
    }
    const json& fit = s["rates"]["f_gap"];
    std::printf("  final f_gap=%s  gap slope=%s  audit=%s\n", s["final"]["f_gap"].dump().c_str(),
                fit.contains("slope") ? fit["slope"].dump().c_str() : "n/a", o.audit_pass ? "pass" : "FAIL");
    std::printf("  wrote %s and %s\n", o.trace.string().c_str(), o.summary_path.string().c_str());
    return o.audit_pass ? exit_ok : exit_audit;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Closed-loop accelerated higher-order methods: runs, flows, suites and audits"};
    app.require_subcommand(1);

    CommonOptions run_opt;
    std::string run_algorithm, run_problem;
    std::optional<int> run_p, run_max_iter;
    auto* run_cmd = app.add_subcommand("run", "one discrete experiment");
    add_common(run_cmd, run_opt);
    run_cmd->add_option("--algorithm,-a", run_algorithm, "caf1 | caf2 | tensor1 | tensor2");
    run_cmd->add_option("--problem", run_problem, "quadratic | lse | logistic | quartic");
    run_cmd->add_option("--p", run_p, "order p");
    run_cmd->add_option("--max-iter", run_max_iter, "iteration cap");

    CommonOptions flow_opt;
    std::optional<int> flow_p;
    std::optional<double> flow_theta, flow_t_end;
    std::string flow_problem;
    auto* flow_cmd = app.add_subcommand("flow", "integrate the closed-loop system");
    add_common(flow_cmd, flow_opt);
    flow_cmd->add_option("--problem", flow_problem, "problem name");
    flow_cmd->add_option("--p", flow_p, "order p");
    flow_cmd->add_option("--theta", flow_theta, "feedback constant theta");
    flow_cmd->add_option("--t-end", flow_t_end, "final time");

    CommonOptions suite_opt;
    std::optional<int> suite_jobs;
    auto* suite_cmd = app.add_subcommand("suite", "run the (order x algorithm x problem) matrix");
    add_common(suite_cmd, suite_opt);
    suite_cmd->add_option("--jobs,-j", suite_jobs, "runs in parallel")->check(CLI::PositiveNumber);

    std::string rates_trace, rates_column = "f_gap";
    std::optional<double> rates_from, rates_to;
    bool rates_running_min = false;
    int rates_min_points = 10;
    auto* rates_cmd = app.add_subcommand("rates", "fit a log-log slope from a trace");
    rates_cmd->add_option("trace", rates_trace, "CSV trace")->required()->check(CLI::ExistingFile);
    rates_cmd->add_option("--column", rates_column, "value column (default f_gap)");
    rates_cmd->add_option("--from", rates_from, "window start (default: drop first 20% / last decade for flows)");
    rates_cmd->add_option("--to", rates_to, "window end (default: last index)");
    rates_cmd->add_flag("--running-min", rates_running_min, "fit the running minimum of the column");
    rates_cmd->add_option("--min-points", rates_min_points, "minimum points in the window");

    std::string check_trace_path, check_summary;
    bool check_no_problem = false;
    auto* check_cmd = app.add_subcommand("check", "audit the invariants of a trace");
    check_cmd->add_option("trace", check_trace_path, "CSV trace")->required()->check(CLI::ExistingFile);
    check_cmd->add_option("--summary", check_summary, "JSON summary (default: trace with .json extension)");
    check_cmd->add_flag("--no-problem", check_no_problem, "skip checks that regenerate the problem");

    std::vector<std::string> compare_inputs;
    std::string compare_out;
    auto* compare_cmd = app.add_subcommand("compare", "aggregate table over run summaries");
    compare_cmd->add_option("summaries", compare_inputs, "JSON summaries")->required()->check(CLI::ExistingFile);
    compare_cmd->add_option("--out", compare_out, "also write the table as CSV");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) {
            Config c = load_config(run_opt);
            if (!run_algorithm.empty()) c.set("algorithm", "name", run_algorithm);
            if (!run_problem.empty()) c.set("problem", "name", run_problem);
            if (run_p) c.set("algorithm", "p", std::to_string(*run_p));
            if (run_max_iter) c.set("tolerances", "max_iter", std::to_string(*run_max_iter));
            const Outcome o = run_experiment(read_experiment(c));
            const int code = report(o);
            if (code == exit_audit) {
                for (const auto& ch : o.summary["audit"]["checks"])
                    if (!ch["pass"].get<bool>())
                        std::printf("  failed check: %s\n", ch["name"].get<std::string>().c_str());
            }
            return code;
        }
        if (*flow_cmd) {
            Config c = load_config(flow_opt);
            if (!flow_problem.empty()) c.set("problem", "name", flow_problem);
            if (flow_p) c.set("flow", "p", std::to_string(*flow_p));
            if (flow_theta) c.set("flow", "theta", format_real(*flow_theta));
            if (flow_t_end) c.set("flow", "t_end", format_real(*flow_t_end));
            const Outcome o = run_flow_experiment(read_flow_experiment(c));
            const json& s = o.summary;
            std::printf("%s: %s", s["name"].get<std::string>().c_str(), s["status"].get<std::string>().c_str());
            if (!o.ok) {
                std::printf(" (%s)\n", s["failure"]["message"].get<std::string>().c_str());
                return exit_error;
            }
            const json& fit = s["rates"]["f_gap"];
            std::printf("  stop_time=%s early_stop=%s  gap slope=%s  audit=%s\n", s["integration"]["stop_time"].dump().c_str(),
                        s["integration"]["early_stop"].dump().c_str(),
                        fit.contains("slope") ? fit["slope"].dump().c_str() : "n/a", o.audit_pass ? "pass" : "FAIL");
            std::printf("  wrote %s and %s\n", o.trace.string().c_str(), o.summary_path.string().c_str());
            return o.audit_pass ? exit_ok : exit_audit;
        }
        if (*suite_cmd) {
            Config c = load_config(suite_opt);
            if (suite_jobs) c.set("suite", "jobs", std::to_string(*suite_jobs));
            const SuiteConfig suite = read_suite(c);
            const std::vector<Outcome> outcomes = run_suite(suite);
            std::vector<json> summaries;
            bool failed = false, audit_failed = false;
            for (const auto& o : outcomes) {
                summaries.push_back(o.summary);
                failed |= !o.ok;
                audit_failed |= o.ok && !o.audit_pass;
            }
            const AggregateTable table = compare(summaries);
            write_file(suite.base.out_dir / "aggregate.csv", table.to_csv());
            write_file(suite.base.out_dir / "aggregate.txt", table.to_text());
            std::cout << table.to_text();
            std::printf("%zu runs written to %s\n", outcomes.size(), suite.base.out_dir.string().c_str());
            return failed ? exit_error : audit_failed ? exit_audit : exit_ok;
        }
        if (*rates_cmd) {
            const Table t = read_table(fs::path(rates_trace));
            const bool flow = is_flow_table(t);
            const std::string index_col = flow ? "t" : "k";
            std::vector<double> index = t.values(index_col), value = t.values(rates_column);
            std::vector<double> xi, yi;
            for (std::size_t i = 0; i < index.size(); ++i)
                if (index[i] > 0.0) {
                    xi.push_back(index[i]);
                    yi.push_back(value[i]);
                }
            if (rates_running_min) yi = running_min(yi);
            if (xi.empty()) throw InvalidArgument("rates: trace has no rows with positive " + index_col);
            const double last = xi.back();
            const double from = rates_from.value_or(flow ? 0.1 * last : std::max(1.0, std::floor(0.2 * last)));
            const double to = rates_to.value_or(last);
            const RateFit fit = fit_rate(xi, yi, from, to, rates_min_points);
            json out = to_json(fit);
            out["column"] = rates_column;
            out["running_min"] = rates_running_min;
            std::cout << out.dump(2) << "\n";
            return exit_ok;
        }
        if (*check_cmd) {
            const fs::path trace(check_trace_path);
            const fs::path summary = check_summary.empty() ? fs::path(trace).replace_extension(".json") : fs::path(check_summary);
            const TraceAudit a = check_trace(trace, summary, !check_no_problem);
            std::printf("%s trace %s: %s\n", a.kind.c_str(), trace.string().c_str(), a.report.pass() ? "PASS" : "FAIL");
            print_audit(a.report);
            return a.report.pass() ? exit_ok : exit_audit;
        }
        if (*compare_cmd) {
            std::vector<json> summaries;
            for (const auto& p : compare_inputs) summaries.push_back(read_json(p));
            const AggregateTable table = compare(summaries);
            if (!compare_out.empty()) write_file(compare_out, table.to_csv());
            std::cout << table.to_text();
            return exit_ok;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_error;
    }
    return exit_error;
}
