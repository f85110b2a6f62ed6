#pragma once

#include "hoa/harness/config.hpp"
#include "hoa/harness/io.hpp"
#include "hoa/problems.hpp"
#include "hoa/rates.hpp"

#include <boost/version.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <thread>
#include <vector>

namespace hoa::harness {

inline constexpr int summary_schema_version = 1;
inline constexpr const char* tool_version = "1.0.0";

inline std::shared_ptr<Problem> build_problem(const ProblemSpec& spec)
{
    return make_problem(spec.name, spec.params, spec.seed);
}

/// Starting point: the origin, or a Gaussian point drawn from the problem seed.
inline Vector initial_point(const Problem& problem, const ProblemSpec& spec)
{
    if (spec.init == "zeros") return Vector::Zero(problem.dimension());
    std::mt19937_64 rng(spec.seed ^ 0x9e3779b97f4a7c15ULL);
    return hoa::detail::gaussian_vector(problem.dimension(), rng, spec.init_scale);
}

inline json versions()
{
    std::ostringstream eigen;
    eigen << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION << '.' << EIGEN_MINOR_VERSION;
    std::ostringstream boost;
    boost << BOOST_VERSION / 100000 << '.' << BOOST_VERSION / 100 % 1000 << '.' << BOOST_VERSION % 100;
    std::ostringstream njson;
    njson << NLOHMANN_JSON_VERSION_MAJOR << '.' << NLOHMANN_JSON_VERSION_MINOR << '.' << NLOHMANN_JSON_VERSION_PATCH;
    return {{"tool", tool_version}, {"eigen", eigen.str()}, {"boost", boost.str()}, {"nlohmann_json", njson.str()},
            {"compiler", __VERSION__}};
}

inline json problem_json(const ProblemSpec& spec)
{
    json params = json::object();
    for (const auto& [k, v] : spec.params) params[k] = v;
    return {{"name", spec.name}, {"seed", spec.seed}, {"init", spec.init}, {"init_scale", spec.init_scale},
            {"params", params}};
}

inline json config_json(const ExperimentConfig& e)
{
    const SolverConfig& s = e.solver;
    return {{"problem", problem_json(e.problem)},
            {"algorithm", {{"name", to_string(e.algorithm)}, {"p", s.p}, {"branch", to_string(s.branch)}}},
            {"parameters",
             {{"ell", s.ell},
              {"sigma_hat", s.sigma_hat},
              {"sigma_low", s.sigma_low},
              {"sigma_up", s.sigma_up},
              {"theta", s.theta},
              {"window_ratio", s.window_ratio},
              {"sigma", s.sigma}}},
            {"tolerances",
             {{"tol_grad", s.tol_grad},
              {"max_iter", s.max_iter},
              {"sub_tol", s.sub_tol},
              {"sub_max_iter", s.sub_max_iter},
              {"max_doublings", s.bisect.max_doublings},
              {"max_probes", s.bisect.max_probes}}},
            {"rates", {{"drop_fraction", e.rates.drop_fraction}, {"min_points", e.rates.min_points}}}};
}

inline json flow_config_json(const FlowExperimentConfig& e)
{
    const FlowConfig& f = e.flow;
    return {{"problem", problem_json(e.problem)},
            {"flow",
             {{"p", f.p},
              {"theta", f.theta},
              {"c", f.c},
              {"t_end", f.t_end},
              {"abs_tol", f.abs_tol},
              {"rel_tol", f.rel_tol},
              {"sample_stride", f.sample_stride},
              {"grad_floor", f.grad_floor},
              {"v0", e.v0}}},
            {"rates", {{"drop_fraction", e.rates.drop_fraction}, {"min_points", e.rates.min_points}}}};
}

/// Fits log value against log index on [from, to], cut at the first nonpositive value.
inline json fit_json(const std::vector<double>& index, const std::vector<double>& value, double from, double to,
                     int min_points)
{
    const double end = std::min(to, positive_prefix_end(index, value, from));
    try {
        if (!(end >= from)) throw InvalidArgument("fit_rate: no positive values in the window");
        return to_json(fit_rate(index, value, from, end, min_points));
    } catch (const InvalidArgument& e) {
        return {{"error", e.what()}};
    }
}

/// Discrete rate fits: f_gap and the running minimum of grad_norm_sq against
/// k, after dropping the first `drop_fraction` of the iterations.
inline json discrete_rates(const std::vector<IterateRecord>& recs, const RateOptions& opt)
{
    std::vector<double> k, gap, grad;
    for (const auto& r : recs) {
        if (r.k < 1) continue;
        k.push_back(r.k);
        gap.push_back(r.f_gap);
        grad.push_back(r.grad_norm_sq);
    }
    grad = running_min(grad);
    const double last = k.empty() ? 0.0 : k.back();
    const double from = std::max(1.0, std::floor(opt.drop_fraction * last));
    return {{"f_gap", fit_json(k, gap, from, last, opt.min_points)},
            {"grad_norm_sq_running_min", fit_json(k, grad, from, last, opt.min_points)}};
}

/// Flow rate fits over the last decade of time actually integrated.
inline json flow_rates(const std::vector<FlowSample>& samples, const RateOptions& opt)
{
    std::vector<double> t, gap, grad;
    for (const auto& s : samples) {
        if (!(s.t > 0.0)) continue;
        t.push_back(s.t);
        gap.push_back(s.f_gap);
        grad.push_back(s.grad_norm_sq);
    }
    grad = running_min(grad);
    const double last = t.empty() ? 0.0 : t.back();
    return {{"f_gap", fit_json(t, gap, 0.1 * last, last, opt.min_points)},
            {"grad_norm_sq_running_min", fit_json(t, grad, 0.1 * last, last, opt.min_points)}};
}

struct Outcome {
    json summary;
    bool ok = false;         ///< ran to completion
    bool audit_pass = false; ///< invariants held
    std::filesystem::path trace;
    std::filesystem::path summary_path;
};

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline json failure_json(const std::string& stage, const std::exception& e)
{
    return {{"stage", stage}, {"message", e.what()}};
}

inline Outcome finish(json summary, const std::filesystem::path& dir, const std::string& stem, bool ok, bool audit_pass)
{
    Outcome out;
    out.summary_path = dir / (stem + ".json");
    out.trace = dir / (stem + ".csv");
    out.ok = ok;
    out.audit_pass = audit_pass;
    write_file(out.summary_path, summary.dump(2) + "\n");
    out.summary = std::move(summary);
    return out;
}

} // namespace detail

/// Runs one discrete experiment, writes <stem>.csv and <stem>.json to the
/// output directory. Solver errors are recorded in the summary.
inline Outcome run_experiment(const ExperimentConfig& cfg, RunResult* result_out = nullptr)
{
    const auto t0 = std::chrono::steady_clock::now();
    const std::string stem = cfg.stem();
    json s;
    s["schema_version"] = summary_schema_version;
    s["kind"] = "discrete";
    s["name"] = stem;
    s["versions"] = versions();
    s["config"] = config_json(cfg);

    std::shared_ptr<Problem> problem;
    RunResult res;
    std::string stage = "problem";
    try {
        problem = build_problem(cfg.problem);
        const Vector x0 = initial_point(*problem, cfg.problem);
        stage = "config";
        resolve(cfg.algorithm, cfg.solver, *problem);
        stage = "solver";
        res = run(cfg.algorithm, *problem, cfg.solver, x0);
    } catch (const Error& e) {
        s["status"] = "failed";
        s["failure"] = detail::failure_json(stage, e);
        s["runtime_seconds"] = detail::seconds_since(t0);
        return detail::finish(std::move(s), cfg.out_dir, stem, false, false);
    }

    std::ostringstream csv;
    write_discrete_csv(csv, res.records);
    write_file(cfg.out_dir / (stem + ".csv"), csv.str());

    const RunParameters& rp = res.params;
    const AuditReport audit = audit_trace(res.records, audit_spec(res, problem.get()));
    const IterateRecord& last = res.records.back();
    int max_probes = 0;
    for (const auto& r : res.records) max_probes = std::max(max_probes, r.probes);

    s["status"] = "ok";
    s["problem"] = {{"dimension", problem->dimension()}, {"lipschitz", real(problem->lipschitz(cfg.solver.p))}};
    s["resolved"] = {{"theta", rp.window.theta},
                     {"theta_low", rp.window.theta_low},
                     {"theta_high", rp.window.theta_high},
                     {"sigma", rp.sigma},
                     {"ell", rp.ell},
                     {"variant", to_string(rp.variant)},
                     {"theta_in_unit_interval", rp.window.theta > 0.0 && rp.window.theta < 1.0}};
    s["termination"] = to_string(res.termination);
    s["iterations"] = last.k;
    s["initial"] = {{"f_gap", real(res.records.front().f_gap)},
                    {"grad_norm_sq", real(res.records.front().grad_norm_sq)},
                    {"lyapunov", real(res.records.front().lyapunov)}};
    s["final"] = {{"f_gap", real(last.f_gap)}, {"grad_norm_sq", real(last.grad_norm_sq)},
                  {"lyapunov", real(last.lyapunov)}, {"accumulator", real(last.accumulator)}};
    s["probes"] = {{"total", res.total_probes}, {"max_per_iteration", max_probes}};
    s["subproblem"] = {{"solves", res.subproblem_solves},
                       {"tol", cfg.solver.sub_tol},
                       {"max_inexactness_ratio", res.max_inexactness_ratio}};
    s["rates"] = discrete_rates(res.records, cfg.rates);
    s["audit"] = to_json(audit);
    s["files"] = {{"trace", stem + ".csv"}};
    s["runtime_seconds"] = detail::seconds_since(t0);
    if (result_out) *result_out = std::move(res);
    return detail::finish(std::move(s), cfg.out_dir, stem, true, audit.pass());
}

inline FlowAuditOptions flow_audit_options(const FlowConfig& f)
{
    FlowAuditOptions opt;
    opt.residual_tol = f.p == 1 ? 1e-12 : 1e-6;
    return opt;
}

/// Integrates one trajectory, writes <stem>.csv and <stem>.json.
inline Outcome run_flow_experiment(const FlowExperimentConfig& cfg, FlowResult* result_out = nullptr)
{
    const auto t0 = std::chrono::steady_clock::now();
    const std::string stem = cfg.stem();
    json s;
    s["schema_version"] = summary_schema_version;
    s["kind"] = "flow";
    s["name"] = stem;
    s["versions"] = versions();
    s["config"] = flow_config_json(cfg);

    std::shared_ptr<Problem> problem;
    FlowResult res;
    std::string stage = "problem";
    try {
        problem = build_problem(cfg.problem);
        const Vector x0 = initial_point(*problem, cfg.problem);
        stage = "integration";
        const Vector v0 = cfg.v0 == "x0" ? x0 : default_v0(x0, *problem, cfg.flow);
        res = integrate(*problem, x0, v0, cfg.flow);
    } catch (const Error& e) {
        s["status"] = "failed";
        s["failure"] = detail::failure_json(stage, e);
        s["runtime_seconds"] = detail::seconds_since(t0);
        return detail::finish(std::move(s), cfg.out_dir, stem, false, false);
    }

    std::ostringstream csv;
    write_flow_csv(csv, res.samples);
    write_file(cfg.out_dir / (stem + ".csv"), csv.str());

    const AuditReport audit = audit_flow(res.samples, cfg.flow, flow_audit_options(cfg.flow));
    const bool ok = res.status == OdeStatus::reached || res.status == OdeStatus::stopped;
    double max_residual = 0.0;
    for (const auto& x : res.samples) max_residual = std::max(max_residual, x.algebraic_residual);
    const FlowSample& last = res.samples.back();

    s["status"] = ok ? "ok" : "failed";
    if (!ok) s["failure"] = {{"stage", "integration"}, {"message", std::string("integrator: ") + to_string(res.status)}};
    s["problem"] = {{"dimension", problem->dimension()}};
    s["integration"] = {{"status", to_string(res.status)},
                        {"early_stop", res.early_stop},
                        {"stop_time", res.stop_time},
                        {"accepted_steps", res.stats.accepted},
                        {"rejected_steps", res.stats.rejected},
                        {"rhs_evaluations", res.stats.rhs_evaluations},
                        {"samples", res.samples.size()}};
    s["theta_in_unit_interval"] = cfg.flow.theta < 1.0;
    s["initial"] = {{"f_gap", real(res.samples.front().f_gap)}, {"lyapunov", real(res.e0)}};
    s["final"] = {{"f_gap", real(last.f_gap)}, {"grad_norm_sq", real(last.grad_norm_sq)},
                  {"lyapunov", real(last.lyapunov)}, {"a", last.a}};
    s["max_algebraic_residual"] = max_residual;
    s["max_lambda_rate"] = real(res.max_lambda_rate);
    s["rates"] = flow_rates(res.samples, cfg.rates);
    s["audit"] = to_json(audit);
    s["files"] = {{"trace", stem + ".csv"}};
    s["runtime_seconds"] = detail::seconds_since(t0);
    if (result_out) *result_out = std::move(res);
    return detail::finish(std::move(s), cfg.out_dir, stem, ok, audit.pass());
}

/// Runs every (order, algorithm, problem) cell, `jobs` at a time. Outcomes
/// come back in matrix order regardless of scheduling.
inline std::vector<Outcome> run_suite(const SuiteConfig& suite)
{
    std::vector<ExperimentConfig> cells;
    for (int p : suite.orders)
        for (Algorithm a : suite.algorithms)
            for (const auto& prob : suite.problems) cells.push_back(suite_cell(suite, prob, a, p));

    std::vector<Outcome> out(cells.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) {
            try {
                out[i] = run_experiment(cells[i]);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    const int jobs = std::max(1, std::min<int>(suite.jobs, static_cast<int>(cells.size())));
    std::vector<std::thread> pool;
    for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
    return out;
}

} // namespace hoa::harness
