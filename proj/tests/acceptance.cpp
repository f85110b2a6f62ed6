// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include "hoa/harness/audit.hpp"
#include "oracles.hpp"
#include "support.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

using namespace hoa;
using namespace hoa::harness;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    bool pass = true;
    std::string detail;

    void fail(const std::string& why)
    {
        if (pass) detail.clear();
        pass = false;
        if (!detail.empty()) detail += "; ";
        detail += why;
    }
    void note(const std::string& what)
    {
        if (!pass) return;
        if (!detail.empty()) detail += "; ";
        detail += what;
    }
};

std::string num(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

SuiteConfig default_suite(const fs::path& out)
{
    SuiteConfig s = read_suite(Config::load(fs::path(HOA_CONFIG_DIR) / "suite.ini"));
    s.base.out_dir = out;
    return s;
}

struct SuiteRun {
    std::vector<Outcome> outcomes;
    double seconds = 0.0;
};

SuiteRun run_default_suite(const fs::path& out)
{
    fs::remove_all(out);
    fs::create_directories(out);
    const auto t0 = std::chrono::steady_clock::now();
    SuiteRun r;
    r.outcomes = run_suite(default_suite(out));
    r.seconds = seconds_since(t0);
    return r;
}

std::string label(const json& s)
{
    return s.at("name").get<std::string>();
}

bool is_cell(const json& s, const std::string& problem, int p, bool tensor_only)
{
    const json& c = s.at("config");
    if (c.at("problem").at("name") != problem || c.at("algorithm").at("p") != p) return false;
    return !tensor_only || is_tensor(parse_algorithm(c.at("algorithm").at("name").get<std::string>()));
}

std::vector<IterateRecord> load_records(const Outcome& o) { return records_from_table(read_table(o.trace)); }

double slope_of(const json& s, const std::string& series)
{
    const json& f = s.at("rates").at(series);
    return f.contains("slope") ? f.at("slope").get<double>() : std::numeric_limits<double>::quiet_NaN();
}

/// First k with f_gap <= floor, or -1.
int solved_at(const std::vector<IterateRecord>& recs, double floor)
{
    for (const auto& r : recs)
        if (r.f_gap <= floor) return r.k;
    return -1;
}

// 1: first-order tensor runs decay at least like k^-1.8 over [20, 200].
Verdict criterion1(const SuiteRun& suite)
{
    Verdict v;
    int runs = 0;
    for (const auto& o : suite.outcomes) {
        const json& s = o.summary;
        if (!(is_cell(s, "quadratic", 1, true) || is_cell(s, "lse", 1, true))) continue;
        ++runs;
        if (!o.ok) {
            v.fail(label(s) + " failed");
            continue;
        }
        if (s.at("runtime_seconds").get<double>() >= 5.0) v.fail(label(s) + " took " + num(s.at("runtime_seconds")) + " s");
        const auto recs = load_records(o);
        if (solved_at(recs, 1e-12) >= 0) {
            v.note(label(s) + " gap <= 1e-12");
            continue;
        }
        std::vector<double> k, gap;
        for (const auto& r : recs)
            if (r.k >= 1) k.push_back(r.k), gap.push_back(r.f_gap);
        const double end = std::min(200.0, k.back());
        const RateFit fit = fit_rate(k, gap, 20, end);
        if (fit.slope > -1.8) v.fail(label(s) + " slope " + num(fit.slope));
        else v.note(label(s) + " slope " + num(fit.slope));
    }
    if (runs != 4) v.fail("expected 4 runs, found " + std::to_string(runs));
    return v;
}

// 2: second-order tensor runs decay at least like k^-3 or reach 1e-12 before k = 50.
Verdict criterion2(const SuiteRun& suite)
{
    Verdict v;
    int runs = 0;
    for (const auto& o : suite.outcomes) {
        const json& s = o.summary;
        if (!(is_cell(s, "quadratic", 2, true) || is_cell(s, "lse", 2, true))) continue;
        ++runs;
        if (!o.ok) {
            v.fail(label(s) + " failed");
            continue;
        }
        if (s.at("runtime_seconds").get<double>() >= 30.0)
            v.fail(label(s) + " took " + num(s.at("runtime_seconds")) + " s");
        const int k = solved_at(load_records(o), 1e-12);
        const double slope = slope_of(s, "f_gap");
        if (k >= 0 && k < 50) v.note(label(s) + " gap <= 1e-12 at k=" + std::to_string(k));
        else if (slope <= -3.0) v.note(label(s) + " slope " + num(slope));
        else v.fail(label(s) + " slope " + num(slope) + ", gap floor at k=" + std::to_string(k));
    }
    if (runs != 4) v.fail("expected 4 runs, found " + std::to_string(runs));
    return v;
}

// 3: running minimum of |grad|^2 on the same runs.
Verdict criterion3(const SuiteRun& suite)
{
    Verdict v;
    double worst1 = -std::numeric_limits<double>::infinity(), worst2 = worst1;
    for (const auto& o : suite.outcomes) {
        const json& s = o.summary;
        for (int p : {1, 2}) {
            if (!(is_cell(s, "quadratic", p, true) || is_cell(s, "lse", p, true))) continue;
            if (!o.ok) {
                v.fail(label(s) + " failed");
                continue;
            }
            const double slope = slope_of(s, "grad_norm_sq_running_min");
            const double limit = p == 1 ? -2.5 : -5.0;
            if (!(slope <= limit)) v.fail(label(s) + " grad slope " + num(slope));
            (p == 1 ? worst1 : worst2) = std::max(p == 1 ? worst1 : worst2, slope);
        }
    }
    v.note("worst p=1 slope " + num(worst1) + ", worst p=2 slope " + num(worst2));
    return v;
}

// 4: every trace of the default suite passes `hoa check`.
Verdict criterion4(const SuiteRun& suite)
{
    Verdict v;
    int checked = 0;
    for (const auto& o : suite.outcomes) {
        if (!o.ok) {
            v.fail(label(o.summary) + " failed to run");
            continue;
        }
        const std::string cmd = std::string("\"") + HOA_CLI_PATH + "\" check \"" + o.trace.string() + "\" > /dev/null";
        const int rc = std::system(cmd.c_str());
        if (rc != 0) v.fail(label(o.summary) + " check exit " + std::to_string(rc));
        else ++checked;
    }
    v.note(std::to_string(checked) + " traces audited");
    return v;
}

FlowExperimentConfig flow_config(int p, int dim, const fs::path& out)
{
    Config c = Config::load(fs::path(HOA_CONFIG_DIR) / ("flow_p" + std::to_string(p) + ".ini"));
    c.set("problem", "dim", std::to_string(dim));
    c.set("problem", "init", "random");
    FlowExperimentConfig e = read_flow_experiment(c);
    e.out_dir = out;
    e.name = "flow_p" + std::to_string(p) + "_d" + std::to_string(dim);
    return e;
}

// Shared checks on one flow run: energy, residual, a(t) and the gap slope.
void check_flow(Verdict& v, const FlowExperimentConfig& cfg, double residual_tol, double slope_limit,
                double time_limit)
{
    FlowResult res;
    const Outcome o = run_flow_experiment(cfg, &res);
    const std::string name = cfg.stem();
    if (!o.ok) {
        v.fail(name + " failed");
        return;
    }
    if (o.summary.at("runtime_seconds").get<double>() >= time_limit) v.fail(name + " too slow");
    const auto& smp = res.samples;
    const double e0 = smp.front().lyapunov;
    const double theta = cfg.flow.theta, c = cfg.flow.c;
    const int p = cfg.flow.p;
    double max_res = 0.0, max_rise = 0.0, max_a_err = 0.0, max_a_short = 0.0;
    for (std::size_t i = 0; i < smp.size(); ++i) {
        const FlowSample& s = smp[i];
        max_res = std::max(max_res, s.algebraic_residual);
        if (i > 0) max_rise = std::max(max_rise, s.lyapunov - smp[i - 1].lyapunov);
        if (p == 1) {
            const double root = std::sqrt(theta) * s.t + c;
            const double a = 0.25 * root * root;
            max_a_err = std::max(max_a_err, std::abs(s.a - a) / a);
        } else {
            const double q = 3.0 * p + 1.0;
            const double inner = std::pow(theta, 2.0 / q) / ((p + 1.0) * std::pow(e0, (p - 1.0) / q));
            const double root = 0.5 * c + std::pow(inner * s.t, q / 4.0);
            const double bound = root * root;
            max_a_short = std::max(max_a_short, (bound - s.a) / bound);
        }
    }
    if (max_rise > 1e-9 * (1.0 + std::abs(e0))) v.fail(name + " energy rises by " + num(max_rise));
    if (max_res > residual_tol) v.fail(name + " residual " + num(max_res));
    if (p == 1 && max_a_err > 1e-8) v.fail(name + " a(t) off closed form by " + num(max_a_err));
    if (p > 1 && max_a_short > 1e-8) v.fail(name + " a(t) below bound by " + num(max_a_short));
    const double slope = slope_of(o.summary, "f_gap");
    if (!(slope <= slope_limit)) v.fail(name + " gap slope " + num(slope));
    if (!o.audit_pass) v.fail(name + " audit failed");
    v.note(name + " slope " + num(slope) + " residual " + num(max_res));
}

// 5: first-order flow on 1-D and 2-D quadratics.
Verdict criterion5(const fs::path& dir)
{
    Verdict v;
    for (int dim : {1, 2}) check_flow(v, flow_config(1, dim, dir), 1e-12, -1.8, 60.0);
    return v;
}

// 6: second-order flow.
Verdict criterion6(const fs::path& dir)
{
    Verdict v;
    for (int dim : {1, 2}) check_flow(v, flow_config(2, dim, dir), 1e-6, -3.0, 60.0);
    return v;
}

oracle::CubicModel cubic_oracle(const Problem& p, const Vector& v, double ell, double rho)
{
    return {p.value(v), p.gradient(v), p.hessian(v), ell, rho};
}

// 7: subproblem solvers against bisection references.
Verdict criterion7()
{
    Verdict v;
    double worst = 0.0;
    auto record = [&](const std::string& what, double err) {
        worst = std::max(worst, err);
        if (!(err <= 1e-8)) v.fail(what + " off by " + num(err));
    };

    const QuadraticProblem half = test::diagonal_quadratic({1.0});
    const TaylorModel m1(half, Vector::Constant(1, 1.0), 2, 1.0);
    record("1-D closed form", std::abs(solve_unregularized(m1).u(0) - (2.0 - std::sqrt(3.0))));

    std::mt19937_64 rng(7);
    const auto q1 = make_problem("quadratic", {{"dim", 1}, {"condition", 1}}, 11);
    const auto q2 = make_problem("quadratic", {{"dim", 2}, {"condition", 10}}, 12);
    const auto lse2 = make_problem("lse", {{"dim", 2}}, 13);
    for (int i = 0; i < 5; ++i) {
        const Vector c1 = *q1->minimizer() + test::random_point(1, rng);
        const TaylorModel t1(*q1, c1, 2, 1.0);
        record("1-D unregularized",
               std::abs(solve_unregularized(t1).u(0) - c1(0) - oracle::minimize_1d(cubic_oracle(*q1, c1, 1.0, 0.0))));
        for (const auto* prob : {q2.get(), lse2.get()}) {
            const Vector c = *prob->minimizer() + test::random_point(2, rng);
            const double ell = prob->lipschitz(2) > 0.0 ? prob->lipschitz(2) : 1.0;
            const TaylorModel t(*prob, c, 2, ell);
            const Vector ref = c + Vector(oracle::minimize_2d(cubic_oracle(*prob, c, ell, 0.0)));
            record("2-D unregularized " + prob->name(), (solve_unregularized(t).u - ref).norm());
            for (double lambda : {0.1, 1.0, 10.0}) {
                const Vector reg = c + Vector(oracle::minimize_2d(cubic_oracle(*prob, c, ell, 1.0 / lambda)));
                record("2-D regularized " + prob->name(), (solve_regularized(t, lambda, 0.1, 1e-12).u - reg).norm());
            }
        }
        for (double lambda : {0.1, 1.0, 10.0}) {
            const double ref = c1(0) + oracle::minimize_1d(cubic_oracle(*q1, c1, 1.0, 1.0 / lambda));
            record("1-D regularized", std::abs(solve_regularized(t1, lambda, 0.1, 1e-12).u(0) - ref));
        }
    }
    v.note("worst deviation " + num(worst));
    return v;
}

// 8: bisection against a 10^4-point geometric scan of the large-step value.
Verdict criterion8()
{
    Verdict v;
    struct State {
        Variant variant;
        double acc, x, v;
        int p;
        double theta;
    };
    const double q = 2.0;
    const QuadraticProblem phi = test::diagonal_quadratic({q});
    int i = 0;
    for (const State& st : {State{Variant::caf1, 0.0, 1.0, 1.0, 2, 0.5}, State{Variant::caf1, 3.7, 0.8, -1.5, 3, 0.1},
                            State{Variant::caf2, 0.4, 2.0, 0.5, 2, 1.0}}) {
        ++i;
        const bool caf1 = st.variant == Variant::caf1;
        const FeedbackParams w = FeedbackParams::generic(st.p, st.theta, 2.0);
        const oracle::LambdaScan scan = oracle::scan_lambda(
            [&](double l) { return oracle::quadratic_large_step(caf1, st.acc, st.x, st.v, q, st.p, l); }, 1e-8, 1e8,
            10000, w.theta_low, w.theta_high);
        if (!scan.any()) {
            v.fail("state " + std::to_string(i) + ": scan found no admissible lambda");
            continue;
        }
        const SearchResult r = bisect_lambda(
            AccumulatorState{st.variant, st.acc}, Vector::Constant(1, st.x), Vector::Constant(1, st.v), w, 1.0,
            [&](double lambda, const Vector& tv) { return proximal_point(phi, lambda, tv, 1e-13, 50); });
        if (!scan.within_one_cell(r.coupling.lambda))
            v.fail("state " + std::to_string(i) + ": lambda " + num(r.coupling.lambda) + " outside scanned window");
        else v.note("state " + std::to_string(i) + " lambda " + num(r.coupling.lambda));
    }
    return v;
}

// 9: tensor traces replayed through the generic framework conditions.
Verdict criterion9(const SuiteRun& suite)
{
    Verdict v;
    int runs = 0, rows = 0;
    for (const auto& o : suite.outcomes) {
        const json& s = o.summary;
        const json& alg = s.at("config").at("algorithm");
        if (!is_tensor(parse_algorithm(alg.at("name").get<std::string>()))) continue;
        if (!o.ok) {
            v.fail(label(s) + " failed");
            continue;
        }
        ++runs;
        const json& r = s.at("resolved");
        const json& prm = s.at("config").at("parameters");
        const double sigma = prm.at("sigma_hat").get<double>() + prm.at("sigma_up").get<double>();
        const double sigma_err = std::abs(sigma - r.at("sigma").get<double>());
        if (alg.at("branch") == "inexact" && sigma_err > 1e-15) v.fail(label(s) + " sigma is not sigma_hat + sigma_up");
        AuditSpec spec;
        spec.variant = r.at("variant") == "caf1" ? Variant::caf1 : Variant::caf2;
        spec.window.p = alg.at("p").get<int>();
        spec.window.theta = r.at("theta_low").get<double>();
        spec.window.theta_low = spec.window.theta;
        spec.window.theta_high = std::numeric_limits<double>::infinity();
        spec.sigma = r.at("sigma").get<double>();
        spec.tensor = false;
        const auto recs = load_records(o);
        const AuditReport rep = audit_trace(recs, spec);
        for (const char* name : {"hpe", "large_step_window"}) {
            const AuditCheck* c = rep.find(name);
            if (!c || !c->pass || c->checked + 1 < static_cast<int>(recs.size()))
                v.fail(label(s) + " " + name + (c ? " violations " + std::to_string(c->violations) : " missing"));
        }
        if (!rep.pass()) v.fail(label(s) + " generic audit failed");
        rows += static_cast<int>(recs.size()) - 1;
    }
    v.note(std::to_string(runs) + " traces, " + std::to_string(rows) + " iterations");
    return v;
}

// 10: the suite is deterministic and finishes within three minutes.
Verdict criterion10(const SuiteRun& first, const SuiteRun& second)
{
    Verdict v;
    if (first.outcomes.size() != second.outcomes.size()) v.fail("different number of runs");
    int same = 0;
    for (std::size_t i = 0; i < std::min(first.outcomes.size(), second.outcomes.size()); ++i) {
        const Outcome& a = first.outcomes[i];
        const Outcome& b = second.outcomes[i];
        if (!a.ok || !b.ok) {
            v.fail(label(a.summary) + " failed");
            continue;
        }
        if (slurp(a.trace) != slurp(b.trace)) v.fail(a.trace.filename().string() + " differs");
        else ++same;
    }
    for (const SuiteRun* s : {&first, &second})
        if (s->seconds >= 180.0) v.fail("suite took " + num(s->seconds) + " s");
    v.note(std::to_string(same) + " identical traces, " + num(first.seconds) + " s and " + num(second.seconds) + " s");
    return v;
}

Verdict guarded(const std::function<Verdict()>& f)
{
    try {
        return f();
    } catch (const std::exception& e) {
        Verdict v;
        v.fail(std::string("exception: ") + e.what());
        return v;
    }
}

} // namespace

int main()
{
    const fs::path root = fs::temp_directory_path() / "hoa_acceptance";
    fs::remove_all(root);
    SuiteRun first, second;
    std::string suite_error;
    try {
        first = run_default_suite(root / "suite_a");
        second = run_default_suite(root / "suite_b");
    } catch (const std::exception& e) {
        suite_error = e.what();
    }
    auto need_suite = [&](std::function<Verdict()> f) {
        return [f, &suite_error] {
            if (!suite_error.empty()) throw InvalidArgument("suite: " + suite_error);
            return f();
        };
    };

    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
        {"first-order tensor gap rate", need_suite([&] { return criterion1(first); })},
        {"second-order tensor gap rate", need_suite([&] { return criterion2(first); })},
        {"gradient running-minimum rate", need_suite([&] { return criterion3(first); })},
        {"suite traces pass the invariant checker", need_suite([&] { return criterion4(first); })},
        {"first-order closed-loop flow", [&] { return criterion5(root / "flow"); }},
        {"second-order closed-loop flow", [&] { return criterion6(root / "flow"); }},
        {"subproblem solvers match bisection references", [] { return criterion7(); }},
        {"lambda bisection matches a geometric scan", [] { return criterion8(); }},
        {"tensor traces satisfy the generic framework", need_suite([&] { return criterion9(first); })},
        {"suite is deterministic and fast", need_suite([&] { return criterion10(first, second); })},
    };

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const Verdict v = guarded(criteria[i].second);
        if (!v.pass) ++failures;
        std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << ": " << criteria[i].first << " ("
                  << v.detail << ")" << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
