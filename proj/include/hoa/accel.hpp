#pragma once

// Conceptual accelerated frameworks CAF-I (accumulator A_k) and CAF-II
// (accumulator gamma_k), their p-th order tensor instantiations, and a replay
// audit of recorded traces.

#include "hoa/audit.hpp"
#include "hoa/minimize.hpp"
#include "hoa/model.hpp"
#include "hoa/stepsize.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace hoa {

enum class Algorithm { caf1, caf2, tensor1, tensor2 };

inline const char* to_string(Algorithm a)
{
    switch (a) {
    case Algorithm::caf1: return "caf1";
    case Algorithm::caf2: return "caf2";
    case Algorithm::tensor1: return "tensor1";
    default: return "tensor2";
    }
}

inline Algorithm parse_algorithm(const std::string& s)
{
    if (s == "caf1") return Algorithm::caf1;
    if (s == "caf2") return Algorithm::caf2;
    if (s == "tensor1") return Algorithm::tensor1;
    if (s == "tensor2") return Algorithm::tensor2;
    throw InvalidArgument("unknown algorithm '" + s + "' (expected caf1, caf2, tensor1 or tensor2)");
}

inline Variant variant_of(Algorithm a)
{
    return a == Algorithm::caf1 || a == Algorithm::tensor1 ? Variant::caf1 : Variant::caf2;
}

inline bool is_tensor(Algorithm a) { return a == Algorithm::tensor1 || a == Algorithm::tensor2; }

/// Tensor subproblem flavour: sigma_hat-inexact regularized or exact unregularized.
enum class Branch { inexact, exact };

inline const char* to_string(Branch b) { return b == Branch::inexact ? "inexact" : "exact"; }

inline Branch parse_branch(const std::string& s)
{
    if (s == "inexact") return Branch::inexact;
    if (s == "exact") return Branch::exact;
    throw InvalidArgument("unknown tensor branch '" + s + "' (expected inexact or exact)");
}

struct SolverConfig {
    int p = 1;
    double ell = 0.0; ///< 0 selects problem.lipschitz(p)

    // tensor instantiations
    Branch branch = Branch::inexact;
    double sigma_hat = 0.1;
    double sigma_low = 0.3;
    double sigma_up = 0.7;

    // generic frameworks; sigma is also the HPE parameter of the exact tensor branch
    double theta = 0.5;
    double window_ratio = 2.0;
    double sigma = 0.9;

    double tol_grad = 1e-10;
    int max_iter = 200;
    double sub_tol = 1e-10;
    int sub_max_iter = 200;
    BisectOptions bisect;
};

/// Resolved parameters of one run: the window, the HPE sigma and the ell in use.
struct RunParameters {
    Algorithm algorithm = Algorithm::caf1;
    Variant variant = Variant::caf1;
    FeedbackParams window;
    double sigma = 0.0;
    double ell = 0.0;
};

inline RunParameters resolve(Algorithm algorithm, const SolverConfig& cfg, const Problem& problem)
{
    if (cfg.p < 1 || cfg.p > 3) throw InvalidArgument("config: p must be 1, 2 or 3");
    if (cfg.p > problem.max_order()) throw InvalidArgument("config: problem does not provide order " + std::to_string(cfg.p));
    if (!(cfg.tol_grad >= 0.0)) throw InvalidArgument("config: tol_grad must be nonnegative");
    if (cfg.max_iter < 0) throw InvalidArgument("config: max_iter must be nonnegative");
    if (!(cfg.sub_tol > 0.0)) throw InvalidArgument("config: sub_tol must be positive");

    RunParameters rp;
    rp.algorithm = algorithm;
    rp.variant = variant_of(algorithm);
    if (is_tensor(algorithm)) {
        rp.ell = cfg.ell > 0.0 ? cfg.ell : problem.lipschitz(cfg.p);
        if (!(rp.ell > 0.0)) throw InvalidArgument("config: ell must be positive");
        if (cfg.branch == Branch::inexact) {
            const double sh = cfg.sigma_hat, sl = cfg.sigma_low, su = cfg.sigma_up;
            if (!(sh > 0.0 && sh < 1.0)) throw InvalidArgument("config: sigma_hat must lie in (0, 1)");
            if (!(sl > 0.0 && sl < su && su < 1.0)) throw InvalidArgument("config: need 0 < sigma_low < sigma_up < 1");
            if (!(sl * std::pow(1.0 + sh, cfg.p - 1) < su * std::pow(1.0 - sh, cfg.p - 1)))
                throw InvalidArgument("config: need sigma_low (1 + sigma_hat)^{p-1} < sigma_up (1 - sigma_hat)^{p-1}");
            if (!(sh + su < 1.0)) throw InvalidArgument("config: need sigma_hat + sigma_up < 1");
            rp.window = FeedbackParams::inexact_tensor(cfg.p, rp.ell, sl, su);
            rp.sigma = sh + su;
        } else {
            if (!(cfg.sigma > 0.0 && cfg.sigma < 1.0)) throw InvalidArgument("config: sigma must lie in (0, 1)");
            rp.window = FeedbackParams::exact_tensor(cfg.p, rp.ell);
            rp.sigma = cfg.sigma;
        }
    } else {
        if (!(cfg.theta > 0.0)) throw InvalidArgument("config: theta must be positive");
        if (!(cfg.window_ratio >= 1.0)) throw InvalidArgument("config: window_ratio must be >= 1");
        if (!(cfg.sigma > 0.0 && cfg.sigma < 1.0)) throw InvalidArgument("config: sigma must lie in (0, 1)");
        rp.window = FeedbackParams::generic(cfg.p, cfg.theta, cfg.window_ratio);
        rp.sigma = cfg.sigma;
    }
    rp.window.validate();
    return rp;
}

struct HpeResult {
    double lhs = 0.0;
    double rhs = 0.0;
    bool pass = false;
};

/// |lambda w + x - tilde_v|^2 + 2 lambda eps <= sigma^2 |x - tilde_v|^2, with 1e-14 absolute slack.
inline HpeResult hpe_check(double lambda, const Vector& w, const Vector& x, const Vector& tilde_v, double eps, double sigma)
{
    HpeResult r;
    r.lhs = (lambda * w + x - tilde_v).squaredNorm() + 2.0 * lambda * eps;
    r.rhs = sigma * sigma * (x - tilde_v).squaredNorm();
    r.pass = r.lhs <= r.rhs + 1e-14;
    return r;
}

/// One row of a run. Row k = 0 holds the initial point; fields that belong to
/// a step (lambda, coupling, tilde_v, HPE terms, ...) are NaN there.
struct IterateRecord {
    int k = 0;
    double lambda = 0.0;
    double accumulator = 0.0; ///< A_k or gamma_k
    double coupling = 0.0;    ///< a_k or alpha_k
    Vector x, v, tilde_v, w;  ///< tilde_v is tilde v_{k-1}
    double eps = 0.0;
    double f_gap = 0.0;
    double grad_norm_sq = 0.0;
    double hpe_lhs = 0.0;
    double hpe_rhs = 0.0;
    double large_step = 0.0;
    double lyapunov = 0.0;
    int probes = 0;
    double displacement_sq = 0.0; ///< |x_k - tilde v_{k-1}|^2
    double v_dist_sq = 0.0;       ///< |v_k - x*|^2
    double recurrence_residual = 0.0;
};

enum class Termination { gradient_tol, max_iter, stationary };

inline const char* to_string(Termination t)
{
    switch (t) {
    case Termination::gradient_tol: return "gradient-tol";
    case Termination::max_iter: return "max-iter";
    default: return "stationary-detected";
    }
}

struct RunResult {
    RunParameters params;
    SolverConfig config;
    std::vector<IterateRecord> records;
    Termination termination = Termination::max_iter;
    int total_probes = 0;
    int subproblem_solves = 0;
    double max_inexactness_ratio = 0.0;
};

/// E_k = A_k gap + 1/2 |v - x*|^2 (CAF-I) or gap / gamma_k + 1/2 |v - x*|^2 (CAF-II).
inline double lyapunov_discrete(Variant variant, double accumulator, double f_gap, double v_dist_sq)
{
    const double weight = variant == Variant::caf1 ? accumulator : 1.0 / accumulator;
    return weight * f_gap + 0.5 * v_dist_sq;
}

inline double lyapunov_discrete(const IterateRecord& rec, Variant variant, const Problem& problem)
{
    auto xs = problem.minimizer();
    if (!xs) throw InvalidArgument(problem.name() + ": minimizer unknown");
    return lyapunov_discrete(variant, rec.accumulator, problem.gap(rec.x), (rec.v - *xs).squaredNorm());
}

/// Lower bound on A_k for CAF-I.
inline double caf1_accumulator_lower_bound(int k, int p, double theta, double sigma, double v0_dist)
{
    const double q = 0.5 * (3 * p + 1);
    return theta * std::pow(1.0 - sigma * sigma, 0.5 * (p - 1)) / (std::pow(p + 1.0, q) * std::pow(v0_dist, p - 1)) *
           std::pow(static_cast<double>(k), q);
}

/// Upper bound on gamma_k for CAF-II.
inline double caf2_accumulator_upper_bound(int k, int p, double theta, double sigma, double e0)
{
    const double q = 0.5 * (3 * p + 1);
    return std::pow(p + 1.0, q) / theta * std::pow(2.0 * e0 / (1.0 - sigma * sigma), 0.5 * (p - 1)) *
           std::pow(static_cast<double>(k), -q);
}

/// Outer state of either framework.
struct FrameworkState {
    int k = 0;
    Vector x, v;
    AccumulatorState acc;
    double last_lambda = 0.0;
};

namespace detail {

inline IterateRecord make_record(const FrameworkState& s, const Problem& problem, Variant variant)
{
    const double nan = std::numeric_limits<double>::quiet_NaN();
    IterateRecord r;
    r.k = s.k;
    r.accumulator = s.acc.value;
    r.x = s.x;
    r.v = s.v;
    r.w = problem.gradient(s.x);
    r.grad_norm_sq = r.w.squaredNorm();
    auto xs = problem.minimizer();
    r.f_gap = problem.min_value() ? problem.gap(s.x) : nan;
    r.v_dist_sq = xs ? (s.v - *xs).squaredNorm() : nan;
    r.lyapunov = lyapunov_discrete(variant, s.acc.value, r.f_gap, r.v_dist_sq);
    return r;
}

} // namespace detail

/// One framework step. `search(acc, x, v, lambda_prev)` returns the accepted
/// SearchResult; the step applies the accumulator and v updates and records
/// every diagnostic. Throws SolverFailure when the accepted triple violates the
/// HPE inequality, which happens once lambda eps |grad| exceeds |x - tilde v|.
template <class Search>
IterateRecord framework_step(FrameworkState& s, const Problem& problem, double sigma, Search&& search)
{
    const Variant variant = s.acc.variant;
    const SearchResult found = search(s.acc, s.x, s.v, s.last_lambda);
    const Coupling& c = found.coupling;
    const ProximalPoint& pt = found.point;
    const HpeResult h = hpe_check(c.lambda, pt.w, pt.x, c.tilde_v, pt.eps, sigma);
    if (!h.pass)
        throw SolverFailure("step: HPE inequality not attainable in floating point (lambda " + detail::sci(c.lambda) +
                            ", |x - tilde v| " + detail::sci((pt.x - c.tilde_v).norm()) + ")");

    const AccumulatorState next = advance(s.acc, c);
    const double v_weight = variant == Variant::caf1 ? c.weight : c.weight / next.value;
    const double residual = recurrence_residual(s.acc, c.lambda, c.weight);

    s.v = s.v - v_weight * pt.w;
    s.x = pt.x;
    s.acc = next;
    s.last_lambda = c.lambda;
    ++s.k;

    IterateRecord r = detail::make_record(s, problem, variant);
    r.lambda = c.lambda;
    r.coupling = c.weight;
    r.tilde_v = c.tilde_v;
    r.w = pt.w;
    r.eps = pt.eps;
    r.hpe_lhs = h.lhs;
    r.hpe_rhs = h.rhs;
    r.large_step = found.large_step;
    r.probes = found.probes;
    r.displacement_sq = (pt.x - c.tilde_v).squaredNorm();
    r.recurrence_residual = residual;
    return r;
}

template <class Search>
IterateRecord step_caf1(FrameworkState& s, const Problem& problem, double sigma, Search&& search)
{
    if (s.acc.variant != Variant::caf1) throw InvalidArgument("step_caf1: state is not a CAF-I state");
    return framework_step(s, problem, sigma, std::forward<Search>(search));
}

template <class Search>
IterateRecord step_caf2(FrameworkState& s, const Problem& problem, double sigma, Search&& search)
{
    if (s.acc.variant != Variant::caf2) throw InvalidArgument("step_caf2: state is not a CAF-II state");
    return framework_step(s, problem, sigma, std::forward<Search>(search));
}

/// Exact proximal point argmin Phi(u) + |u - tilde_v|^2 / (2 lambda), with w = grad Phi(x), eps = 0.
inline ProximalPoint proximal_point(const Problem& problem, double lambda, const Vector& tilde_v, double tol, int max_iter)
{
    struct Objective {
        const Problem& f;
        const Vector& c;
        double rho;
        double value(const Vector& u) const { return f.value(u) + 0.5 * rho * (u - c).squaredNorm(); }
        Vector gradient(const Vector& u) const { return f.gradient(u) + rho * (u - c); }
        Matrix hessian(const Vector& u) const
        {
            Matrix h = f.hessian(u);
            h.diagonal().array() += rho;
            return h;
        }
    };
    const Objective obj{problem, tilde_v, 1.0 / lambda};
    const double target = std::max(tol / lambda, 1e-14 * problem.gradient(tilde_v).norm());
    NewtonResult res = damped_newton(obj, tilde_v, {target, max_iter});
    if (!res.converged && !res.stalled)
        throw SolverFailure("proximal point: Newton iteration cap exceeded (|grad| = " + std::to_string(res.grad_norm) + ")");
    ProximalPoint pt;
    pt.w = problem.gradient(res.x);
    pt.x = std::move(res.x);
    return pt;
}

/// Runs one of the four algorithms from (x0, v0).
inline RunResult run(Algorithm algorithm, const Problem& problem, const SolverConfig& cfg, const Vector& x0,
                     const Vector& v0)
{
    check_dimension(problem, x0);
    check_dimension(problem, v0);
    RunResult out;
    out.config = cfg;
    out.params = resolve(algorithm, cfg, problem);
    const RunParameters& rp = out.params;

    FrameworkState s;
    s.x = x0;
    s.v = v0;
    s.acc = AccumulatorState::initial(rp.variant);
    out.records.push_back(detail::make_record(s, problem, rp.variant));
    {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        IterateRecord& r0 = out.records.back();
        r0.lambda = r0.coupling = r0.eps = r0.hpe_lhs = r0.hpe_rhs = r0.large_step = nan;
        r0.displacement_sq = r0.recurrence_residual = nan;
        r0.tilde_v = Vector::Constant(x0.size(), nan);
    }

    auto solve = [&](double lambda, const Vector& tv) -> ProximalPoint {
        ++out.subproblem_solves;
        if (!is_tensor(algorithm)) return proximal_point(problem, lambda, tv, cfg.sub_tol, cfg.sub_max_iter);
        const TaylorModel model(problem, tv, cfg.p, rp.ell);
        const SubproblemOptions sopt{cfg.sub_tol, cfg.sub_max_iter};
        const SubproblemSolution sol = cfg.branch == Branch::inexact
                                           ? solve_regularized(model, lambda, cfg.sigma_hat, cfg.sub_tol, sopt)
                                           : solve_unregularized(model, cfg.sub_tol, sopt);
        out.max_inexactness_ratio = std::max(out.max_inexactness_ratio, sol.inexactness_ratio);
        ProximalPoint pt;
        pt.x = sol.u;
        pt.w = problem.gradient(sol.u);
        return pt;
    };
    auto search = [&](const AccumulatorState& acc, const Vector& x, const Vector& v, double lambda_prev) {
        double lambda0 = lambda_prev;
        if (!(lambda0 > 0.0)) lambda0 = lambda_feedback(rp.window.p, rp.window.theta_low, problem.gradient(x).norm());
        SearchResult r = bisect_lambda(acc, x, v, rp.window, lambda0, solve, cfg.bisect);
        out.total_probes += r.probes;
        return r;
    };

    out.termination = Termination::max_iter;
    for (int k = 0;; ++k) {
        const double gn = std::sqrt(out.records.back().grad_norm_sq);
        if (gn == 0.0) {
            out.termination = Termination::stationary;
            break;
        }
        if (gn <= cfg.tol_grad) {
            out.termination = Termination::gradient_tol;
            break;
        }
        if (k >= cfg.max_iter) break;
        try {
            out.records.push_back(framework_step(s, problem, rp.sigma, search));
        } catch (const StationaryPoint&) {
            out.termination = Termination::stationary;
            break;
        }
    }
    return out;
}

inline RunResult run(Algorithm algorithm, const Problem& problem, const SolverConfig& cfg, const Vector& x0)
{
    return run(algorithm, problem, cfg, x0, x0);
}

// ---------------------------------------------------------------------------
// Trace audit

/// What the audit needs besides the records themselves.
struct AuditSpec {
    Variant variant = Variant::caf1;
    FeedbackParams window;
    double sigma = 0.0;
    bool tensor = false;              ///< expect eps = 0 and, with a problem, w = grad Phi(x)
    const Problem* problem = nullptr; ///< optional, for gradient checks
    double recurrence_tol = 1e-12;
    double point_tol = 1e-12;
    double slack = 1e-9;
};


/// Replays a trace through the generic framework conditions and the discrete
/// Lyapunov bounds. Rows must be ordered by k starting at 0.
inline AuditReport audit_trace(const std::vector<IterateRecord>& recs, const AuditSpec& spec)
{
    using detail::CheckBuilder;
    AuditReport report;
    const bool caf1 = spec.variant == Variant::caf1;
    const int p = spec.window.p;
    const double theta = spec.window.theta;
    const double sig2 = spec.sigma * spec.sigma;
    auto slack = [&](double rhs) { return spec.slack * (1.0 + std::abs(rhs)); };

    CheckBuilder order("ordering"), hpe("hpe"), window("large_step_window"), recur("recurrence"),
        accum("accumulator_update"), tilde("tilde_v_coupling"), vupd("v_update"), inst("tensor_triple"),
        increment("sqrt_increment"), sum_bound("accumulator_sum_bound"), rate("accumulator_rate_bound"),
        dissip("cumulative_dissipation"), mono("lyapunov_monotone"), gapb("gap_bound");

    if (recs.empty()) {
        order.leq(0, 1.0, 0.0, 0.0);
        report.checks.push_back(order.c);
        return report;
    }
    const IterateRecord& r0 = recs.front();
    order.leq(0, std::abs(r0.k), 0.0, 0.0);
    order.leq(0, std::abs(r0.accumulator - (caf1 ? 0.0 : 1.0)), 0.0, 0.0);

    const bool have_xstar = std::isfinite(r0.v_dist_sq) && std::isfinite(r0.f_gap);
    const double e0 = r0.lyapunov;
    const double v0_dist = std::sqrt(r0.v_dist_sq);
    double sum_sqrt_lambda = 0.0, dissipated = 0.0;

    for (std::size_t i = 1; i < recs.size(); ++i) {
        const IterateRecord& prev = recs[i - 1];
        const IterateRecord& r = recs[i];
        const int k = r.k;
        order.leq(k, std::abs(r.k - prev.k - 1), 0.0, 0.0);

        const HpeResult h = hpe_check(r.lambda, r.w, r.x, r.tilde_v, r.eps, spec.sigma);
        hpe.leq(k, h.lhs, h.rhs, 1e-14);
        hpe.leq(k, -r.eps, 0.0, 0.0);

        const double disp = (r.x - r.tilde_v).norm();
        const double m = large_step_value(r.lambda, disp, p);
        window.leq(k, spec.window.theta_low, m, slack(m));
        window.leq(k, m, spec.window.theta_high, slack(spec.window.theta_high));

        const AccumulatorState acc_prev{spec.variant, prev.accumulator};
        recur.leq(k, recurrence_residual(acc_prev, r.lambda, r.coupling), 0.0, spec.recurrence_tol);
        const double next = caf1 ? prev.accumulator + r.coupling : (1.0 - r.coupling) * prev.accumulator;
        accum.leq(k, std::abs(r.accumulator - next), 0.0, spec.recurrence_tol * std::abs(next));
        if (!caf1) accum.leq(k, r.coupling, 1.0, 0.0);

        const Vector tv = couple(acc_prev, r.lambda, prev.x, prev.v).tilde_v;
        tilde.leq(k, (r.tilde_v - tv).norm(), 0.0, spec.point_tol * (1.0 + prev.x.norm() + prev.v.norm()));

        const double vw = caf1 ? r.coupling : r.coupling / r.accumulator;
        const Vector step = vw * r.w;
        vupd.leq(k, (r.v - (prev.v - step)).norm(), 0.0, spec.point_tol * (1.0 + prev.v.norm() + step.norm()));

        if (spec.tensor) {
            inst.leq(k, std::abs(r.eps), 0.0, 0.0);
            if (spec.problem) {
                const Vector g = spec.problem->gradient(r.x);
                inst.leq(k, (r.w - g).norm(), 0.0, spec.point_tol * (1.0 + g.norm()));
            }
        }

        // sqrt(A) or sqrt(1/gamma) grows by at least sqrt(lambda)/2 per step.
        sum_sqrt_lambda += std::sqrt(r.lambda);
        const double root_prev = caf1 ? std::sqrt(prev.accumulator) : std::sqrt(1.0 / prev.accumulator);
        const double root_next = caf1 ? std::sqrt(r.accumulator) : std::sqrt(1.0 / r.accumulator);
        const double inc = root_prev + 0.5 * std::sqrt(r.lambda);
        increment.leq(k, inc, root_next, slack(inc));
        if (caf1) {
            const double bound = 0.25 * sum_sqrt_lambda * sum_sqrt_lambda;
            sum_bound.leq(k, bound, r.accumulator, slack(bound));
        } else {
            const double bound = 1.0 / ((1.0 + 0.5 * sum_sqrt_lambda) * (1.0 + 0.5 * sum_sqrt_lambda));
            sum_bound.leq(k, r.accumulator, bound, slack(bound));
        }

        if (!have_xstar) continue;
        if (caf1) {
            const double bound = caf1_accumulator_lower_bound(k, p, theta, spec.sigma, v0_dist);
            rate.leq(k, bound, r.accumulator, slack(bound));
            const double lhs = r.f_gap * r.accumulator, rhs = 0.5 * r0.v_dist_sq;
            gapb.leq(k, lhs, rhs, slack(rhs));
            dissipated += r.accumulator / r.lambda * r.displacement_sq;
        } else {
            const double bound = caf2_accumulator_upper_bound(k, p, theta, spec.sigma, e0);
            rate.leq(k, r.accumulator, bound, slack(bound));
            dissipated += r.displacement_sq / (r.lambda * r.accumulator);
        }
        const double lhs = 0.5 * (1.0 - sig2) * dissipated;
        dissip.leq(k, lhs, e0 - r.lyapunov, slack(e0));
        mono.leq(k, r.lyapunov, prev.lyapunov, slack(e0));
    }

    for (CheckBuilder* b : {&order, &hpe, &window, &recur, &accum, &tilde, &vupd, &increment, &sum_bound})
        report.checks.push_back(b->c);
    if (spec.tensor) report.checks.push_back(inst.c);
    if (have_xstar) {
        report.checks.push_back(rate.c);
        report.checks.push_back(dissip.c);
        report.checks.push_back(mono.c);
        if (caf1) report.checks.push_back(gapb.c);
    }
    return report;
}

inline AuditSpec audit_spec(const RunResult& run, const Problem* problem = nullptr)
{
    AuditSpec spec;
    spec.variant = run.params.variant;
    spec.window = run.params.window;
    spec.sigma = run.params.sigma;
    spec.tensor = is_tensor(run.params.algorithm);
    spec.problem = problem;
    return spec;
}

} // namespace hoa
