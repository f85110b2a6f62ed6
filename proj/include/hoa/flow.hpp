#pragma once

// Closed-loop control system in first-order form, augmented with
// s(t) = int_0^t sqrt(lambda) so that a(t) = (s + c)^2 / 4 is a state function:
//
//   x' = -(a'/a)(x - v) - (a'^2/a) grad Phi(x)
//   v' = -a' grad Phi(x)
//   s' = sqrt(lambda),   lambda = Lambda_theta(x),   a' = sqrt(lambda)(s + c)/2

#include "hoa/audit.hpp"
#include "hoa/ode.hpp"
#include "hoa/oracle.hpp"
#include "hoa/stepsize.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace hoa {

struct FlowConfig {
    int p = 1;
    double theta = 0.25;
    double c = 1.0;
    double t_end = 50.0;
    double abs_tol = 1e-9;
    double rel_tol = 1e-9;
    double sample_stride = 0.05;
    double grad_floor = 1e-12; ///< p >= 2 stops once |grad Phi(x)| drops below this

    void validate() const
    {
        if (p < 1 || p > 3) throw InvalidArgument("flow: p must be 1, 2 or 3");
        if (!(theta > 0.0)) throw InvalidArgument("flow: theta must be positive");
        if (!(c > 0.0)) throw InvalidArgument("flow: c must be positive");
        if (!(t_end > 0.0)) throw InvalidArgument("flow: t_end must be positive");
        if (!(abs_tol > 0.0 && rel_tol >= 0.0)) throw InvalidArgument("flow: tolerances must be positive");
        if (!(sample_stride > 0.0)) throw InvalidArgument("flow: sample_stride must be positive");
    }
};

struct FlowDerivative {
    Vector x_dot;
    Vector v_dot;
    double s_dot = 0.0;
};

inline double flow_a(double s, double c) { return 0.25 * (s + c) * (s + c); }

namespace detail {

inline FlowDerivative flow_rhs_with(const Vector& x, const Vector& v, double s, const Vector& g, double lambda, double c)
{
    const double root = std::sqrt(lambda);
    const double a_dot_over_a = 2.0 * root / (s + c);
    FlowDerivative d;
    d.x_dot = -a_dot_over_a * (x - v) - lambda * g;
    d.v_dot = -(0.5 * root * (s + c)) * g;
    d.s_dot = root;
    return d;
}

} // namespace detail

/// Time derivatives of (x, v, s). Throws StationaryPoint at a stationary x when p >= 2.
inline FlowDerivative flow_rhs(const Vector& x, const Vector& v, double s, const Problem& problem, const FlowConfig& cfg)
{
    const Vector g = problem.gradient(x);
    return detail::flow_rhs_with(x, v, s, g, lambda_feedback(cfg.p, cfg.theta, g.norm()), cfg.c);
}

/// v0 making x'(0) = 0: x0 + (c/2) theta^{1/(2p)} |g0|^{-(p-1)/(2p)} g0.
inline Vector default_v0(const Vector& x0, const Problem& problem, const FlowConfig& cfg)
{
    const Vector g = problem.gradient(x0);
    const double gn = g.norm();
    if (cfg.p >= 2 && !(gn > 0.0)) throw StationaryPoint("flow: x0 is stationary");
    const double scale =
        0.5 * cfg.c * std::pow(cfg.theta, 0.5 / cfg.p) * (cfg.p == 1 ? 1.0 : std::pow(gn, -0.5 * (cfg.p - 1) / cfg.p));
    return x0 + scale * g;
}

/// E = a gap + 1/2 |v - x*|^2.
inline double lyapunov_continuous(double a, double f_gap, const Vector& v, const Vector& x_star)
{
    return a * f_gap + 0.5 * (v - x_star).squaredNorm();
}

/// Lower bound on a(t) along the closed-loop trajectory.
inline double a_lower_bound(double t, int p, double theta, double c, double e0)
{
    const double q = 3.0 * p + 1.0;
    const double inner = std::pow(theta, 2.0 / q) / ((p + 1.0) * std::pow(e0, (p - 1.0) / q));
    const double root = 0.5 * c + std::pow(inner, q / 4.0) * std::pow(t, q / 4.0);
    return root * root;
}

struct FlowSample {
    double t = 0.0;
    double s = 0.0;
    double a = 0.0;
    double a_dot = 0.0;
    double lambda = 0.0;
    double f_gap = 0.0;
    double grad_norm_sq = 0.0;
    double lyapunov = 0.0;
    double algebraic_residual = 0.0;
    double dissipation_rate = 0.0; ///< a theta^{1/p} |grad|^{(p+1)/p}
    Vector x, v;
};

struct FlowResult {
    FlowConfig config;
    std::vector<FlowSample> samples;
    OdeStatus status = OdeStatus::reached;
    OdeStats stats;
    double e0 = 0.0;
    bool early_stop = false;
    double stop_time = 0.0;
    double max_lambda_rate = 0.0; ///< max |d lambda| / dt between consecutive samples
};

inline FlowSample make_flow_sample(double t, const Vector& x, const Vector& v, double s, const Problem& problem,
                                   const FlowConfig& cfg)
{
    FlowSample fs;
    fs.t = t;
    fs.s = s;
    fs.x = x;
    fs.v = v;
    fs.a = flow_a(s, cfg.c);
    const Vector g = problem.gradient(x);
    const double gn = g.norm();
    fs.grad_norm_sq = gn * gn;
    fs.lambda = gn > 0.0 || cfg.p == 1 ? lambda_feedback(cfg.p, cfg.theta, gn) : std::numeric_limits<double>::infinity();
    fs.a_dot = 0.5 * std::sqrt(fs.lambda) * (s + cfg.c);
    fs.algebraic_residual =
        cfg.p == 1 ? 0.0 : std::abs(std::pow(fs.lambda, cfg.p) * std::pow(gn, cfg.p - 1) - cfg.theta);
    fs.dissipation_rate = fs.a * std::pow(cfg.theta, 1.0 / cfg.p) * std::pow(gn, (cfg.p + 1.0) / cfg.p);
    const auto xs = problem.minimizer();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    fs.f_gap = problem.min_value() ? problem.gap(x) : nan;
    fs.lyapunov = xs ? lyapunov_continuous(fs.a, fs.f_gap, v, *xs) : nan;
    return fs;
}

/// Integrates from (x0, v0, s = 0) to t_end, sampling every `sample_stride`.
inline FlowResult integrate(const Problem& problem, const Vector& x0, const Vector& v0, const FlowConfig& cfg)
{
    cfg.validate();
    check_dimension(problem, x0);
    check_dimension(problem, v0);
    const Eigen::Index d = x0.size();
    if (cfg.p >= 2 && !(problem.gradient(x0).norm() > cfg.grad_floor))
        throw StationaryPoint("flow: x0 is stationary");

    FlowResult out;
    out.config = cfg;

    auto rhs = [&](double, const Vector& y, Vector& dy) {
        const Vector x = y.head(d);
        const Vector g = problem.gradient(x);
        // Stage points may dip below the floor; the stop test ends the run after the step.
        const double gn = cfg.p == 1 ? g.norm() : std::max(g.norm(), cfg.grad_floor);
        const FlowDerivative fd =
            detail::flow_rhs_with(x, y.segment(d, d), y(2 * d), g, lambda_feedback(cfg.p, cfg.theta, gn), cfg.c);
        dy.head(d) = fd.x_dot;
        dy.segment(d, d) = fd.v_dot;
        dy(2 * d) = fd.s_dot;
    };
    auto observe = [&](double t, const Vector& y) {
        if (!out.samples.empty() && out.samples.back().t == t) return;
        out.samples.push_back(make_flow_sample(t, y.head(d), y.segment(d, d), y(2 * d), problem, cfg));
    };
    auto stop = [&](double, const Vector& y) {
        return cfg.p >= 2 && problem.gradient(y.head(d)).norm() < cfg.grad_floor;
    };

    std::vector<double> times;
    const long n = static_cast<long>(std::ceil(cfg.t_end / cfg.sample_stride - 1e-9));
    for (long i = 1; i < n; ++i) times.push_back(static_cast<double>(i) * cfg.sample_stride);
    times.push_back(cfg.t_end);

    Vector y(2 * d + 1);
    y << x0, v0, 0.0;
    OdeOptions opt;
    opt.abs_tol = cfg.abs_tol;
    opt.rel_tol = cfg.rel_tol;
    out.status = dopri5(rhs, 0.0, y, times, observe, stop, opt, &out.stats);
    out.early_stop = out.status == OdeStatus::stopped;
    out.stop_time = out.samples.back().t;
    out.e0 = out.samples.front().lyapunov;
    for (std::size_t i = 1; i < out.samples.size(); ++i) {
        const double dt = out.samples[i].t - out.samples[i - 1].t;
        if (dt > 0.0)
            out.max_lambda_rate =
                std::max(out.max_lambda_rate, std::abs(out.samples[i].lambda - out.samples[i - 1].lambda) / dt);
    }
    return out;
}

inline FlowResult integrate(const Problem& problem, const Vector& x0, const FlowConfig& cfg)
{
    return integrate(problem, x0, default_v0(x0, problem, cfg), cfg);
}

struct FlowAuditOptions {
    double residual_tol = 1e-6;
    double monotone_slack = 1e-9;
    double a_bound_slack = 1e-8;
    double dissipation_delta = 1e-3;
    double closed_form_tol = 1e-8; ///< p = 1 only
};

/// Checks a sampled trajectory: monotone energy, the algebraic equation, the
/// definition of a, the a(t) lower bound, cumulative dissipation (trapezoid
/// rule on the samples) and, for p = 1, the closed form of a(t).
inline AuditReport audit_flow(const std::vector<FlowSample>& samples, const FlowConfig& cfg,
                              const FlowAuditOptions& opt = {})
{
    using detail::CheckBuilder;
    CheckBuilder mono("lyapunov_monotone"), resid("algebraic_residual"), adef("a_definition"),
        abound("a_lower_bound"), dissip("cumulative_dissipation"), closed("a_closed_form");
    AuditReport report;
    if (samples.empty()) {
        CheckBuilder empty("ordering");
        empty.leq(0, 1.0, 0.0, 0.0);
        report.checks.push_back(empty.c);
        return report;
    }
    const double e0 = samples.front().lyapunov;
    const bool have_energy = std::isfinite(e0);
    double integral = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const FlowSample& s = samples[i];
        const int idx = static_cast<int>(i);
        resid.leq(idx, s.algebraic_residual, opt.residual_tol, 0.0);
        const double a_def = flow_a(s.s, cfg.c);
        adef.leq(idx, std::abs(s.a - a_def), 0.0, 1e-14 * a_def);
        if (cfg.p == 1) {
            const double root = std::sqrt(cfg.theta) * s.t + cfg.c;
            const double a_closed = 0.25 * root * root;
            closed.leq(idx, std::abs(s.a - a_closed), 0.0, opt.closed_form_tol * a_closed);
        }
        if (!have_energy) continue;
        const double bound = a_lower_bound(s.t, cfg.p, cfg.theta, cfg.c, e0);
        abound.leq(idx, bound, s.a, opt.a_bound_slack * bound);
        if (i > 0) {
            const FlowSample& prev = samples[i - 1];
            mono.leq(idx, s.lyapunov, prev.lyapunov, opt.monotone_slack * (1.0 + e0));
            integral += 0.5 * (s.t - prev.t) * (s.dissipation_rate + prev.dissipation_rate);
            dissip.leq(idx, (1.0 - opt.dissipation_delta) * integral, e0 - s.lyapunov, opt.monotone_slack * (1.0 + e0));
        }
    }
    for (CheckBuilder* b : {&resid, &adef}) report.checks.push_back(b->c);
    if (cfg.p == 1) report.checks.push_back(closed.c);
    if (have_energy)
        for (CheckBuilder* b : {&mono, &abound, &dissip}) report.checks.push_back(b->c);
    return report;
}

} // namespace hoa
