#pragma once

#include "hoa/types.hpp"

#include <cmath>
#include <string>

namespace hoa {

/// Window [theta_low, theta_high] for the large-step value lambda * r^{p-1},
/// and the theta that enters the convergence bounds.
struct FeedbackParams {
    int p = 1;
    double theta = 0.0;
    double theta_low = 0.0;
    double theta_high = 0.0;

    /// Regularized (sigma_hat-inexact) tensor branch: sigma_l p!/(2 ell) .. sigma_u p!/(2 ell).
    static FeedbackParams inexact_tensor(int p, double ell, double sigma_low, double sigma_up)
    {
        const double unit = factorial(p) / (2.0 * ell);
        return {p, sigma_low * unit, sigma_low * unit, sigma_up * unit};
    }

    /// Exact unregularized branch: (p-1)!/(2 ell) .. p!/(ell (p+1)).
    static FeedbackParams exact_tensor(int p, double ell)
    {
        const double low = factorial(p - 1) / (2.0 * ell);
        return {p, low, low, factorial(p) / (ell * (p + 1))};
    }

    /// Generic framework: lambda r^{p-1} >= theta, searched inside [theta, ratio * theta].
    static FeedbackParams generic(int p, double theta, double ratio)
    {
        return {p, theta, theta, ratio * theta};
    }

    void validate() const
    {
        if (p < 1) throw InvalidArgument("feedback: p must be >= 1");
        if (!(theta > 0.0 && theta_low > 0.0 && theta_high >= theta_low && theta >= theta_low && theta <= theta_high))
            throw InvalidArgument("feedback: need 0 < theta_low <= theta <= theta_high");
    }
};

/// Lambda_theta: the lambda with lambda^p |grad|^{p-1} = theta.
inline double lambda_feedback(int p, double theta, double grad_norm)
{
    if (p == 1) return theta;
    if (!(grad_norm > 0.0)) throw StationaryPoint("feedback law undefined at a stationary point");
    return std::pow(theta, 1.0 / p) * std::pow(grad_norm, -static_cast<double>(p - 1) / p);
}

inline double lambda_feedback(const FeedbackParams& params, double grad_norm)
{
    return lambda_feedback(params.p, params.theta, grad_norm);
}

/// Positive root of a^2 = lambda (A + a).
inline double a_next(double A, double lambda)
{
    return 0.5 * (lambda + std::sqrt(lambda * lambda + 4.0 * lambda * A));
}

/// Root in (0, 1) of alpha^2 = lambda (1 - alpha) gamma.
inline double alpha_next(double gamma, double lambda)
{
    const double x = lambda * gamma;
    return 2.0 * x / (x + std::sqrt(x * x + 4.0 * x));
}

enum class Window { below, inside, above };

inline const char* to_string(Window w)
{
    switch (w) {
    case Window::below: return "below";
    case Window::inside: return "inside";
    default: return "above";
    }
}

/// lambda * r^{p-1}; r^0 is taken as 1 even at r = 0.
inline double large_step_value(double lambda, double displacement_norm, int p)
{
    return p == 1 ? lambda : lambda * std::pow(displacement_norm, p - 1);
}

/// Closed-interval classification of lambda * r^{p-1} against the window.
inline Window large_step_check(double lambda, double displacement_norm, const FeedbackParams& params)
{
    const double m = large_step_value(lambda, displacement_norm, params.p);
    if (m < params.theta_low) return Window::below;
    if (m > params.theta_high) return Window::above;
    return Window::inside;
}

enum class Variant { caf1, caf2 };

inline const char* to_string(Variant v) { return v == Variant::caf1 ? "caf1" : "caf2"; }

/// A_k (CAF-I, starts at 0) or gamma_k (CAF-II, starts at 1).
struct AccumulatorState {
    Variant variant = Variant::caf1;
    double value = 0.0;

    static AccumulatorState initial(Variant v) { return {v, v == Variant::caf1 ? 0.0 : 1.0}; }
};

/// Coupling produced by a trial lambda: a_{k+1} or alpha_{k+1}, and the
/// extrapolated point tilde v_k.
struct Coupling {
    double lambda = 0.0;
    double weight = 0.0;
    Vector tilde_v;
};

inline Coupling couple(const AccumulatorState& acc, double lambda, const Vector& x, const Vector& v)
{
    Coupling c{lambda, 0.0, {}};
    if (acc.variant == Variant::caf1) {
        c.weight = a_next(acc.value, lambda);
        const double total = acc.value + c.weight;
        c.tilde_v = (acc.value / total) * x + (c.weight / total) * v;
    } else {
        c.weight = alpha_next(acc.value, lambda);
        c.tilde_v = (1.0 - c.weight) * x + c.weight * v;
    }
    return c;
}

/// Accumulator after accepting coupling `c`: A + a or (1 - alpha) gamma.
inline AccumulatorState advance(const AccumulatorState& acc, const Coupling& c)
{
    if (acc.variant == Variant::caf1) return {acc.variant, acc.value + c.weight};
    return {acc.variant, (1.0 - c.weight) * acc.value};
}

/// Residual of the defining quadratic of the coupling weight, relative to its
/// sensitivity to a perturbation of the weight (lambda gamma for CAF-II).
inline double recurrence_residual(const AccumulatorState& acc, double lambda, double weight)
{
    if (acc.variant == Variant::caf1) {
        const double lhs = weight * weight, rhs = lambda * (acc.value + weight);
        return std::abs(lhs - rhs) / (1.0 + lhs);
    }
    const double lhs = weight * weight, rhs = lambda * (1.0 - weight) * acc.value;
    return std::abs(lhs - rhs) / (1.0 + lhs + lambda * acc.value);
}

/// Output of one proximal-type subproblem at (lambda, tilde v): the triple
/// (x, w, eps) of the frameworks.
struct ProximalPoint {
    Vector x;
    Vector w;
    double eps = 0.0;
};

struct BisectOptions {
    int max_doublings = 60;
    int max_probes = 200;
};

struct SearchResult {
    Coupling coupling;
    ProximalPoint point;
    double large_step = 0.0;
    int probes = 0;
};

/// Finds lambda whose coupled subproblem solution lands in the large-step window.
///
/// `solve(lambda, tilde_v)` returns the proximal point for that trial. The
/// search starts from `lambda0`, expands the bracket by factors of two and then
/// bisects on log(lambda). For p = 1 the window does not depend on the
/// displacement, so lambda = theta_low is returned without probing.
template <class Solve>
SearchResult bisect_lambda(const AccumulatorState& acc, const Vector& x, const Vector& v, const FeedbackParams& window,
                           double lambda0, Solve&& solve, const BisectOptions& opt = {})
{
    SearchResult out;
    auto probe = [&](double lambda) {
        out.coupling = couple(acc, lambda, x, v);
        out.point = solve(lambda, out.coupling.tilde_v);
        const double r = (out.point.x - out.coupling.tilde_v).norm();
        out.large_step = large_step_value(lambda, r, window.p);
        return large_step_check(lambda, r, window);
    };

    if (window.p == 1) {
        probe(window.theta_low);
        return out;
    }

    double lambda = lambda0 > 0.0 && std::isfinite(lambda0) ? lambda0 : 1.0;
    Window w = probe(lambda);
    ++out.probes;
    if (w == Window::inside) return out;

    double lo = 0.0, hi = 0.0; // lo is below, hi is above
    const Window start = w;
    for (int i = 0; i < opt.max_doublings && w == start; ++i) {
        const double prev = lambda;
        lambda = start == Window::below ? 2.0 * lambda : 0.5 * lambda;
        w = probe(lambda);
        ++out.probes;
        if (w == Window::inside) return out;
        if (w != start) {
            lo = start == Window::below ? prev : lambda;
            hi = start == Window::below ? lambda : prev;
        }
    }
    if (w == start)
        throw SolverFailure(std::string("bisection: no bracket after ") + std::to_string(opt.max_doublings) +
                            " doublings (large-step value stays " + to_string(start) + ")");

    while (out.probes < opt.max_probes) {
        lambda = std::sqrt(lo * hi);
        if (!(lambda > lo && lambda < hi))
            throw SolverFailure("bisection: bracket collapsed without meeting the window");
        w = probe(lambda);
        ++out.probes;
        if (w == Window::inside) return out;
        (w == Window::below ? lo : hi) = lambda;
    }
    throw SolverFailure("bisection: probe budget exhausted");
}

} // namespace hoa
