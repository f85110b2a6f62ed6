#pragma once

#include "hoa/types.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <string>

namespace hoa {

/// Third derivative applied to two directions, returned as a vector:
/// T(u, v)_i = sum_jk d^3 f / dx_i dx_j dx_k u_j v_k.
using ThirdAction = std::function<Vector(const Vector&, const Vector&)>;

struct OracleEvaluation {
    double value = 0.0;
    Vector gradient;
    std::optional<Matrix> hessian;
    ThirdAction third_action; // empty unless order 3 was requested
};

/// A convex, smooth objective with analytic derivatives up to `max_order()`.
///
/// Implementations are immutable after construction, so every query is a pure
/// function of the point and may be issued from several threads.
class Problem {
public:
    virtual ~Problem() = default;

    virtual std::string name() const = 0;
    virtual int dimension() const = 0;
    virtual int max_order() const { return 3; }

    virtual double value(const Vector& x) const = 0;
    virtual Vector gradient(const Vector& x) const = 0;
    virtual Matrix hessian(const Vector& x) const = 0;
    virtual Vector third_action(const Vector& x, const Vector& u, const Vector& v) const = 0;

    virtual std::optional<Vector> minimizer() const { return std::nullopt; }
    virtual std::optional<double> min_value() const { return std::nullopt; }

    /// Phi(x) - Phi(x*). Near x* the value difference cancels, so small gaps
    /// integrate grad Phi(x* + t d).d over [0, 1] by Gauss-Legendre instead.
    virtual double gap(const Vector& x) const
    {
        auto fmin = min_value();
        if (!fmin) throw InvalidArgument(name() + ": minimum value unknown");
        const double naive = value(x) - *fmin;
        auto xs = minimizer();
        if (!xs || std::abs(naive) > 1e-6 * (1.0 + std::abs(*fmin))) return naive;
        const Vector d = x - *xs;
        return boost::math::quadrature::gauss<double, 10>::integrate(
            [&](double t) { return gradient(*xs + t * d).dot(d); }, 0.0, 1.0);
    }

    /// Lipschitz constant of the p-th derivative used by the tensor methods.
    virtual double lipschitz(int p) const = 0;

    /// Construction parameters, echoed into run artifacts.
    virtual std::map<std::string, double> parameters() const { return {}; }
};

inline void check_dimension(const Problem& problem, const Vector& x)
{
    if (x.size() != problem.dimension())
        throw InvalidArgument(problem.name() + ": point has dimension " + std::to_string(x.size()) +
                              ", expected " + std::to_string(problem.dimension()));
}

inline OracleEvaluation evaluate(const Problem& problem, const Vector& x, int order)
{
    check_dimension(problem, x);
    if (order < 0 || order > problem.max_order())
        throw InvalidArgument(problem.name() + ": unsupported derivative order " + std::to_string(order));

    OracleEvaluation out;
    out.value = problem.value(x);
    if (order >= 1) out.gradient = problem.gradient(x);
    if (order >= 2) out.hessian = problem.hessian(x);
    if (order >= 3) {
        const Problem* p = &problem;
        out.third_action = [p, x](const Vector& u, const Vector& v) { return p->third_action(x, u, v); };
    }
    return out;
}

/// Max relative error of central finite differences against the analytic
/// derivatives. Error is |fd - exact|_inf / max(1, |exact|_inf).
struct DerivativeReport {
    double gradient_error = 0.0;
    std::optional<double> hessian_error;
    std::optional<double> third_error;

    double worst() const
    {
        return std::max({gradient_error, hessian_error.value_or(0.0), third_error.value_or(0.0)});
    }
};

namespace detail {
inline double relative_error(const Eigen::Ref<const Matrix>& fd, const Eigen::Ref<const Matrix>& exact)
{
    const double scale = std::max(1.0, exact.cwiseAbs().maxCoeff());
    return (fd - exact).cwiseAbs().maxCoeff() / scale;
}
} // namespace detail

inline DerivativeReport check_derivatives(const Problem& problem, const Vector& x, double step)
{
    check_dimension(problem, x);
    const int d = problem.dimension();
    DerivativeReport report;

    Vector fd_grad(d);
    for (int i = 0; i < d; ++i) {
        Vector xp = x, xm = x;
        xp(i) += step;
        xm(i) -= step;
        fd_grad(i) = (problem.value(xp) - problem.value(xm)) / (2.0 * step);
    }
    report.gradient_error = detail::relative_error(fd_grad, problem.gradient(x));

    if (problem.max_order() >= 2) {
        Matrix fd_hess(d, d);
        for (int j = 0; j < d; ++j) {
            Vector xp = x, xm = x;
            xp(j) += step;
            xm(j) -= step;
            fd_hess.col(j) = (problem.gradient(xp) - problem.gradient(xm)) / (2.0 * step);
        }
        report.hessian_error = detail::relative_error(fd_hess, problem.hessian(x));
    }

    if (problem.max_order() >= 3) {
        double worst = 0.0;
        for (int j = 0; j < d; ++j) {
            Vector xp = x, xm = x;
            xp(j) += step;
            xm(j) -= step;
            const Matrix fd = (problem.hessian(xp) - problem.hessian(xm)) / (2.0 * step);
            Matrix exact(d, d);
            for (int i = 0; i < d; ++i)
                exact.col(i) = problem.third_action(x, Vector::Unit(d, i), Vector::Unit(d, j));
            worst = std::max(worst, detail::relative_error(fd, exact));
        }
        report.third_error = worst;
    }
    return report;
}

} // namespace hoa
