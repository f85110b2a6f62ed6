#pragma once

// Regularized p-th order Taylor model
//   Phi_v(u) = sum_{j<=p} (1/j!) D^j Phi(v)[u-v]^j + ell |u-v|^{p+1} / (p+1)!
// and the two subproblems used by the tensor methods:
//   regularized    min_u Phi_v(u) + |u-v|^2 / (2 lambda)   (solved to sigma_hat-inexactness)
//   unregularized  min_u Phi_v(u)                          (solved to a residual tolerance)
//
// p = 1 has a closed form. p = 2 reduces to a scalar secular equation in
// r = |u-v| through one eigendecomposition of the Hessian at v. p = 3 uses
// damped Newton on the model.

#include "hoa/minimize.hpp"
#include "hoa/oracle.hpp"

#include <boost/math/tools/toms748_solve.hpp>

#include <cmath>
#include <cstdio>
#include <cstdint>
#include <limits>

namespace hoa {

class TaylorModel {
public:
    /// Caches value, gradient and (p >= 2) Hessian of `problem` at `center`.
    /// For p = 3 the model keeps a reference to `problem`, which must outlive it.
    TaylorModel(const Problem& problem, Vector center, int order, double ell)
        : v_(std::move(center)), p_(order), ell_(ell)
    {
        if (order < 1 || order > 3) throw InvalidArgument("model: order must be 1, 2 or 3");
        if (!(ell > 0.0)) throw InvalidArgument("model: ell must be positive");
        const OracleEvaluation ev = evaluate(problem, v_, order);
        f_ = ev.value;
        g_ = ev.gradient;
        if (order >= 2) {
            h_ = *ev.hessian;
            Eigen::SelfAdjointEigenSolver<Matrix> eig(h_);
            evals_ = eig.eigenvalues().cwiseMax(0.0);
            evecs_ = eig.eigenvectors();
        }
        if (order == 3) third_ = ev.third_action;
    }

    int order() const { return p_; }
    double ell() const { return ell_; }
    const Vector& center() const { return v_; }
    double center_value() const { return f_; }
    const Vector& center_gradient() const { return g_; }
    const Matrix& center_hessian() const { return h_; }
    const Vector& hessian_eigenvalues() const { return evals_; }
    const Matrix& hessian_eigenvectors() const { return evecs_; }

    double value(const Vector& u) const
    {
        const Vector h = u - v_;
        const double r = h.norm();
        double out = f_ + g_.dot(h);
        if (p_ >= 2) out += 0.5 * h.dot(h_ * h);
        if (p_ >= 3) out += third_(h, h).dot(h) / 6.0;
        return out + ell_ * std::pow(r, p_ + 1) / factorial(p_ + 1);
    }

    Vector gradient(const Vector& u) const
    {
        const Vector h = u - v_;
        const double r = h.norm();
        Vector out = g_;
        if (p_ >= 2) out += h_ * h;
        if (p_ >= 3) out += 0.5 * third_(h, h);
        return out + (ell_ * std::pow(r, p_ - 1) / factorial(p_)) * h;
    }

    Matrix hessian(const Vector& u) const
    {
        const Eigen::Index d = v_.size();
        const Vector h = u - v_;
        const double r = h.norm();
        Matrix out = p_ >= 2 ? h_ : Matrix::Zero(d, d);
        if (p_ >= 3)
            for (Eigen::Index j = 0; j < d; ++j) out.col(j) += third_(h, Vector::Unit(d, j));
        // Hessian of ell r^{p+1}/(p+1)!: ell/p! (r^{p-1} I + (p-1) r^{p-3} h h^T)
        const double c = ell_ / factorial(p_);
        out.diagonal().array() += c * std::pow(r, p_ - 1);
        if (p_ >= 2 && r > 0.0) out += c * (p_ - 1) * std::pow(r, p_ - 3) * h * h.transpose();
        return out;
    }

private:
    Vector v_;
    int p_;
    double ell_;
    double f_ = 0.0;
    Vector g_;
    Matrix h_;
    Vector evals_;
    Matrix evecs_;
    ThirdAction third_;
};

struct SubproblemSolution {
    Vector u;
    double r = 0.0;               ///< |u - v|
    Vector model_gradient;        ///< grad Phi_v(u)
    double residual = 0.0;        ///< |lambda grad Phi_v(u) + u - v| (regularized) or |grad Phi_v(u)|
    double inexactness_ratio = 0; ///< residual / r for the regularized problem, 0 when degenerate
    int inner_iterations = 0;
};

struct SubproblemOptions {
    double tol = 1e-10;
    int max_iter = 200;
};

namespace detail {

inline std::string sci(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", x);
    return buf;
}

/// Minimizer of Phi_v(u) + rho/2 |u-v|^2 for p = 2: the stationarity system
/// (H + (ell r / 2 + rho) I) h = -g with r = |h| has a unique root in r.
inline Vector solve_cubic_secular(const TaylorModel& m, double rho, int& iterations)
{
    const Vector& g = m.center_gradient();
    const double gn = g.norm();
    const Vector b = m.hessian_eigenvectors().transpose() * g;
    const Vector& e = m.hessian_eigenvalues();
    const double half_ell = 0.5 * m.ell();

    auto step_norm = [&](double r) {
        const double shift = half_ell * r + rho;
        return (b.array() / (e.array() + shift)).matrix().norm();
    };
    auto phi = [&](double r) { return r - step_norm(r); };

    double hi = std::sqrt(2.0 * gn / m.ell());
    if (rho > 0.0) hi = std::min(hi, gn / rho);
    double lo = 0.0;
    if (!std::isfinite(phi(lo))) {
        lo = hi;
        while (lo > std::numeric_limits<double>::min() && phi(lo) >= 0.0) lo *= 0.5;
    }
    double r = hi;
    if (phi(hi) > 0.0 && phi(lo) < 0.0) {
        std::uintmax_t iters = 200;
        auto root = boost::math::tools::toms748_solve(phi, lo, hi, boost::math::tools::eps_tolerance<double>(), iters);
        iterations += static_cast<int>(iters);
        r = 0.5 * (root.first + root.second);
    } else if (phi(lo) >= 0.0) {
        r = lo;
    }
    const double shift = half_ell * r + rho;
    return -(m.hessian_eigenvectors() * (b.array() / (e.array() + shift)).matrix());
}

/// Model plus proximal term, as an objective for damped Newton.
struct ProximalModel {
    const TaylorModel& m;
    double rho;
    double value(const Vector& u) const { return m.value(u) + 0.5 * rho * (u - m.center()).squaredNorm(); }
    Vector gradient(const Vector& u) const { return m.gradient(u) + rho * (u - m.center()); }
    Matrix hessian(const Vector& u) const
    {
        Matrix h = m.hessian(u);
        h.diagonal().array() += rho;
        return h;
    }
};

inline Vector minimize_model(const TaylorModel& m, double rho, double tol, const SubproblemOptions& opt, int& iterations,
                             const Vector* start = nullptr)
{
    const Vector& g = m.center_gradient();
    const double target = std::max(tol, 1e-14 * g.norm());
    ProximalModel obj{m, rho};
    switch (m.order()) {
    case 1: return m.center() - g / (m.ell() + rho);
    case 2: {
        Vector u = start ? *start : Vector(m.center() + solve_cubic_secular(m, rho, iterations));
        if (obj.gradient(u).norm() > target) {
            auto res = damped_newton(obj, u, {target, 20});
            iterations += res.iterations;
            u = res.x;
        }
        return u;
    }
    default: {
        auto res = damped_newton(obj, start ? *start : Vector(m.center()), {target, opt.max_iter});
        iterations += res.iterations;
        if (!res.converged && !res.stalled)
            throw SolverFailure("model: inner Newton iteration cap exceeded (|grad| = " +
                                std::to_string(res.grad_norm) + ")");
        return res.x;
    }
    }
}

} // namespace detail

/// Global minimizer of Phi_v up to ||grad Phi_v(u)|| <= tol * max(1, ||grad Phi(v)||).
inline SubproblemSolution solve_unregularized(const TaylorModel& m, double tol = 1e-10, const SubproblemOptions& opt = {})
{
    SubproblemSolution sol;
    const double target = tol * std::max(1.0, m.center_gradient().norm());
    if (m.center_gradient().norm() == 0.0) {
        sol.u = m.center();
        sol.model_gradient = Vector::Zero(m.center().size());
        return sol;
    }
    const double inner = std::min(target, 1e-6 * m.center_gradient().norm());
    sol.u = detail::minimize_model(m, 0.0, inner, opt, sol.inner_iterations);
    sol.model_gradient = m.gradient(sol.u);
    sol.r = (sol.u - m.center()).norm();
    sol.residual = sol.model_gradient.norm();
    if (!(sol.residual <= target))
        throw SolverFailure("model: unregularized solve missed tolerance (residual " + std::to_string(sol.residual) + ")");
    return sol;
}

/// sigma_hat-inexact minimizer of Phi_v(u) + |u-v|^2/(2 lambda):
/// |lambda grad Phi_v(u) + u - v| <= sigma_hat |u - v|. When |u - v| <= 10 tol
/// the ratio is undefined and exact stationarity (residual <= tol) is required.
inline SubproblemSolution solve_regularized(const TaylorModel& m, double lambda, double sigma_hat, double tol = 1e-10,
                                            const SubproblemOptions& opt = {})
{
    if (!(lambda > 0.0)) throw InvalidArgument("model: lambda must be positive");
    if (!(sigma_hat > 0.0 && sigma_hat < 1.0)) throw InvalidArgument("model: sigma_hat must lie in (0, 1)");
    SubproblemSolution sol;
    if (m.center_gradient().norm() == 0.0) {
        sol.u = m.center();
        sol.model_gradient = Vector::Zero(m.center().size());
        return sol;
    }
    auto measure = [&] {
        sol.model_gradient = m.gradient(sol.u);
        const Vector h = sol.u - m.center();
        sol.r = h.norm();
        sol.residual = (lambda * sol.model_gradient + h).norm();
    };
    const double gn = m.center_gradient().norm();
    sol.u = detail::minimize_model(m, 1.0 / lambda, std::min(tol, 1e-6 * lambda * gn) / lambda, opt,
                                   sol.inner_iterations);
    measure();
    for (int pass = 0; pass < 5 && sol.r > 10.0 * tol && sol.residual > 0.01 * sigma_hat * sol.r; ++pass) {
        const Vector start = sol.u;
        sol.u = detail::minimize_model(m, 1.0 / lambda, 1e-3 * sigma_hat * sol.r / lambda, opt,
                                       sol.inner_iterations, &start);
        measure();
    }
    if (sol.r <= 10.0 * tol) {
        if (!(sol.residual <= tol))
            throw SolverFailure("model: degenerate regularized solve is not stationary");
        sol.inexactness_ratio = 0.0;
        return sol;
    }
    sol.inexactness_ratio = sol.residual / sol.r;
    if (!(sol.inexactness_ratio <= sigma_hat))
        throw SolverFailure("model: regularized solve missed the sigma_hat test (ratio " +
                            detail::sci(sol.inexactness_ratio) + ", r " + detail::sci(sol.r) + ")");
    return sol;
}

} // namespace hoa
