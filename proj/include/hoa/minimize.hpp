#pragma once

#include "hoa/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hoa {

struct NewtonOptions {
    double tol = 1e-10; ///< absolute tolerance on the gradient norm
    int max_iter = 200;
};

struct NewtonResult {
    Vector x;
    double grad_norm = 0.0;
    int iterations = 0;
    bool converged = false;
    bool stalled = false; ///< no progress in value or gradient norm: rounding floor reached
};

/// Damped Newton for smooth convex objectives. `Objective` exposes
/// value(x), gradient(x) and hessian(x).
///
/// A step is accepted on Armijo decrease or on a decrease of the gradient norm;
/// the latter keeps the iteration moving once function values stop resolving
/// progress near the minimizer. Falls back to steepest descent with
/// backtracking if the Newton direction cannot be accepted. Ten iterations
/// without a relative decrease of the value or a halving-scale decrease of the
/// gradient norm mark the result as stalled.
template <class Objective>
NewtonResult damped_newton(const Objective& f, Vector x, const NewtonOptions& opt = {})
{
    NewtonResult res;
    const int d = static_cast<int>(x.size());
    double best_gn = std::numeric_limits<double>::infinity();
    double best_f = std::numeric_limits<double>::infinity();
    int idle = 0;
    for (int it = 0; it <= opt.max_iter; ++it) {
        const Vector g = f.gradient(x);
        const double gn = g.norm();
        res.grad_norm = gn;
        res.iterations = it;
        if (gn <= opt.tol || !std::isfinite(gn)) {
            res.converged = gn <= opt.tol;
            break;
        }
        const double fx = f.value(x);
        if (gn < 0.9 * best_gn || fx < best_f - 1e-12 * std::abs(best_f)) {
            idle = 0;
        } else if (++idle >= 10) {
            res.stalled = true;
            break;
        }
        best_gn = std::min(best_gn, gn);
        best_f = std::min(best_f, fx);
        if (it == opt.max_iter) break;

        Matrix H = f.hessian(x);
        Vector dir;
        double shift = 0.0;
        const double hscale = 1.0 + H.cwiseAbs().maxCoeff();
        for (int attempt = 0; attempt < 30; ++attempt) {
            Eigen::LLT<Matrix> llt(H + shift * Matrix::Identity(d, d));
            if (llt.info() == Eigen::Success) {
                dir = -llt.solve(g);
                break;
            }
            shift = shift == 0.0 ? 1e-12 * hscale : 10.0 * shift;
        }
        if (dir.size() == 0 || !(g.dot(dir) < 0.0)) dir = -g / hscale;

        auto try_direction = [&](const Vector& p) {
            const double slope = g.dot(p);
            double t = 1.0;
            for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
                Vector xt = x + t * p;
                const double ft = f.value(xt);
                if (std::isfinite(ft) && (ft <= fx + 1e-4 * t * slope || f.gradient(xt).norm() < gn)) {
                    x = std::move(xt);
                    return true;
                }
            }
            return false;
        };
        if (!try_direction(dir) && !try_direction(-g / hscale)) {
            res.stalled = true;
            break;
        }
    }
    res.x = std::move(x);
    return res;
}

} // namespace hoa
