#pragma once

// Dormand-Prince 5(4) with PI step-size control.

#include "hoa/types.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace hoa {

struct OdeOptions {
    double abs_tol = 1e-9;
    double rel_tol = 1e-9;
    double initial_step = 0.0; ///< 0 picks a step from the initial derivative
    double max_step = 0.0;     ///< 0 means unbounded
    long max_steps = 50'000'000;
};

struct OdeStats {
    long accepted = 0;
    long rejected = 0;
    long rhs_evaluations = 0;
};

enum class OdeStatus { reached, stopped, step_underflow, step_limit };

inline const char* to_string(OdeStatus s)
{
    switch (s) {
    case OdeStatus::reached: return "reached";
    case OdeStatus::stopped: return "stopped";
    case OdeStatus::step_underflow: return "step-underflow";
    default: return "step-limit";
    }
}

/// Integrates y' = f(t, y) from t0 through the increasing `times`, calling
/// `observe(t, y)` at t0 and at every entry of `times` (steps are shortened to
/// land on them). `stop(t, y)` is consulted after every accepted step; when it
/// returns true the integration ends with status `stopped` and the current
/// state is observed once more.
///
/// `f(t, y, dy)` writes the derivative into dy.
template <class Rhs, class Observe, class Stop>
OdeStatus dopri5(Rhs&& f, double t0, Vector y, const std::vector<double>& times, Observe&& observe, Stop&& stop,
                 const OdeOptions& opt, OdeStats* stats = nullptr)
{
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                            a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                            e6 = 22.0 / 525, e7 = -1.0 / 40;
    // PI controller gains
    static constexpr double beta = 0.04, alpha = 0.2 - 0.75 * beta, safety = 0.9;

    OdeStats local;
    OdeStats& st = stats ? *stats : local;
    const Eigen::Index n = y.size();
    Vector k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), yt(n), ynew(n), err(n);

    double t = t0;
    observe(t, y);
    f(t, y, k1);
    ++st.rhs_evaluations;

    auto error_norm = [&](const Vector& e, const Vector& y0, const Vector& y1) {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double sc = opt.abs_tol + opt.rel_tol * std::max(std::abs(y0(i)), std::abs(y1(i)));
            acc += (e(i) / sc) * (e(i) / sc);
        }
        return std::sqrt(acc / static_cast<double>(n));
    };

    double h = opt.initial_step;
    if (!(h > 0.0)) {
        const double d0 = error_norm(y, Vector::Zero(n), y), d1 = error_norm(k1, Vector::Zero(n), y);
        h = d0 < 1e-5 || d1 < 1e-5 ? 1e-6 : 0.01 * d0 / d1;
    }
    double err_prev = 1e-4;
    bool rejected_last = false;

    for (double target : times) {
        if (target < t) continue;
        while (t < target) {
            if (st.accepted + st.rejected >= opt.max_steps) return OdeStatus::step_limit;
            if (opt.max_step > 0.0) h = std::min(h, opt.max_step);
            const double proposed = h;
            bool land = false;
            if (t + h >= target) {
                h = target - t;
                land = true;
            } else if (t + 1.5 * h >= target) {
                h = 0.5 * (target - t);
            }
            if (h < 1e-14 * std::max(1.0, std::abs(t))) return OdeStatus::step_underflow;

            yt = y + h * a21 * k1;
            f(t + c2 * h, yt, k2);
            yt = y + h * (a31 * k1 + a32 * k2);
            f(t + c3 * h, yt, k3);
            yt = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
            f(t + c4 * h, yt, k4);
            yt = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
            f(t + c5 * h, yt, k5);
            yt = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
            f(t + h, yt, k6);
            ynew = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
            f(t + h, ynew, k7);
            st.rhs_evaluations += 6;
            err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

            double en = error_norm(err, y, ynew);
            if (!std::isfinite(en)) en = 1e10;
            if (en <= 1.0) {
                double fac = en == 0.0 ? 10.0 : safety * std::pow(err_prev, beta) / std::pow(en, alpha);
                fac = std::clamp(fac, 0.2, 10.0);
                if (rejected_last) fac = std::min(fac, 1.0);
                err_prev = std::max(en, 1e-4);
                rejected_last = false;
                t = land ? target : t + h;
                y.swap(ynew);
                k1.swap(k7);
                ++st.accepted;
                h = h < proposed ? std::max(h * fac, proposed) : h * fac;
                if (stop(t, y)) {
                    observe(t, y);
                    return OdeStatus::stopped;
                }
            } else {
                ++st.rejected;
                rejected_last = true;
                h *= std::max(0.2, safety * std::pow(en, -alpha));
            }
        }
        observe(t, y);
    }
    return OdeStatus::reached;
}

} // namespace hoa
