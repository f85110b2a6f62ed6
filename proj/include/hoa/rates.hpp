#pragma once

#include "hoa/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace hoa {

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    double window_min = 0.0;
    double window_max = 0.0;
    int points = 0;
};

/// Least-squares line through (log index, log value) for indices in
/// [window_min, window_max]. Needs at least `min_points` points, and every
/// value in the window must be positive.
inline RateFit fit_rate(const std::vector<double>& index, const std::vector<double>& value, double window_min,
                        double window_max, int min_points = 10)
{
    if (index.size() != value.size()) throw InvalidArgument("fit_rate: index and value lengths differ");
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < index.size(); ++i) {
        if (index[i] < window_min || index[i] > window_max) continue;
        if (!(index[i] > 0.0)) throw InvalidArgument("fit_rate: index must be positive inside the window");
        if (!(value[i] > 0.0))
            throw InvalidArgument("fit_rate: nonpositive value " + std::to_string(value[i]) + " at index " +
                                  std::to_string(index[i]));
        lx.push_back(std::log(index[i]));
        ly.push_back(std::log(value[i]));
    }
    const int n = static_cast<int>(lx.size());
    if (n < min_points)
        throw InvalidArgument("fit_rate: window holds " + std::to_string(n) + " points, need " + std::to_string(min_points));

    double mx = 0.0, my = 0.0;
    for (int i = 0; i < n; ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (int i = 0; i < n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
        syy += (ly[i] - my) * (ly[i] - my);
    }
    if (!(sxx > 0.0)) throw InvalidArgument("fit_rate: window has a single distinct index");

    RateFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r_squared = syy > 0.0 ? std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0) : 1.0;
    fit.window_min = window_min;
    fit.window_max = window_max;
    fit.points = n;
    return fit;
}

/// Running minimum of a series.
inline std::vector<double> running_min(const std::vector<double>& v)
{
    std::vector<double> out(v.size());
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = m = std::min(m, v[i]);
    return out;
}

/// Largest index such that every value from the first index up to it is
/// positive and finite; -inf when the series starts nonpositive.
inline double positive_prefix_end(const std::vector<double>& index, const std::vector<double>& value, double from)
{
    double end = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < index.size(); ++i) {
        if (index[i] < from) continue;
        if (!(value[i] > 0.0) || !std::isfinite(value[i])) break;
        end = index[i];
    }
    return end;
}

} // namespace hoa
