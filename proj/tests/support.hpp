#pragma once

// Shared fixtures for the test binaries.

#include "hoa/hoa.hpp"

#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace hoa::test {

inline Vector random_point(int d, std::mt19937_64& rng, double scale = 1.0)
{
    std::normal_distribution<double> n01(0.0, 1.0);
    Vector v(d);
    for (int i = 0; i < d; ++i) v(i) = scale * n01(rng);
    return v;
}

/// Phi(x) = 1/2 sum q_i x_i^2.
inline QuadraticProblem diagonal_quadratic(const std::vector<double>& q)
{
    const int d = static_cast<int>(q.size());
    Vector diag(d);
    for (int i = 0; i < d; ++i) diag(i) = q[i];
    return {diag.asDiagonal().toDenseMatrix(), Vector::Zero(d)};
}

/// One small instance of every built-in problem.
inline std::vector<std::shared_ptr<Problem>> builtin_problems()
{
    return {make_problem("quadratic", {{"dim", 4}, {"condition", 50}}, 3),
            make_problem("lse", {{"dim", 5}}, 4),
            make_problem("logistic", {{"dim", 4}, {"samples", 30}, {"mu", 0.1}}, 5),
            make_problem("quartic", {{"dim", 3}, {"mu", 0.5}, {"radius", 4}}, 6)};
}

/// Fresh scratch directory under the system temp path.
inline std::filesystem::path scratch_dir(const std::string& name)
{
    const auto dir = std::filesystem::temp_directory_path() / ("hoa_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace hoa::test
