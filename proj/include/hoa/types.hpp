#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace hoa {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Point dimension does not match the problem, or order is not supported.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// The gradient vanished where the feedback law needs a positive norm.
class StationaryPoint : public Error {
public:
    using Error::Error;
};

/// An inner solver or search exhausted its iteration budget.
class SolverFailure : public Error {
public:
    using Error::Error;
};

inline constexpr double factorial(int n)
{
    double r = 1.0;
    for (int i = 2; i <= n; ++i) r *= i;
    return r;
}

} // namespace hoa
