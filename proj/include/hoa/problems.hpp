#pragma once

// Built-in convex test problems with analytic derivatives up to order three
// and known minimizers. Each documents the Lipschitz constant it reports for
// p = 1, 2, 3. For p = 3 the reported constant is three times the bound on the
// fourth derivative, which makes the regularized third-order Taylor model
// convex; it remains a valid (if loose) Lipschitz constant.

#include "hoa/minimize.hpp"
#include "hoa/oracle.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <string>

namespace hoa {

namespace detail {
inline Matrix gaussian_matrix(int rows, int cols, std::mt19937_64& rng, double scale = 1.0)
{
    std::normal_distribution<double> n01(0.0, 1.0);
    Matrix m(rows, cols);
    for (int j = 0; j < cols; ++j)
        for (int i = 0; i < rows; ++i) m(i, j) = scale * n01(rng);
    return m;
}

inline Vector gaussian_vector(int n, std::mt19937_64& rng, double scale = 1.0)
{
    return gaussian_matrix(n, 1, rng, scale).col(0);
}

inline double max_row_norm(const Matrix& a) { return a.rowwise().norm().maxCoeff(); }

inline double max_eigenvalue(const Matrix& sym)
{
    return Eigen::SelfAdjointEigenSolver<Matrix>(sym, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
}
} // namespace detail

/// Phi(x) = 1/2 (x - c)^T Q (x - c), Q symmetric positive definite.
///
/// ell_1 = lambda_max(Q). Higher derivatives are constant (p = 2) or zero
/// (p = 3), so any positive constant is valid; `ell` sets it (default 1).
class QuadraticProblem final : public Problem {
public:
    QuadraticProblem(Matrix q, Vector center, double ell_higher = 1.0)
        : q_(std::move(q)), c_(std::move(center)), ell_higher_(ell_higher)
    {
        if (q_.rows() != q_.cols() || q_.rows() != c_.size())
            throw InvalidArgument("quadratic: Q and center sizes disagree");
        lmax_ = detail::max_eigenvalue(q_);
    }

    /// Spectrum geometric on [lambda_max / condition, lambda_max], rotated by a
    /// seeded random orthogonal matrix unless `rotate` is false.
    static QuadraticProblem spd(int dim, double condition, std::uint64_t seed, double lambda_max = 1.0,
                                bool rotate = true, double ell_higher = 1.0)
    {
        if (dim < 1 || condition < 1.0) throw InvalidArgument("quadratic: need dim >= 1 and condition >= 1");
        std::mt19937_64 rng(seed);
        Vector spectrum(dim);
        for (int i = 0; i < dim; ++i) {
            const double frac = dim == 1 ? 1.0 : static_cast<double>(i) / (dim - 1);
            spectrum(i) = lambda_max * std::pow(condition, frac - 1.0);
        }
        Matrix u = Matrix::Identity(dim, dim);
        if (rotate) u = Eigen::HouseholderQR<Matrix>(detail::gaussian_matrix(dim, dim, rng)).householderQ();
        Matrix q = u * spectrum.asDiagonal() * u.transpose();
        q = 0.5 * (q + q.transpose()).eval();
        Vector center = detail::gaussian_vector(dim, rng);
        QuadraticProblem out(std::move(q), std::move(center), ell_higher);
        out.condition_ = condition;
        return out;
    }

    std::string name() const override { return "quadratic"; }
    int dimension() const override { return static_cast<int>(c_.size()); }

    double value(const Vector& x) const override
    {
        const Vector d = x - c_;
        return 0.5 * d.dot(q_ * d);
    }
    Vector gradient(const Vector& x) const override { return q_ * (x - c_); }
    Matrix hessian(const Vector&) const override { return q_; }
    Vector third_action(const Vector& x, const Vector&, const Vector&) const override
    {
        return Vector::Zero(x.size());
    }

    std::optional<Vector> minimizer() const override { return c_; }
    std::optional<double> min_value() const override { return 0.0; }
    double gap(const Vector& x) const override { return value(x); }

    double lipschitz(int p) const override { return p == 1 ? lmax_ : ell_higher_; }

    std::map<std::string, double> parameters() const override
    {
        return {{"dim", static_cast<double>(dimension())}, {"condition", condition_}, {"lambda_max", lmax_},
                {"ell", ell_higher_}};
    }

    const Matrix& matrix() const { return q_; }

private:
    Matrix q_;
    Vector c_;
    double ell_higher_;
    double lmax_ = 0.0;
    double condition_ = 0.0;
};

/// Symmetric log-sum-exp over affine forms:
///   Phi(x) = log sum_i [exp(a_i^T (x - c)) + exp(-a_i^T (x - c))].
/// Minimized at c with value log(2m) whenever the a_i span R^d.
///
/// Derivatives of order n are the n-th cumulants of s = b_j^T h under the
/// softmax weights, where b_j ranges over +-a_i. With R = max |a_i|:
///   ell_1 = R^2, ell_2 = 2 R^3 (third cumulant), ell_3 = 3 * 4 R^4.
class LogSumExpProblem final : public Problem {
public:
    LogSumExpProblem(Matrix a, Vector center) : a_(std::move(a)), c_(std::move(center))
    {
        if (a_.cols() != c_.size()) throw InvalidArgument("lse: A and center sizes disagree");
        r_ = detail::max_row_norm(a_);
    }

    /// `forms` rows with N(0, 1/dim) entries, so rows have norm close to one.
    static LogSumExpProblem random(int dim, int forms, std::uint64_t seed)
    {
        if (dim < 1 || forms < dim) throw InvalidArgument("lse: need forms >= dim >= 1");
        std::mt19937_64 rng(seed);
        Matrix a = detail::gaussian_matrix(forms, dim, rng, 1.0 / std::sqrt(static_cast<double>(dim)));
        Vector center = detail::gaussian_vector(dim, rng);
        return {std::move(a), std::move(center)};
    }

    std::string name() const override { return "lse"; }
    int dimension() const override { return static_cast<int>(c_.size()); }

    double value(const Vector& x) const override
    {
        const Vector z = a_ * (x - c_);
        const double shift = z.cwiseAbs().maxCoeff();
        const double sum = ((z.array() - shift).exp() + (-z.array() - shift).exp()).sum();
        return shift + std::log(sum);
    }

    double gap(const Vector& x) const override
    {
        const Vector z = a_ * (x - c_);
        if (z.cwiseAbs().maxCoeff() < 20.0) {
            // log(mean cosh z_i) = log1p(mean 2 sinh^2(z_i / 2))
            const double excess = (2.0 * (0.5 * z.array()).sinh().square()).mean();
            return std::log1p(excess);
        }
        return value(x) - *min_value();
    }

    Vector gradient(const Vector& x) const override
    {
        const Weights w = weights(x);
        return a_.transpose() * (w.plus - w.minus);
    }

    Matrix hessian(const Vector& x) const override
    {
        const Weights w = weights(x);
        const Vector mean = a_.transpose() * (w.plus - w.minus);
        return a_.transpose() * (w.plus + w.minus).asDiagonal() * a_ - mean * mean.transpose();
    }

    Vector third_action(const Vector& x, const Vector& u, const Vector& v) const override
    {
        const Weights w = weights(x);
        const Vector au = a_ * u, av = a_ * v;
        const double mu_u = w.plus.dot(au) - w.minus.dot(au);
        const double mu_v = w.plus.dot(av) - w.minus.dot(av);
        // centred projections on the +a_i and -a_i atoms
        const Vector cu_p = au.array() - mu_u, cu_m = -au.array() - mu_u;
        const Vector cv_p = av.array() - mu_v, cv_m = -av.array() - mu_v;
        const Vector yp = w.plus.cwiseProduct(cu_p).cwiseProduct(cv_p);
        const Vector ym = w.minus.cwiseProduct(cu_m).cwiseProduct(cv_m);
        const double cov = yp.sum() + ym.sum();
        const Vector mean = a_.transpose() * (w.plus - w.minus);
        return a_.transpose() * (yp - ym) - cov * mean;
    }

    std::optional<Vector> minimizer() const override { return c_; }
    std::optional<double> min_value() const override { return std::log(2.0 * static_cast<double>(a_.rows())); }

    double lipschitz(int p) const override
    {
        switch (p) {
        case 1: return r_ * r_;
        case 2: return 2.0 * r_ * r_ * r_;
        default: return 12.0 * r_ * r_ * r_ * r_;
        }
    }

    std::map<std::string, double> parameters() const override
    {
        return {{"dim", static_cast<double>(dimension())}, {"forms", static_cast<double>(a_.rows())},
                {"max_row_norm", r_}};
    }

private:
    struct Weights {
        Vector plus, minus;
    };
    Weights weights(const Vector& x) const
    {
        const Vector z = a_ * (x - c_);
        const double shift = z.cwiseAbs().maxCoeff();
        Weights w{(z.array() - shift).exp(), (-z.array() - shift).exp()};
        const double total = w.plus.sum() + w.minus.sum();
        w.plus /= total;
        w.minus /= total;
        return w;
    }

    Matrix a_;
    Vector c_;
    double r_ = 0.0;
};

/// L2-regularized logistic regression on a seeded synthetic design:
///   Phi(x) = (1/n) sum_i log(1 + exp(-y_i z_i^T x)) + mu/2 |x|^2.
/// The minimizer is computed by Newton's method at construction.
///
/// With the loss derivatives bounded by 1/4, 1/(6 sqrt 3) and 1/8, R = max |z_i|
/// and S = lambda_max(Z^T Z) / n:
///   ell_1 = S/4 + mu, ell_2 = R S / (6 sqrt 3), ell_3 = 3 R^2 S / 8.
class LogisticProblem final : public Problem {
public:
    LogisticProblem(Matrix z, Vector labels, double mu) : z_(std::move(z)), y_(std::move(labels)), mu_(mu)
    {
        if (z_.rows() != y_.size()) throw InvalidArgument("logistic: design and labels disagree");
        if (mu_ <= 0.0) throw InvalidArgument("logistic: mu must be positive");
        r_ = detail::max_row_norm(z_);
        s_ = detail::max_eigenvalue(z_.transpose() * z_) / static_cast<double>(z_.rows());
        auto res = damped_newton(*this, Vector::Zero(z_.cols()), {1e-14, 100});
        xstar_ = res.x;
        fstar_ = value(xstar_);
    }

    static LogisticProblem random(int dim, int samples, double mu, std::uint64_t seed)
    {
        if (dim < 1 || samples < 1) throw InvalidArgument("logistic: need dim, samples >= 1");
        std::mt19937_64 rng(seed);
        Matrix z = detail::gaussian_matrix(samples, dim, rng);
        const Vector w = detail::gaussian_vector(dim, rng);
        const Vector noise = detail::gaussian_vector(samples, rng, 0.5);
        Vector y(samples);
        for (int i = 0; i < samples; ++i) y(i) = z.row(i).dot(w) + noise(i) >= 0.0 ? 1.0 : -1.0;
        return {std::move(z), std::move(y), mu};
    }

    std::string name() const override { return "logistic"; }
    int dimension() const override { return static_cast<int>(z_.cols()); }

    double value(const Vector& x) const override
    {
        const Vector t = y_.cwiseProduct(z_ * x);
        double loss = 0.0;
        for (Eigen::Index i = 0; i < t.size(); ++i) loss += softplus(-t(i));
        return loss / static_cast<double>(t.size()) + 0.5 * mu_ * x.squaredNorm();
    }

    Vector gradient(const Vector& x) const override
    {
        const Vector t = y_.cwiseProduct(z_ * x);
        Vector coef(t.size());
        for (Eigen::Index i = 0; i < t.size(); ++i) coef(i) = (sigmoid(t(i)) - 1.0) * y_(i);
        return z_.transpose() * coef / static_cast<double>(t.size()) + mu_ * x;
    }

    Matrix hessian(const Vector& x) const override
    {
        const Vector t = y_.cwiseProduct(z_ * x);
        Vector curv(t.size());
        for (Eigen::Index i = 0; i < t.size(); ++i) {
            const double s = sigmoid(t(i));
            curv(i) = s * (1.0 - s);
        }
        Matrix h = z_.transpose() * curv.asDiagonal() * z_ / static_cast<double>(t.size());
        h.diagonal().array() += mu_;
        return h;
    }

    Vector third_action(const Vector& x, const Vector& u, const Vector& v) const override
    {
        const Vector t = y_.cwiseProduct(z_ * x);
        const Vector zu = z_ * u, zv = z_ * v;
        Vector coef(t.size());
        for (Eigen::Index i = 0; i < t.size(); ++i) {
            const double s = sigmoid(t(i));
            coef(i) = s * (1.0 - s) * (1.0 - 2.0 * s) * y_(i) * zu(i) * zv(i);
        }
        return z_.transpose() * coef / static_cast<double>(t.size());
    }

    std::optional<Vector> minimizer() const override { return xstar_; }
    std::optional<double> min_value() const override { return fstar_; }

    double lipschitz(int p) const override
    {
        switch (p) {
        case 1: return s_ / 4.0 + mu_;
        case 2: return r_ * s_ / (6.0 * std::sqrt(3.0));
        default: return 3.0 * r_ * r_ * s_ / 8.0;
        }
    }

    std::map<std::string, double> parameters() const override
    {
        return {{"dim", static_cast<double>(dimension())}, {"samples", static_cast<double>(z_.rows())}, {"mu", mu_}};
    }

private:
    static double softplus(double t) { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }
    static double sigmoid(double t)
    {
        if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
        const double e = std::exp(t);
        return e / (1.0 + e);
    }

    Matrix z_;
    Vector y_;
    double mu_;
    double r_ = 0.0, s_ = 0.0;
    Vector xstar_;
    double fstar_ = 0.0;
};

/// Phi(x) = 1/4 |x - c|^4 + mu/2 |x - c|^2.
///
/// The fourth derivative is constant with norm 6, so ell_3 = 3 * 6 globally.
/// ell_1 = 3 R^2 + mu and ell_2 = 6 R hold on the ball of radius `radius` = R
/// around c.
class QuarticProblem final : public Problem {
public:
    QuarticProblem(Vector center, double mu, double radius) : c_(std::move(center)), mu_(mu), radius_(radius)
    {
        if (mu_ < 0.0 || radius_ <= 0.0) throw InvalidArgument("quartic: need mu >= 0 and radius > 0");
    }

    static QuarticProblem random(int dim, double mu, double radius, std::uint64_t seed)
    {
        if (dim < 1) throw InvalidArgument("quartic: need dim >= 1");
        std::mt19937_64 rng(seed);
        return {detail::gaussian_vector(dim, rng), mu, radius};
    }

    std::string name() const override { return "quartic"; }
    int dimension() const override { return static_cast<int>(c_.size()); }

    double value(const Vector& x) const override
    {
        const double n2 = (x - c_).squaredNorm();
        return 0.25 * n2 * n2 + 0.5 * mu_ * n2;
    }
    double gap(const Vector& x) const override { return value(x); }
    Vector gradient(const Vector& x) const override
    {
        const Vector d = x - c_;
        return (d.squaredNorm() + mu_) * d;
    }
    Matrix hessian(const Vector& x) const override
    {
        const Vector d = x - c_;
        Matrix h = 2.0 * d * d.transpose();
        h.diagonal().array() += d.squaredNorm() + mu_;
        return h;
    }
    Vector third_action(const Vector& x, const Vector& u, const Vector& v) const override
    {
        const Vector d = x - c_;
        return 2.0 * (u.dot(v) * d + d.dot(v) * u + d.dot(u) * v);
    }

    std::optional<Vector> minimizer() const override { return c_; }
    std::optional<double> min_value() const override { return 0.0; }

    double lipschitz(int p) const override
    {
        switch (p) {
        case 1: return 3.0 * radius_ * radius_ + mu_;
        case 2: return 6.0 * radius_;
        default: return 18.0;
        }
    }

    std::map<std::string, double> parameters() const override
    {
        return {{"dim", static_cast<double>(dimension())}, {"mu", mu_}, {"radius", radius_}};
    }

private:
    Vector c_;
    double mu_;
    double radius_;
};

/// Builds a problem by name. Missing parameters take their defaults;
/// parameters the problem does not know are rejected.
inline std::shared_ptr<Problem> make_problem(const std::string& name, const std::map<std::string, double>& params,
                                             std::uint64_t seed)
{
    static const std::map<std::string, std::set<std::string>> known{
        {"quadratic", {"dim", "condition", "lambda_max", "rotate", "ell"}},
        {"lse", {"dim", "forms"}},
        {"logistic", {"dim", "samples", "mu"}},
        {"quartic", {"dim", "mu", "radius"}}};
    const auto kt = known.find(name);
    if (kt == known.end()) throw InvalidArgument("unknown problem '" + name + "'");
    for (const auto& [key, value] : params)
        if (!kt->second.count(key)) throw InvalidArgument(name + ": unknown parameter '" + key + "'");
    auto get = [&](const std::string& key, double fallback) {
        auto it = params.find(key);
        return it == params.end() ? fallback : it->second;
    };
    if (name == "quadratic") {
        return std::make_shared<QuadraticProblem>(QuadraticProblem::spd(
            static_cast<int>(get("dim", 10)), get("condition", 1000.0), seed, get("lambda_max", 1.0),
            get("rotate", 1.0) != 0.0, get("ell", 1.0)));
    }
    if (name == "lse") {
        const int dim = static_cast<int>(get("dim", 20));
        return std::make_shared<LogSumExpProblem>(
            LogSumExpProblem::random(dim, static_cast<int>(get("forms", 2.0 * dim)), seed));
    }
    if (name == "logistic") {
        return std::make_shared<LogisticProblem>(LogisticProblem::random(
            static_cast<int>(get("dim", 5)), static_cast<int>(get("samples", 50)), get("mu", 0.1), seed));
    }
    if (name == "quartic") {
        return std::make_shared<QuarticProblem>(
            QuarticProblem::random(static_cast<int>(get("dim", 3)), get("mu", 0.0), get("radius", 10.0), seed));
    }
    throw InvalidArgument("unknown problem '" + name + "'");
}

} // namespace hoa
