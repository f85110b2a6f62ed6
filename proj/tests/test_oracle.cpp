#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace hoa;
using hoa::test::random_point;

TEST(Evaluate, IdentityQuadratic)
{
    const auto q = test::diagonal_quadratic({1.0});
    const OracleEvaluation ev = evaluate(q, Vector::Constant(1, 2.0), 2);
    EXPECT_DOUBLE_EQ(ev.value, 2.0);
    EXPECT_DOUBLE_EQ(ev.gradient(0), 2.0);
    ASSERT_TRUE(ev.hessian.has_value());
    EXPECT_DOUBLE_EQ((*ev.hessian)(0, 0), 1.0);
}

TEST(Evaluate, SymmetricLogSumExpAtOrigin)
{
    const LogSumExpProblem lse(Matrix::Identity(1, 1), Vector::Zero(1));
    const OracleEvaluation ev = evaluate(lse, Vector::Zero(1), 1);
    EXPECT_NEAR(ev.value, std::log(2.0), 1e-15);
    EXPECT_NEAR(ev.gradient(0), 0.0, 1e-15);
}

TEST(Evaluate, DiagonalQuadraticGradient)
{
    const auto q = test::diagonal_quadratic({1.0, 4.0});
    const OracleEvaluation ev = evaluate(q, Vector::Ones(2), 1);
    EXPECT_DOUBLE_EQ(ev.gradient(0), 1.0);
    EXPECT_DOUBLE_EQ(ev.gradient(1), 4.0);
    EXPECT_FALSE(ev.hessian.has_value());
}

TEST(Evaluate, OrderZeroReturnsValueOnly)
{
    const auto q = test::diagonal_quadratic({1.0, 4.0});
    const OracleEvaluation ev = evaluate(q, Vector::Ones(2), 0);
    EXPECT_DOUBLE_EQ(ev.value, 2.5);
    EXPECT_EQ(ev.gradient.size(), 0);
    EXPECT_FALSE(static_cast<bool>(ev.third_action));
}

TEST(Evaluate, ThirdActionOfQuartic)
{
    // Phi = |x|^4 / 4 at x = e_0: T(u, v) = 2 (u.v x + x.v u + x.u v).
    const QuarticProblem p(Vector::Zero(2), 0.0, 1.0);
    const OracleEvaluation ev = evaluate(p, Vector::Unit(2, 0), 3);
    ASSERT_TRUE(static_cast<bool>(ev.third_action));
    const Vector t = ev.third_action(Vector::Unit(2, 0), Vector::Unit(2, 0));
    EXPECT_NEAR(t(0), 6.0, 1e-15);
    EXPECT_NEAR(t(1), 0.0, 1e-15);
    const Vector mixed = ev.third_action(Vector::Unit(2, 1), Vector::Unit(2, 1));
    EXPECT_NEAR(mixed(0), 2.0, 1e-15);
}

TEST(Evaluate, DimensionMismatchThrows)
{
    const auto q = test::diagonal_quadratic({1.0, 4.0});
    EXPECT_THROW(evaluate(q, Vector::Ones(3), 1), InvalidArgument);
}

TEST(Evaluate, UnsupportedOrderThrows)
{
    const auto q = test::diagonal_quadratic({1.0});
    EXPECT_THROW(evaluate(q, Vector::Ones(1), 4), InvalidArgument);
    EXPECT_THROW(evaluate(q, Vector::Ones(1), -1), InvalidArgument);
}

TEST(CheckDerivatives, QuadraticGradientExact)
{
    const auto p = make_problem("quadratic", {{"dim", 6}, {"condition", 100}}, 1);
    std::mt19937_64 rng(11);
    const DerivativeReport r = check_derivatives(*p, random_point(6, rng), 1e-5);
    EXPECT_LE(r.gradient_error, 1e-8);
}

TEST(CheckDerivatives, LogSumExpHessian)
{
    const auto p = make_problem("lse", {{"dim", 5}}, 2);
    std::mt19937_64 rng(12);
    const DerivativeReport r = check_derivatives(*p, random_point(5, rng), 1e-5);
    ASSERT_TRUE(r.hessian_error.has_value());
    EXPECT_LE(*r.hessian_error, 1e-5);
}

namespace {

class WrongGradient final : public Problem {
public:
    std::string name() const override { return "wrong"; }
    int dimension() const override { return 2; }
    double value(const Vector& x) const override { return 0.5 * x.squaredNorm(); }
    Vector gradient(const Vector& x) const override { return 1.1 * x; }
    Matrix hessian(const Vector&) const override { return Matrix::Identity(2, 2); }
    Vector third_action(const Vector&, const Vector&, const Vector&) const override { return Vector::Zero(2); }
    double lipschitz(int) const override { return 1.0; }
};

} // namespace

TEST(CheckDerivatives, WrongGradientIsFlagged)
{
    const WrongGradient p;
    const DerivativeReport r = check_derivatives(p, Vector::Constant(2, 1.0), 1e-5);
    EXPECT_GE(r.gradient_error, 1e-2);
}

TEST(BuiltinProblems, FiniteDifferencesAtRandomPoints)
{
    std::mt19937_64 rng(2024);
    for (const auto& p : test::builtin_problems()) {
        const Vector xs = *p->minimizer();
        for (int i = 0; i < 100; ++i) {
            const Vector x = xs + random_point(p->dimension(), rng);
            const DerivativeReport r = check_derivatives(*p, x, 1e-5);
            ASSERT_LE(r.gradient_error, 1e-5) << p->name() << " point " << i;
            ASSERT_LE(*r.hessian_error, 1e-4) << p->name() << " point " << i;
            ASSERT_LE(*r.third_error, 1e-4) << p->name() << " point " << i;
        }
    }
}

TEST(BuiltinProblems, HessianSymmetric)
{
    std::mt19937_64 rng(7);
    for (const auto& p : test::builtin_problems()) {
        for (int i = 0; i < 20; ++i) {
            const Matrix h = p->hessian(random_point(p->dimension(), rng));
            EXPECT_LE((h - h.transpose()).cwiseAbs().maxCoeff(), 1e-12 * std::max(1.0, h.cwiseAbs().maxCoeff()))
                << p->name();
        }
    }
}

TEST(BuiltinProblems, ConvexitySpotCheck)
{
    std::mt19937_64 rng(8);
    for (const auto& p : test::builtin_problems()) {
        for (int i = 0; i < 100; ++i) {
            const Vector x = random_point(p->dimension(), rng), y = random_point(p->dimension(), rng);
            for (double t : {0.25, 0.5, 0.75}) {
                const double mid = p->value(t * x + (1.0 - t) * y);
                const double chord = t * p->value(x) + (1.0 - t) * p->value(y);
                ASSERT_LE(mid, chord + 1e-12 * (1.0 + std::abs(chord))) << p->name();
            }
        }
    }
}

TEST(BuiltinProblems, MinimizerIsStationary)
{
    for (const auto& p : test::builtin_problems()) {
        ASSERT_TRUE(p->minimizer().has_value()) << p->name();
        ASSERT_TRUE(p->min_value().has_value()) << p->name();
        EXPECT_LE(p->gradient(*p->minimizer()).norm(), 1e-10) << p->name();
        EXPECT_NEAR(p->gap(*p->minimizer()), 0.0, 1e-14) << p->name();
    }
}

TEST(BuiltinProblems, GapMatchesValueDifference)
{
    std::mt19937_64 rng(9);
    for (const auto& p : test::builtin_problems()) {
        const Vector x = *p->minimizer() + random_point(p->dimension(), rng);
        EXPECT_NEAR(p->gap(x), p->value(x) - *p->min_value(), 1e-12 * (1.0 + std::abs(p->value(x)))) << p->name();
        EXPECT_GE(p->gap(x), 0.0) << p->name();
    }
}

TEST(BuiltinProblems, FirstOrderLipschitzBoundsHessian)
{
    // ell_1 must dominate the Hessian spectral norm; quartic only within its radius.
    std::mt19937_64 rng(10);
    for (const auto& p : test::builtin_problems()) {
        for (int i = 0; i < 100; ++i) {
            const Vector x = *p->minimizer() + random_point(p->dimension(), rng, 1.0);
            const double hn = Eigen::SelfAdjointEigenSolver<Matrix>(p->hessian(x)).eigenvalues().cwiseAbs().maxCoeff();
            ASSERT_LE(hn, p->lipschitz(1) * (1.0 + 1e-12)) << p->name();
        }
    }
}

TEST(BuiltinProblems, SecondOrderLipschitzBoundsHessianChange)
{
    std::mt19937_64 rng(13);
    for (const auto& p : test::builtin_problems()) {
        for (int i = 0; i < 200; ++i) {
            const Vector x = *p->minimizer() + random_point(p->dimension(), rng, 0.7);
            const Vector y = *p->minimizer() + random_point(p->dimension(), rng, 0.7);
            const Matrix dh = p->hessian(x) - p->hessian(y);
            const double n = Eigen::SelfAdjointEigenSolver<Matrix>(dh).eigenvalues().cwiseAbs().maxCoeff();
            ASSERT_LE(n, p->lipschitz(2) * (x - y).norm() * (1.0 + 1e-9) + 1e-13) << p->name();
        }
    }
}

TEST(BuiltinProblems, ThirdOrderLipschitzBoundsThirdChange)
{
    // |T(x) - T(y)| along random unit directions stays below ell_3 |x - y|.
    std::mt19937_64 rng(14);
    for (const auto& p : test::builtin_problems()) {
        const int d = p->dimension();
        for (int i = 0; i < 200; ++i) {
            const Vector x = *p->minimizer() + random_point(d, rng, 0.7);
            const Vector y = *p->minimizer() + random_point(d, rng, 0.7);
            const Vector u = random_point(d, rng).normalized(), v = random_point(d, rng).normalized();
            const double n = (p->third_action(x, u, v) - p->third_action(y, u, v)).norm();
            ASSERT_LE(n, p->lipschitz(3) * (x - y).norm() * (1.0 + 1e-9) + 1e-13) << p->name();
        }
    }
}

TEST(MakeProblem, UnknownNameAndParameterRejected)
{
    EXPECT_THROW(make_problem("rosenbrock", {}, 1), InvalidArgument);
    EXPECT_THROW(make_problem("quadratic", {{"dimension", 3}}, 1), InvalidArgument);
    EXPECT_THROW(make_problem("lse", {{"dim", 5}, {"forms", 2}}, 1), InvalidArgument);
}

TEST(MakeProblem, SeedDeterminesInstance)
{
    const auto a = make_problem("lse", {{"dim", 4}}, 17);
    const auto b = make_problem("lse", {{"dim", 4}}, 17);
    const auto c = make_problem("lse", {{"dim", 4}}, 18);
    const Vector x = Vector::LinSpaced(4, -1.0, 1.0);
    EXPECT_EQ(a->value(x), b->value(x));
    EXPECT_NE(a->value(x), c->value(x));
}

TEST(MakeProblem, QuadraticSpectrum)
{
    const auto p = make_problem("quadratic", {{"dim", 10}, {"condition", 1000}, {"lambda_max", 2}}, 5);
    const auto& q = dynamic_cast<const QuadraticProblem&>(*p);
    const Vector e = Eigen::SelfAdjointEigenSolver<Matrix>(q.matrix()).eigenvalues();
    EXPECT_NEAR(e.maxCoeff(), 2.0, 1e-12);
    EXPECT_NEAR(e.maxCoeff() / e.minCoeff(), 1000.0, 1e-8);
    EXPECT_NEAR(p->lipschitz(1), 2.0, 1e-12);
}

TEST(LogSumExp, StableForLargeArguments)
{
    const LogSumExpProblem lse(Matrix::Identity(1, 1), Vector::Zero(1));
    const Vector x = Vector::Constant(1, 800.0);
    EXPECT_TRUE(std::isfinite(lse.value(x)));
    EXPECT_NEAR(lse.value(x), 800.0, 1e-12);
    EXPECT_NEAR(lse.gradient(x)(0), 1.0, 1e-15);
}
