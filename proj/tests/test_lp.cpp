#include <doctest.h>

#include <random>

#include "polycbf/lp.hpp"

using namespace polycbf;

namespace {

LpProblem<double> make(LpSense sense, Vector c, Matrix A, Vector b)
{
    LpProblem<double> p;
    p.sense = sense;
    p.cost = std::move(c);
    p.rows = std::move(A);
    p.rhs = std::move(b);
    return p;
}

} // namespace

TEST_CASE("small maximization with dual certificate")
{
    Matrix A(4, 2);
    A << -1, 0, 0, -1, 1, 0, 0, 1;
    Vector b(4);
    b << -1, -2, 0, 0;
    const auto s = lp_solve(make(LpSense::Maximize, Eigen::Vector2d(1, 1), A, b));
    REQUIRE(s.status == LpStatus::Optimal);
    CHECK(s.objective == doctest::Approx(3.0));
    CHECK(s.x(0) == doctest::Approx(1.0));
    CHECK(s.x(1) == doctest::Approx(2.0));
    CHECK(s.dual_objective == doctest::Approx(s.objective));
    CHECK(s.row_duals.minCoeff() >= -1e-12);
    CHECK(s.primal_residual <= 1e-9);
    CHECK(s.complementarity_residual <= 1e-9);
}

TEST_CASE("infeasible rows yield a Farkas vector")
{
    Matrix A(2, 1);
    A << 1, -1;
    const auto s = lp_solve(make(LpSense::Minimize, Vector::Zero(1), A, Eigen::Vector2d(1, 0)));
    REQUIRE(s.status == LpStatus::Infeasible);
    REQUIRE(s.farkas.size() >= 2);
    CHECK(s.farkas.minCoeff() >= -1e-12);
    const Vector w = s.farkas.head(2);
    CHECK(std::abs((A.transpose() * w)(0)) <= 1e-9);
    CHECK(w.dot(Eigen::Vector2d(1, 0)) > 0);
}

TEST_CASE("unbounded objective returns an improving ray")
{
    Matrix A(1, 2);
    A << 1, 0;
    const auto s = lp_solve(make(LpSense::Maximize, Eigen::Vector2d(0, 1), A, Vector::Zero(1)));
    REQUIRE(s.status == LpStatus::Unbounded);
    CHECK((A * s.ray).minCoeff() >= -1e-12);
    CHECK(s.ray(1) > 0);
}

TEST_CASE("variable bounds and no rows")
{
    LpProblem<double> p;
    p.sense = LpSense::Maximize;
    p.cost = Eigen::Vector2d(1, -1);
    p.rows = Matrix(0, 2);
    p.rhs = Vector(0);
    p.lower = Eigen::Vector2d(-1, -1);
    p.upper = Eigen::Vector2d(1, 1);
    const auto s = lp_solve(p);
    REQUIRE(s.status == LpStatus::Optimal);
    CHECK(s.objective == doctest::Approx(2.0));
    CHECK(s.x(0) == doctest::Approx(1.0));
    CHECK(s.x(1) == doctest::Approx(-1.0));
}

TEST_CASE("degenerate vertex does not cycle")
{
    // Many constraints through the same optimal vertex (0, 0).
    Matrix A(6, 2);
    A << 1, 0, 0, 1, 1, 1, 2, 1, 1, 2, 3, 1;
    const auto s = lp_solve(make(LpSense::Minimize, Eigen::Vector2d(1, 1), A, Vector::Zero(6)));
    REQUIRE(s.status == LpStatus::Optimal);
    CHECK(s.objective == doctest::Approx(0.0));
}

TEST_CASE("random bounded LPs satisfy strong duality")
{
    std::mt19937_64 gen(7);
    std::normal_distribution<double> N;
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 2 + trial % 4;
        const int m = n + 3 + trial % 5;
        Matrix A(m, n);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j)
                A(i, j) = N(gen);
        // x = 0 strictly feasible: rhs < 0.
        Vector b = -Vector::Ones(m) - Vector::NullaryExpr(m, [&] { return std::abs(N(gen)); });
        LpProblem<double> p = make(LpSense::Maximize, Vector::NullaryExpr(n, [&] { return N(gen); }),
                                   A, b);
        p.lower = Vector::Constant(n, -10);
        p.upper = Vector::Constant(n, 10);
        const auto s = lp_solve(p);
        REQUIRE(s.status == LpStatus::Optimal);
        CHECK(s.primal_residual <= 1e-9);
        CHECK(std::abs(s.objective - s.dual_objective) <= 1e-8 * (1 + std::abs(s.objective)));
        CHECK((A * s.x - b).minCoeff() >= -1e-9);
        // dual feasibility: -c = A^T y + l - u
        const Vector res = -p.cost - (A.transpose() * s.row_duals + s.lower_duals - s.upper_duals);
        CHECK(res.cwiseAbs().maxCoeff() <= 1e-8);
    }
}

TEST_CASE("templated scalar: long double")
{
    LpProblem<long double> p;
    p.sense = LpSense::Minimize;
    p.cost = VectorX<long double>::Ones(1);
    p.rows = MatrixX<long double>::Ones(1, 1);
    p.rhs = VectorX<long double>::Constant(1, 2.5L);
    const auto s = lp_solve(p);
    REQUIRE(s.status == LpStatus::Optimal);
    CHECK(static_cast<double>(s.x(0)) == doctest::Approx(2.5));
}
