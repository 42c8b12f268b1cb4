#include "doctest.h"

#include "sage/simplex.hpp"

using namespace sage;

TEST_CASE("two variable optimum lands on a vertex") {
    // max 3x + 2y  st  x + y <= 4,  x <= 2
    Matrix A(2, 2);
    A << 1, 1,
         1, 0;
    Vector b(2);
    b << 4, 2;
    Vector c(2);
    c << 3, 2;

    LpResult r = solve_lp(A, b, c);
    REQUIRE(r.status == LpStatus::optimal);
    CHECK(r.objective == doctest::Approx(10.0));
    CHECK(r.x(0) == doctest::Approx(2.0));
    CHECK(r.x(1) == doctest::Approx(2.0));
}

TEST_CASE("binding constraint mix") {
    // max x + 3y  st  y <= 3,  x + y <= 5 : optimum (2, 3)
    Matrix A(2, 2);
    A << 0, 1,
         1, 1;
    Vector b(2);
    b << 3, 5;
    Vector c(2);
    c << 1, 3;

    LpResult r = solve_lp(A, b, c);
    REQUIRE(r.status == LpStatus::optimal);
    CHECK(r.objective == doctest::Approx(11.0));
    CHECK(r.x(0) == doctest::Approx(2.0));
    CHECK(r.x(1) == doctest::Approx(3.0));
}

TEST_CASE("negative rhs forces a phase one start") {
    // max -x  st  -x <= -2 : feasible set is x >= 2, optimum x = 2
    Matrix A(1, 1);
    A << -1;
    Vector b(1);
    b << -2;
    Vector c(1);
    c << -1;

    LpResult r = solve_lp(A, b, c);
    REQUIRE(r.status == LpStatus::optimal);
    CHECK(r.x(0) == doctest::Approx(2.0));
    CHECK(r.objective == doctest::Approx(-2.0));
}

TEST_CASE("infeasible system is reported") {
    // x <= 1 and -x <= -3 cannot both hold
    Matrix A(2, 1);
    A << 1,
         -1;
    Vector b(2);
    b << 1, -3;
    Vector c(1);
    c << 1;

    LpResult r = solve_lp(A, b, c);
    CHECK(r.status == LpStatus::infeasible);
}

TEST_CASE("unbounded direction is reported") {
    // max x + y with only x <= 1 : y can grow without limit
    Matrix A(1, 2);
    A << 1, 0;
    Vector b(1);
    b << 1;
    Vector c(2);
    c << 1, 1;

    LpResult r = solve_lp(A, b, c);
    CHECK(r.status == LpStatus::unbounded);
}

TEST_CASE("degenerate vertex does not cycle") {
    // three constraints meet at (1, 1); Bland's rule has to walk through
    Matrix A(3, 2);
    A << 1, 0,
         0, 1,
         1, 1;
    Vector b(3);
    b << 1, 1, 2;
    Vector c(2);
    c << 1, 2;

    LpResult r = solve_lp(A, b, c);
    REQUIRE(r.status == LpStatus::optimal);
    CHECK(r.objective == doctest::Approx(3.0));
    CHECK(r.x(0) == doctest::Approx(1.0));
    CHECK(r.x(1) == doctest::Approx(1.0));
}

TEST_CASE("zero objective still finds a feasible point") {
    Matrix A(1, 2);
    A << 1, 1;
    Vector b(1);
    b << 4;
    Vector c = Vector::Zero(2);

    LpResult r = solve_lp(A, b, c);
    REQUIRE(r.status == LpStatus::optimal);
    CHECK(r.objective == doctest::Approx(0.0));
    CHECK(r.x(0) + r.x(1) <= 4.0 + 1e-12);
    CHECK(r.x.minCoeff() >= -1e-12);
}
