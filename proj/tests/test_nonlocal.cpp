#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "nlbvp/nonlocal.hpp"

using namespace nlbvp;

namespace {

ProblemSpec multipoint_1d(double lambda, double beta, double xi) {
    // -v'' + lambda v = 0, v(0)=0, v(1)=g_R + mu; B = beta * u(xi)
    ProblemSpec spec;
    spec.domain = Domain::interval(0.0, 1.0);
    spec.lambda = lambda;
    spec.boundary_data = ScalarField::parse("x");
    spec.nonlocal = NonlocalFunctional::multipoint({{xi, 0.0}}, {beta});
    spec.nonlocal.sigma = {false, true, false, false};
    return spec;
}

double affine_T(double lambda, double beta, double xi, double g_R, double mu) {
    double s = std::sqrt(lambda);
    return beta * (g_R + mu) * std::sinh(s * xi) / std::sinh(s);
}

}  // namespace

TEST_CASE("interpolation is exact at nodes and for multilinear data") {
    Grid g1(Domain::interval(0.0, 1.0), {9, 1});
    GridFunction u1(g1);
    for (std::size_t k = 0; k < g1.size(); ++k) u1[k] = 2.0 * g1.coord(k)[0] - 1.0;
    CHECK(interpolate_at(u1, {0.375, 0.0}) == doctest::Approx(-0.25));
    CHECK(interpolate_at(u1, {0.33, 0.0}) == doctest::Approx(-0.34));
    CHECK(interpolate_at(u1, g1.coord(5)) == doctest::Approx(u1[5]));
    CHECK_THROWS_AS(interpolate_at(u1, {1.5, 0.0}), DomainError);

    Grid g2(Domain::rectangle(0.0, 1.0, 0.0, 1.0), {5, 5});
    GridFunction u2(g2);
    auto bilinear = [](Point p) { return 1.0 + 2.0 * p[0] - p[1] + 3.0 * p[0] * p[1]; };
    for (std::size_t k = 0; k < g2.size(); ++k) u2[k] = bilinear(g2.coord(k));
    CHECK(interpolate_at(u2, {0.3, 0.7}) == doctest::Approx(bilinear({0.3, 0.7})));
    CHECK(interpolate_at(u2, {1.0, 1.0}) == doctest::Approx(bilinear({1.0, 1.0})));
}

TEST_CASE("integral term uses the trapezoidal rule") {
    Grid g(Domain::interval(0.0, 1.0), {101, 1});
    GridFunction u(g);
    for (std::size_t k = 0; k < g.size(); ++k) u[k] = g.coord(k)[0];
    // trapezoid is exact for linear integrands
    CHECK(integral_term(u, ScalarField::constant(1.0), Expression::variable("s")) ==
          doctest::Approx(0.5).epsilon(1e-14));
    // w*Phi(u) = x * u^2 = x^3 -> 1/4, trapezoid error O(h^2)
    CHECK(integral_term(u, ScalarField::parse("x"), Expression::parse("s^2")) ==
          doctest::Approx(0.25).epsilon(1e-3));

    Grid g2(Domain::rectangle(0.0, 1.0, 0.0, 1.0), {41, 41});
    GridFunction u2(g2);
    for (std::size_t k = 0; k < g2.size(); ++k)
        u2[k] = g2.coord(k)[0] * g2.coord(k)[1];
    CHECK(integral_term(u2, ScalarField::constant(1.0), Expression::variable("s")) ==
          doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("integral term reports the offending node on Phi domain errors") {
    Grid g(Domain::interval(0.0, 1.0), {5, 1});
    GridFunction u(g, -1.0);
    CHECK_THROWS_AS(
        integral_term(u, ScalarField::constant(1.0), Expression::parse("sqrt(s)")),
        EvalError);
}

TEST_CASE("B of h needs no PDE solve") {
    ProblemSpec spec;
    spec.domain = Domain::rectangle(0.0, 1.0, 0.0, 1.0);
    ScalarField h = ScalarField::parse("1 + x*y");
    spec.nonlinearity = Nonlinearity::parse("s - (1 + x*y)", "1", 1.0, h);
    spec.nonlocal = NonlocalFunctional::multipoint({{0.5, 0.5}}, {0.5});
    Grid grid(spec.domain, {33, 33});
    CHECK(compute_B_of_h(spec, grid) == doctest::Approx(0.625));

    spec.nonlocal = NonlocalFunctional::integral(ScalarField::constant(1.0));
    // integral of 1 + x*y over the unit square = 1.25
    CHECK(compute_B_of_h(spec, grid) == doctest::Approx(1.25).epsilon(1e-10));
}

TEST_CASE("evaluate_T matches the affine closed form") {
    const double lambda = 50.0, beta = 4.0, xi = 0.75;
    ProblemSpec spec = multipoint_1d(lambda, beta, xi);
    Grid grid(spec.domain, {2049, 1});
    for (double mu : {-1.0, 0.0, 0.6}) {
        double t = evaluate_T(spec, grid, mu);
        CHECK(t == doctest::Approx(affine_T(lambda, beta, xi, 1.0, mu)).epsilon(1e-5));
    }
}

TEST_CASE("contraction estimate matches the affine slope") {
    const double lambda = 50.0, beta = 4.0, xi = 0.75;
    ProblemSpec spec = multipoint_1d(lambda, beta, xi);
    Grid grid(spec.domain, {2049, 1});
    double slope = beta * std::sinh(std::sqrt(lambda) * xi) / std::sinh(std::sqrt(lambda));
    CHECK(estimate_contraction(spec, grid, 0.3, 0.05) ==
          doctest::Approx(slope).epsilon(1e-5));
    CHECK_THROWS_AS(estimate_contraction(spec, grid, 0.3, 0.0), ParameterError);
}

TEST_CASE("Picard and the bracket scan agree on a contracting problem") {
    const double lambda = 100.0, beta = 4.0, xi = 0.75;
    ProblemSpec spec = multipoint_1d(lambda, beta, xi);
    Grid grid(spec.domain, {1025, 1});
    double a = beta * std::sinh(std::sqrt(lambda) * xi) / std::sinh(std::sqrt(lambda));
    double mu_exact = a / (1.0 - a);  // T(mu) = a*(1+mu)

    FixedPointConfig picard;
    picard.strategy = FixedPointStrategy::Picard;
    FixedPointResult rp = fixed_point_solve(spec, grid, picard);
    REQUIRE(rp.status == FixedPointStatus::Converged);
    REQUIRE(rp.roots.size() == 1);
    CHECK(rp.roots[0].mu == doctest::Approx(mu_exact).epsilon(1e-4));
    CHECK(rp.roots[0].stability == Stability::Attracting);
    CHECK(rp.roots[0].residual <= 1e-9);
    CHECK(rp.roots[0].iterate_history.size() >= 2);
    CHECK(rp.contraction_estimate == doctest::Approx(a).epsilon(1e-4));

    FixedPointConfig scan;
    scan.strategy = FixedPointStrategy::BracketScan;
    FixedPointResult rs = fixed_point_solve(spec, grid, scan);
    REQUIRE(rs.status == FixedPointStatus::Converged);
    REQUIRE(rs.roots.size() == 1);
    CHECK(rs.roots[0].mu == doctest::Approx(rp.roots[0].mu).epsilon(1e-8));

    FixedPointConfig aut;
    aut.strategy = FixedPointStrategy::Auto;
    FixedPointResult ra = fixed_point_solve(spec, grid, aut);
    REQUIRE(ra.roots.size() == 1);
    CHECK(ra.roots[0].mu == doctest::Approx(rp.roots[0].mu).epsilon(1e-8));
}

TEST_CASE("fixed point root reproduces the nonlocal boundary condition") {
    const double lambda = 100.0, beta = 4.0, xi = 0.75;
    ProblemSpec spec = multipoint_1d(lambda, beta, xi);
    Grid grid(spec.domain, {1025, 1});
    FixedPointResult r = fixed_point_solve(spec, grid);
    REQUIRE(r.roots.size() == 1);
    const GridFunction& u = r.roots[0].solution;
    // u(1) = g_R + beta*u(xi)
    double lhs = u[grid.size() - 1];
    double rhs = 1.0 + beta * interpolate_at(u, {xi, 0.0});
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
}

TEST_CASE("constant combiner contracts in one step") {
    ProblemSpec spec;
    spec.domain = Domain::interval(0.0, 1.0);
    spec.lambda = 10.0;
    spec.nonlocal.kind = CombinerKind::GeneralExpression;
    spec.nonlocal.general = Expression::literal(2.0);
    Grid grid(spec.domain, {65, 1});
    FixedPointResult r = fixed_point_solve(spec, grid);
    REQUIRE(r.roots.size() == 1);
    CHECK(r.roots[0].mu == doctest::Approx(2.0));
    CHECK(r.contraction_estimate == doctest::Approx(0.0));
    CHECK(r.roots[0].stability == Stability::Attracting);
}

TEST_CASE("Picard reports divergence when the map expands") {
    // slope = 4*sinh(0.75*s)/sinh(s) > 1 for small lambda
    ProblemSpec spec = multipoint_1d(4.0, 4.0, 0.75);
    Grid grid(spec.domain, {257, 1});
    FixedPointConfig fp;
    fp.strategy = FixedPointStrategy::Picard;
    fp.max_iters = 60;
    FixedPointResult r = fixed_point_solve(spec, grid, fp);
    CHECK(r.status == FixedPointStatus::Diverged);
    CHECK(r.roots.empty());
}

TEST_CASE("scan finds a repelling root that Picard misses") {
    // lambda = 4: slope a = 4*sinh(1.5)/sinh(2) = 2.35 > 1, fixed point
    // mu* = a/(1-a) < 0 is repelling.
    const double lambda = 4.0, beta = 4.0, xi = 0.75;
    ProblemSpec spec = multipoint_1d(lambda, beta, xi);
    Grid grid(spec.domain, {513, 1});
    double a = beta * std::sinh(std::sqrt(lambda) * xi) / std::sinh(std::sqrt(lambda));
    double mu_exact = a / (1.0 - a);

    FixedPointConfig fp;
    fp.strategy = FixedPointStrategy::Auto;
    FixedPointResult r = fixed_point_solve(spec, grid, fp);
    REQUIRE(r.status == FixedPointStatus::Converged);
    REQUIRE(r.roots.size() == 1);
    CHECK(r.roots[0].mu == doctest::Approx(mu_exact).epsilon(1e-3));
    CHECK(r.roots[0].stability == Stability::Repelling);
}

TEST_CASE("square-root integral condition has a cusp root at zero") {
    // -v'' + lambda v = 0, v(0)=0, v(1) = sqrt(int |v|)
    ProblemSpec spec;
    spec.domain = Domain::interval(0.0, 1.0);
    spec.lambda = 25.0;
    spec.nonlocal.kind = CombinerKind::GeneralExpression;
    spec.nonlocal.general = Expression::parse("sqrt(I)");
    spec.nonlocal.phi = Expression::parse("abs(s)");
    spec.nonlocal.weight = ScalarField::constant(1.0);
    spec.nonlocal.sigma = {false, true, false, false};
    Grid grid(spec.domain, {1025, 1});

    FixedPointConfig fp;
    fp.strategy = FixedPointStrategy::BracketScan;
    FixedPointResult r = fixed_point_solve(spec, grid, fp);
    REQUIRE(r.roots.size() == 2);
    double mu_nontrivial = std::tanh(2.5) / 5.0;
    CHECK(std::fabs(r.roots[0].mu) <= 1e-6);
    CHECK(r.roots[1].mu == doctest::Approx(mu_nontrivial).epsilon(1e-3));
}

TEST_CASE("roots are deduplicated and sorted") {
    const double lambda = 100.0, beta = 4.0, xi = 0.75;
    ProblemSpec spec = multipoint_1d(lambda, beta, xi);
    Grid grid(spec.domain, {513, 1});
    FixedPointConfig fp;
    fp.strategy = FixedPointStrategy::BracketScan;
    fp.scan_points = 1024;  // many cells see the same root
    FixedPointResult r = fixed_point_solve(spec, grid, fp);
    CHECK(r.roots.size() == 1);
}

TEST_CASE("bracket must cover B of h") {
    ProblemSpec spec;
    spec.domain = Domain::interval(0.0, 1.0);
    spec.lambda = 10.0;
    spec.nonlocal.kind = CombinerKind::GeneralExpression;
    spec.nonlocal.general = Expression::literal(5.0);
    Grid grid(spec.domain, {65, 1});
    FixedPointConfig fp;
    fp.bracket = 1.0;  // |B[h]| = 5 exceeds it
    CHECK_THROWS_AS(fixed_point_solve(spec, grid, fp), ParameterError);
}
