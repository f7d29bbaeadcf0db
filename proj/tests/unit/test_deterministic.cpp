#include "qsdkit/catalog.hpp"
#include "qsdkit/deterministic.hpp"
#include "qsdkit/errors.hpp"

#include "oracles.hpp"

#include <doctest.h>

using namespace qsd;

TEST_CASE("drift and Jacobian of the one-type SIS model") {
    auto m = catalog("sis1d", {{"R0", 2.0}});
    Vector y(1);
    y << 0.3;
    CHECK(drift(m, y)(0) == doctest::Approx(2.0 * 0.3 * 0.7 - 0.3).epsilon(1e-14));
    CHECK(drift_jacobian(m, y)(0, 0) == doctest::Approx(2.0 * (1 - 0.6) - 1.0).epsilon(1e-9));
    // One-sided stencil at the capacity face.
    y << 1.0;
    CHECK(drift_jacobian(m, y)(0, 0) == doctest::Approx(-3.0).epsilon(1e-8));
}

TEST_CASE("equilibrium of sis1d") {
    for (double R0 : {1.5, 2.0, 4.0}) {
        auto eq = find_equilibria(catalog("sis1d", {{"R0", R0}}));
        CHECK(eq.y_star(0) == doctest::Approx(oracles::sis1d::y_star(R0)).epsilon(1e-12));
        CHECK(eq.origin_unstable);
        CHECK(eq.eigen_star(0).real() == doctest::Approx(1.0 - R0).epsilon(1e-8));
        CHECK(eq.residual < 1e-12);
    }
}

TEST_CASE("equilibrium of the heterogeneous SIS model") {
    oracles::sis_hetero::Params p{3.0, {1.0, 1.0}, {1.0, 0.5}, {0.5, 0.5}};
    auto eq = find_equilibria(catalog("sis_hetero"));
    auto ys = oracles::sis_hetero::y_star(p);
    CHECK(eq.y_star(0) == doctest::Approx(ys[0]).epsilon(1e-10));
    CHECK(eq.y_star(1) == doctest::Approx(ys[1]).epsilon(1e-10));
    for (int i = 0; i < 2; ++i) CHECK(eq.eigen_star(i).real() < 0.0);
}

TEST_CASE("equilibrium of linear birth, quadratic death") {
    auto eq = find_equilibria(catalog("linear_birth_quadratic_death", {{"k", 2}, {"lambda", 2.0}}));
    const double yi = oracles::lbqd::y_star_i(2, 2.0, 1.0, 1.0);
    CHECK(eq.y_star(0) == doctest::Approx(yi).epsilon(1e-10));
    CHECK(eq.y_star(1) == doctest::Approx(yi).epsilon(1e-10));
    auto eq3 = find_equilibria(catalog("linear_birth_quadratic_death", {{"k", 3}}));
    for (int i = 0; i < 3; ++i)
        CHECK(eq3.y_star(i) == doctest::Approx(oracles::lbqd::y_star_i(3, 1.0, 1.0, 1.0)).epsilon(1e-10));
}

TEST_CASE("equilibrium of bc23_bd and competition") {
    oracles::bc23::Params p{{1.0, 0.8}, {1.0, 1.2}, 1.0, 0.5};
    auto eq = find_equilibria(catalog("bc23_bd"));
    auto ys = oracles::bc23::y_star(p);
    CHECK(eq.y_star(0) == doctest::Approx(ys[0]).epsilon(1e-10));
    CHECK(eq.y_star(1) == doctest::Approx(ys[1]).epsilon(1e-10));

    oracles::competition::Params c{1.0, 1.2, 1.0, 1.0, 1.0, 1.0, 0.05, 0.0};
    auto eqc = find_equilibria(catalog("competition"));
    auto yc = oracles::competition::y_star(c);
    CHECK(eqc.y_star(0) == doctest::Approx(yc[0]).epsilon(1e-10));
    CHECK(eqc.y_star(1) == doctest::Approx(yc[1]).epsilon(1e-10));
}

TEST_CASE("equilibrium failures") {
    CatalogOptions loose;
    loose.check_constraints = false;
    try {
        find_equilibria(catalog("sis1d", {{"R0", 0.5}}, loose));
        FAIL("expected NoInteriorEquilibrium");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::NoInteriorEquilibrium);
    }
}

TEST_CASE("linearisation at the origin") {
    auto lin = linearize_at_origin(catalog("sis_hetero"));
    // b_ij = beta mu_i f_i for every j; d_i = 1/alpha_i.
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) CHECK(lin.b(i, j) == doctest::Approx(1.5).epsilon(1e-8));
    }
    CHECK(lin.d(0) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(lin.d(1) == doctest::Approx(2.0).epsilon(1e-8));
    CHECK(lin.cross_death_max < 1e-8);
    CHECK_THROWS_AS(linearize_at_origin(catalog("competition")), Error);
}
