#include "qsdkit/catalog.hpp"
#include "qsdkit/errors.hpp"
#include "qsdkit/extinction.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace qsd;

namespace {

Errc code_of(auto&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no exception");
    return Errc::ConfigError;
}

} // namespace

TEST_CASE("D root") {
    Matrix b(2, 2);
    b << 1.5, 1.5, 1.5, 1.5;
    Vector d(2);
    d << 1.0, 2.0;
    const double D = solve_D(b, d);
    CHECK(1.5 / (D + 1.0) + 1.5 / (D + 2.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(D == doctest::Approx(oracles::D_root({1.5, 1.5}, {1.0, 2.0})).epsilon(1e-12));
    b << 0.2, 0.2, 0.2, 0.2;
    CHECK(code_of([&] { solve_D(b, d); }) == Errc::NoPositiveRoot);
}

TEST_CASE("linear-regime QSD") {
    Matrix b(1, 1);
    b << 2.0;
    Vector d(1);
    d << 1.0;
    const double D = solve_D(b, d);
    CHECK(D == doctest::Approx(1.0));
    // One type: u~_n = Lambda (b^n / n) (d^-n - (D + d)^-n).
    CHECK(log_u_tilde(b, d, D, 0.0, {1}) == doctest::Approx(0.0).scale(1.0));
    CHECK(log_u_tilde(b, d, D, 0.3, {2}) == doctest::Approx(0.3 + std::log(1.5)).epsilon(1e-14));
    CHECK(code_of([&] { log_u_tilde(b, d, D, 0.0, {0}); }) == Errc::InvalidState);
    CHECK(code_of([&] { log_u_tilde(b, d, D, 0.0, {-1}); }) == Errc::InvalidState);
}

TEST_CASE("sis1d: asymptotic extinction time") {
    for (double R0 : {1.5, 2.0, 3.0}) {
        WkbEngine e(catalog("sis1d", {{"R0", R0}}));
        for (double N : {50.0, 200.0}) {
            auto t = tau_asymptotic(e, N);
            CHECK(t.log_tau == doctest::Approx(oracles::sis1d::log_tau(R0, N)).epsilon(1e-9));
            CHECK(t.A == doctest::Approx(oracles::sis1d::A(R0)).epsilon(1e-11));
            CHECK(t.D == doctest::Approx(R0 - 1.0).epsilon(1e-8));
        }
    }
    WkbEngine e(catalog("sis1d"));
    auto t = tau_asymptotic(e, 50);
    CHECK(t.log_tau == doctest::Approx(9.313433239).epsilon(1e-9));
    CHECK(t.log_K == doctest::Approx(t.log_tau + 0.5 * std::log(50.0) - 50.0 * t.A).epsilon(1e-12));
    REQUIRE(t.tau);
    CHECK(std::log(*t.tau) == doctest::Approx(t.log_tau).epsilon(1e-12));
}

TEST_CASE("heterogeneous SIS: prefactor route vs the closed form") {
    oracles::sis_hetero::Params p{3.0, {1.0, 1.0}, {1.0, 0.5}, {0.5, 0.5}};
    WkbEngine e(catalog("sis_hetero"));
    for (double N : {50.0, 400.0}) {
        auto t = tau_asymptotic(e, N);
        CHECK(t.log_tau == doctest::Approx(oracles::sis_hetero::log_tau(p, N)).epsilon(1e-8));
    }
    // Unequal susceptibilities.
    oracles::sis_hetero::Params q{2.0, {1.5, 0.5}, {1.0, 0.5}, {0.5, 0.5}};
    WkbEngine eq(catalog("sis_hetero", {{"beta", 2.0}, {"mu1", 1.5}, {"mu2", 0.5}}));
    CHECK(tau_asymptotic(eq, 100).log_tau == doctest::Approx(oracles::sis_hetero::log_tau(q, 100)).epsilon(1e-8));
}

TEST_CASE("linear birth, quadratic death: prefactor route vs the closed form") {
    WkbEngine e(catalog("linear_birth_quadratic_death"));
    for (double N : {50.0, 300.0}) {
        CHECK(tau_asymptotic(e, N).log_tau == doctest::Approx(oracles::lbqd::log_tau(2, 1, 1, 1, N)).epsilon(1e-8));
    }
    WkbEngine e3(catalog("linear_birth_quadratic_death", {{"k", 3}, {"mu", 2.0}, {"kappa", 0.5}}));
    CHECK(tau_asymptotic(e3, 80).log_tau ==
          doctest::Approx(oracles::lbqd::log_tau(3, 1, 2, 0.5, 80)).epsilon(1e-8));
}

TEST_CASE("bc23_bd: prefactor route vs the hand reduction") {
    oracles::bc23::Params p{{1.0, 0.8}, {1.0, 1.2}, 1.0, 0.5};
    WkbEngine e(catalog("bc23_bd"));
    CHECK(tau_asymptotic(e, 50).log_tau == doctest::Approx(oracles::bc23::log_tau(p, 50)).epsilon(1e-8));
    oracles::bc23::Params r{{1.2, 0.6, 0.9}, {1.0, 1.1, 0.8}, 2.0, 0.0};
    WkbEngine e3(catalog("bc23_bd", {{"k", 3},
                                     {"kappa", 2.0},
                                     {"rho", 0.0},
                                     {"beta1", 1.2},
                                     {"beta2", 0.6},
                                     {"beta3", 0.9},
                                     {"delta1", 1.0},
                                     {"delta2", 1.1},
                                     {"delta3", 0.8}}));
    CHECK(tau_asymptotic(e3, 60).log_tau == doctest::Approx(oracles::bc23::log_tau(r, 60)).epsilon(1e-8));
}

TEST_CASE("Lambda does not depend on the coordinate ordering") {
    for (const char* name : {"sis_hetero", "bc23_bd", "linear_birth_quadratic_death"}) {
        INFO(name);
        WkbEngine e(catalog(name));
        const double a = log_lambda_normalizer(e, 100);
        const double b = log_lambda_normalizer(e, 100, {1, 0});
        CHECK(a == doctest::Approx(b).epsilon(1e-9));
    }
}

TEST_CASE("non-birth-death models have the limit but no prefactor") {
    WkbEngine e(catalog("competition"));
    CHECK(code_of([&] { tau_asymptotic(e, 50); }) == Errc::NotBirthDeath);
    CHECK(log_tau_limit(e) == doctest::Approx(e.V_at_origin()));
}

TEST_CASE("linear regime matches the WKB body at large N") {
    // At x = xhat xi with 1 << xhat << N the two approximations overlap.
    for (const char* name : {"sis1d", "sis_hetero", "linear_birth_quadratic_death", "bc23_bd"}) {
        INFO(name);
        auto m = catalog(name);
        WkbOptions o;
        o.delta = 0.0;
        o.v0_crosscheck = false;
        WkbEngine e(m, o);
        const double N = 1e6, xhat = 100;
        auto t = tau_asymptotic(e, N);
        Vector xi = Vector::Constant(m.k(), 1.0 / m.k());
        Vector x = xhat * xi;
        std::vector<long> xl;
        for (int i = 0; i < m.k(); ++i) xl.push_back(std::lround(x(i)));
        const double lw = e.qsd_wkb(N, x).log_u;
        const double lu = log_u_tilde(t.b, t.d, t.D, t.log_Lambda, xl);
        const double la = log_linear_asymptote(t.b, t.d, t.log_Lambda, xhat, xi);
        CHECK(std::abs(lw - lu) < 0.02);
        CHECK(std::abs(lw - la) < 0.02);
        CHECK(std::abs(log_wkb_asymptote(e, N, xhat, xi) - la) < 1e-9);
    }
}
