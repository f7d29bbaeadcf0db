#include "qsdkit/catalog.hpp"
#include "qsdkit/errors.hpp"
#include "qsdkit/quadrature.hpp"
#include "qsdkit/wkb.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace qsd;

namespace {

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

} // namespace

TEST_CASE("Gauss-Legendre rules") {
    const auto& r = GaussLegendre::get(8);
    double wsum = 0.0;
    for (double w : r.weights) wsum += w;
    CHECK(wsum == doctest::Approx(2.0).epsilon(1e-15));
    // Exact for degree 2n-1.
    CHECK(integrate_fixed([](double x) { return std::pow(x, 15); }, 0.0, 1.0, 8) ==
          doctest::Approx(1.0 / 16).epsilon(1e-14));
    CHECK(integrate_fixed([](double x) { return std::exp(x); }, 0.0, 1.0) ==
          doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-15));
}

TEST_CASE("adaptive quadrature") {
    // Integrable endpoint singularity, never evaluated at the endpoint.
    auto r = integrate_adaptive([](double x) { return std::log(x); }, 0.0, 1.0);
    CHECK(r.value == doctest::Approx(-1.0).epsilon(1e-9));
    auto s = integrate_adaptive([](double x) { return std::sqrt(x); }, 0.0, 4.0);
    CHECK(s.value == doctest::Approx(16.0 / 3.0).epsilon(1e-10));
    try {
        integrate_adaptive([](double x) { return 1.0 / x; }, 0.0, 1.0, 8, 1e-12, 20);
        FAIL("expected IntegralDiverged");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::IntegralDiverged);
    }
}

TEST_CASE("sis1d: theta, theta0, V, V0 against closed forms") {
    const double R0 = 2.0;
    WkbEngine e(catalog("sis1d", {{"R0", R0}}));
    for (double y : {0.05, 0.25, 0.5, 0.75, 0.9}) {
        CAPTURE(y);
        CHECK(e.field().theta(vec({y}))(0) == doctest::Approx(oracles::sis1d::theta(R0, y)).epsilon(1e-12));
        CHECK(e.field().theta0(vec({y}))(0) == doctest::Approx(oracles::sis1d::theta0(R0, y)).epsilon(1e-7));
        CHECK(e.potential_V(vec({y})) == doctest::Approx(oracles::sis1d::V(R0, y)).epsilon(1e-10));
        CHECK(e.potential_V0(vec({y})) == doctest::Approx(oracles::sis1d::V0(R0, y)).epsilon(1e-9));
        CHECK(e.potential_V0_integral(vec({y})) == doctest::Approx(oracles::sis1d::V0(R0, y)).epsilon(1e-6));
    }
    CHECK(e.V_at_origin() == doctest::Approx(oracles::sis1d::A(R0)).epsilon(1e-11));
    CHECK(e.sigma_and_G().Sigma(0, 0) == doctest::Approx(oracles::sis1d::Sigma(R0)).epsilon(1e-8));
    CHECK(e.potential_V(vec({0.25})) == doctest::Approx(0.0540988).epsilon(1e-6));
    CHECK(e.potential_V0(vec({0.25})) == doctest::Approx(-0.490415).epsilon(1e-6));
}

TEST_CASE("sis1d: WKB approximation of the QSD") {
    WkbEngine e(catalog("sis1d"));
    auto q = e.qsd_wkb(100, vec({25}));
    CHECK(q.log_u == doctest::Approx(oracles::sis1d::log_u_wkb(2.0, 100, 25)).epsilon(1e-9));
    CHECK(q.u == doctest::Approx(4.1203e-4).epsilon(1e-4));
    CHECK(e.log_M_N(100) == doctest::Approx(0.5 * std::log(2.0 / (2 * std::numbers::pi * 100))).epsilon(1e-9));
    // Within delta of the boundary the body formula is refused.
    try {
        e.qsd_wkb(100, vec({2}));
        FAIL("expected TooCloseToBoundary");
    } catch (const Error& err) {
        CHECK(err.code() == Errc::TooCloseToBoundary);
    }
}

TEST_CASE("heterogeneous SIS: V(0) and det Sigma") {
    oracles::sis_hetero::Params p{3.0, {1.0, 1.0}, {1.0, 0.5}, {0.5, 0.5}};
    WkbEngine e(catalog("sis_hetero"));
    CHECK(e.sigma_and_G().det == doctest::Approx(oracles::sis_hetero::det_sigma(p)).epsilon(1e-7));
    // V(0) = sum f_i ln(1 + alpha_i mu_i E) - E/beta
    const double E = oracles::sis_hetero::E(p);
    const double A = 0.5 * std::log1p(E) + 0.5 * std::log1p(0.5 * E) - E / 3.0;
    CHECK(e.V_at_origin() == doctest::Approx(A).epsilon(1e-10));
}

TEST_CASE("linear birth, quadratic death: V(0) closed form") {
    for (auto [k, lambda, mu, kappa] : {std::tuple{2, 1.0, 1.0, 1.0}, std::tuple{3, 1.0, 2.0, 0.5}}) {
        WkbEngine e(catalog("linear_birth_quadratic_death",
                            {{"k", k}, {"lambda", lambda}, {"mu", mu}, {"kappa", kappa}}));
        CHECK(e.V_at_origin() == doctest::Approx(oracles::lbqd::A(k, lambda, mu, kappa)).epsilon(1e-10));
    }
}

TEST_CASE("bc23_bd: V(0) and det Sigma") {
    oracles::bc23::Params p{{1.0, 0.8}, {1.0, 1.2}, 1.0, 0.5};
    WkbEngine e(catalog("bc23_bd"));
    CHECK(e.V_at_origin() == doctest::Approx(oracles::bc23::A(p)).epsilon(1e-10));
    CHECK(e.sigma_and_G().det == doctest::Approx(oracles::bc23::det_sigma(p)).epsilon(1e-7));
}

TEST_CASE("competition: V and det Sigma against the closed form") {
    oracles::competition::Params p{1.0, 1.2, 1.0, 1.0, 1.0, 1.0, 0.05, 0.0};
    WkbEngine e(catalog("competition"));
    auto ys = oracles::competition::y_star(p);
    CHECK(e.sigma_and_G().det == doctest::Approx(oracles::competition::det_sigma(p, ys)).epsilon(1e-6));
    for (auto y : {vec({0.2, 0.3}), vec({1.0, 0.1}), vec({0.05, 1.4}), vec({2.0, 2.0})}) {
        CAPTURE(y.transpose());
        CHECK(e.potential_V(y) == doctest::Approx(oracles::competition::V(p, ys, y(0), y(1))).epsilon(1e-8));
    }
    CHECK(e.V_at_origin() == doctest::Approx(oracles::competition::V(p, ys, 0.0, 0.0)).epsilon(1e-9));
}

TEST_CASE("V is path independent and solves the Hamilton-Jacobi equation") {
    for (const char* name : {"sis_hetero", "bc23_bd", "competition"}) {
        INFO(name);
        WkbEngine e(catalog(name));
        for (const auto& y : interior_samples(e.model(), 12, 0.02)) {
            const Vector& ys = e.y_star();
            Vector w = 0.5 * (y + ys);
            w(0) = 0.5 * y(0);
            PolyPath detour{{ys, w, y}, 32};
            CHECK(std::abs(e.potential_V(y) - e.potential_V(y, detour)) < 1e-8);
            CHECK(e.hj_residual(y) < 1e-8);
            CHECK(e.transport_residual(y) < 1e-6);
        }
    }
}

TEST_CASE("Sigma and G satisfy the Lyapunov relations") {
    for (const char* name : {"sis1d", "sis_hetero", "linear_birth_quadratic_death", "bc23_bd", "competition"}) {
        INFO(name);
        WkbEngine e(catalog(name));
        const auto& sg = e.sigma_and_G();
        CHECK(sg.asymmetry < 1e-6);
        CHECK(sg.lyapunov_G_Sigma < 1e-8);
        CHECK(sg.lyapunov_J < 1e-8);
        Eigen::SelfAdjointEigenSolver<Matrix> es(sg.Sigma);
        CHECK(es.eigenvalues().minCoeff() > 0.0);
        CHECK(e.field().theta(e.y_star()).lpNorm<Eigen::Infinity>() < 1e-10);
    }
}

TEST_CASE("V0 product agrees with the theta0 line integral") {
    WkbEngine e(catalog("bc23_bd"));
    for (const auto& y : interior_samples(e.model(), 8, 0.05)) {
        auto steps = e.decompose_in_jumps(y);
        CHECK(e.V0_product(steps) == doctest::Approx(e.potential_V0_integral(y)).epsilon(1e-6));
    }
}

TEST_CASE("nested ordering: V(0) does not depend on coordinate labels") {
    auto m = catalog("bc23_bd");
    std::vector<int> perm{1, 0};
    WkbEngine a(m), b(m.with_permuted_coordinates(perm));
    CHECK(a.V_at_origin() == doctest::Approx(b.V_at_origin()).epsilon(1e-11));
    CHECK(a.sigma_and_G().det == doctest::Approx(b.sigma_and_G().det).epsilon(1e-8));
}

TEST_CASE("without IRR the line integral of theta depends on the path") {
    WkbEngine e(catalog("nonrev2d"));
    const Vector y = vec({0.2, 1.5});
    const Vector& ys = e.y_star();
    PolyPath detour{{ys, vec({y(0), ys(1)}), y}, 32};
    CHECK(std::abs(e.potential_V(y) - e.potential_V(y, detour)) > 1e-3);
}
