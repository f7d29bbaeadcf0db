#include "qsdkit/catalog.hpp"
#include "qsdkit/errors.hpp"
#include "qsdkit/oracle.hpp"
#include "qsdkit/wkb.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

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

TEST_CASE("truncated chain: indexing and transitions") {
    auto m = catalog("sis_hetero");
    TruncatedChain c(m, 10);
    CHECK(c.bound() == std::vector<long>{5, 5});
    CHECK(c.size() == 35);
    for (std::size_t s = 0; s < c.size(); ++s) CHECK(c.index_of(c.state(s)) == static_cast<std::int64_t>(s));
    CHECK(c.index_of({0, 0}) == -1);
    CHECK(c.index_of({6, 0}) == -1);
    // Only (1,0) and (0,1) can be absorbed.
    for (std::size_t s = 0; s < c.size(); ++s) {
        auto x = c.state(s);
        const bool unit = x[0] + x[1] == 1;
        CHECK((c.absorption_rate(s) > 0.0) == unit);
        double out = 0.0;
        for (auto t = c.row_begin(s); t < c.row_end(s); ++t) out += c.rate(t);
        CHECK(out == doctest::Approx(c.exit_rate(s)));
    }
}

TEST_CASE("truncated chain: lattice cut and size cap") {
    auto m = catalog("linear_birth_quadratic_death");
    TruncatedChain c(m, 10, std::vector<long>{8, 8});
    CHECK(c.size() == 80);
    double clipped = 0.0;
    for (std::size_t s = 0; s < c.size(); ++s) clipped += c.clipped_rate(s);
    CHECK(clipped > 0.0);
    CHECK(code_of([&] { TruncatedChain(m, 10, std::vector<long>{100, 100}, 1000); }) == Errc::StateSpaceTooLarge);
}

TEST_CASE("sis1d: exact QSD against frozen high-precision values") {
    // Mean extinction times from the QSD computed with 50-digit arithmetic.
    struct Ref {
        long N;
        double log_tau;
    };
    auto m = catalog("sis1d");
    for (Ref r : {Ref{25, 5.0242642283}, Ref{40, 7.6198320950}, Ref{80, 14.9292005244}, Ref{160, 30.0047614096}}) {
        CAPTURE(r.N);
        auto o = exact_qsd(m, r.N);
        CHECK(o.log_tau == doctest::Approx(r.log_tau).epsilon(2e-11));
        CHECK(std::accumulate(o.u.begin(), o.u.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-13));
        CHECK(o.residual < 1e-10);
        CHECK(o.truncation_mass == 0.0);
    }
    auto o = exact_qsd(m, 25);
    CHECK(o.decay_rate_eigen == doctest::Approx(o.decay_rate).epsilon(1e-10));
}

TEST_CASE("lattice model: truncation mass is negligible with the default cut") {
    auto o = exact_qsd(catalog("linear_birth_quadratic_death"), 10);
    CHECK(o.truncation_mass < 1e-12);
    CHECK(o.residual < 1e-10);
    CHECK(o.decay_rate_eigen == doctest::Approx(o.decay_rate).epsilon(1e-8));
    // A tight cut keeps real mass on clipped states.
    OracleOptions strict;
    strict.mass_tol = 1e-12;
    CHECK(code_of([&] { exact_qsd(catalog("linear_birth_quadratic_death"), 10, std::vector<long>{6, 6}, strict); }) ==
          Errc::TruncationMassTooLarge);
}

TEST_CASE("power iteration reports non-convergence") {
    OracleOptions o;
    o.max_iterations = 5;
    CHECK(code_of([&] { exact_qsd(catalog("sis1d"), 40, std::nullopt, o); }) == Errc::NotConverged);
}

TEST_CASE("sis1d: WKB error profile at N = 100") {
    WkbEngine e(catalog("sis1d"));
    auto o = exact_qsd(e.model(), 100);
    auto p = qsd_error_profile(e, o, 0.05);
    CHECK(p.mode == std::vector<long>{49});
    CHECK(p.log_ratio_at_mode == doctest::Approx(0.02326).epsilon(1e-3));
    CHECK(p.max_abs_log_ratio_body == doctest::Approx(0.0619).epsilon(2e-3));
    CHECK(p.body_mass_wkb == doctest::Approx(1.0236).epsilon(1e-3));
    for (const auto& r : p.rows) {
        if (!r.body) continue;
        CHECK(r.log_ratio == doctest::Approx(std::log(r.u_wkb / r.u_exact)));
    }
}

TEST_CASE("KS test against an exponential law") {
    // Exact quantiles of Exp(1): D is 1/(2n), p close to 1.
    std::vector<double> t;
    const int n = 200;
    for (int i = 0; i < n; ++i) t.push_back(-std::log(1.0 - (i + 0.5) / n));
    auto r = ks_test_exponential(t, 1.0);
    CHECK(r.D == doctest::Approx(0.5 / n).epsilon(1e-12));
    CHECK(r.p > 0.99);
    // Wrong mean: rejected.
    CHECK(ks_test_exponential(t, 3.0).p < 1e-6);
}

TEST_CASE("Gillespie: reproducible, thread-independent, unbiased") {
    auto m = catalog("sis1d");
    auto o = exact_qsd(m, 20);
    auto init = InitialDistribution::from_oracle(o);
    SimOptions one, four;
    one.threads = 1;
    four.threads = 4;
    auto a = gillespie_extinction(m, 20, init, 3000, 11, one);
    auto b = gillespie_extinction(m, 20, init, 3000, 11, four);
    CHECK(a.times == b.times);
    CHECK(a.mean == b.mean);
    CHECK(a.aborted == 0);
    CHECK(std::abs(a.mean - o.tau_exact) < 4.0 * a.std_error);
    CHECK(ks_test_exponential(a.times, o.tau_exact).p > 1e-3);
    auto c = gillespie_extinction(m, 20, init, 3000, 12, one);
    CHECK(c.times != a.times);

    auto pt = InitialDistribution::point({10});
    auto d = gillespie_extinction(m, 20, pt, 500, 3, one);
    CHECK(d.replicates == 500);
    CHECK(d.mean > 0.0);
    CHECK(code_of([&] { gillespie_extinction(m, 20, InitialDistribution::point({30}), 10, 1); }) ==
          Errc::InvalidState);
}
