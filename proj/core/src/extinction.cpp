#include "qsdkit/extinction.hpp"

#include "qsdkit/conditions.hpp"
#include "qsdkit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

namespace qsd {

LinearizedRates linearized_constants(const ModelSpec& m, const num::FdOptions& fd) {
    LinearizedRates lin = linearize_at_origin(m, fd);
    CheckOptions o;
    o.fd = fd;
    ConditionReport r = check_bd_assumptions(m, o);
    if (!r.passed()) throw Error(Errc::AssumptionViolated, r.witness ? r.witness->where : r.note);
    return lin;
}

double solve_D(const Matrix& b, const Vector& d) {
    const int k = static_cast<int>(d.size());
    auto f = [&](double D) {
        double s = 0.0;
        for (int i = 0; i < k; ++i) s += b(i, i) / (D + d(i));
        return s - 1.0;
    };
    auto df = [&](double D) {
        double s = 0.0;
        for (int i = 0; i < k; ++i) s -= b(i, i) / ((D + d(i)) * (D + d(i)));
        return s;
    };
    double r0 = 0.0, hi = 0.0;
    for (int i = 0; i < k; ++i) {
        if (!(d(i) > 0.0) || !(b(i, i) >= 0.0))
            throw Error(Errc::NoPositiveRoot, "needs d_i > 0 and b_ii >= 0");
        r0 += b(i, i) / d(i);
        hi += b(i, i);
    }
    if (!(r0 > 1.0)) {
        std::ostringstream os;
        os << "sum_i b_ii/d_i = " << r0 << " <= 1";
        throw Error(Errc::NoPositiveRoot, os.str());
    }
    // f is decreasing, f(0+) > 0 and f(sum b_ii) < 0
    double lo = 0.0;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        double mid = 0.5 * (lo + hi);
        (f(mid) > 0.0 ? lo : hi) = mid;
    }
    double D = 0.5 * (lo + hi);
    for (int it = 0; it < 5; ++it) {
        double step = f(D) / df(D);
        if (!std::isfinite(step)) break;
        D -= step;
    }
    return D;
}

double log_u_tilde(const Matrix& b, const Vector& d, double D, double log_Lambda, const std::vector<long>& x) {
    const int k = static_cast<int>(d.size());
    if (static_cast<int>(x.size()) != k) throw Error(Errc::InvalidState, "state has the wrong dimension");
    long n = 0;
    for (long xi : x) {
        if (xi < 0) throw Error(Errc::InvalidState, "negative coordinate");
        n += xi;
    }
    if (n == 0) throw Error(Errc::InvalidState, "u~ is defined off the origin only");
    double v = log_Lambda - std::log(static_cast<double>(n)) + std::lgamma(static_cast<double>(n) + 1.0);
    double la = 0.0, lb = 0.0;
    for (int i = 0; i < k; ++i) {
        const double xi = static_cast<double>(x[static_cast<std::size_t>(i)]);
        v += -std::lgamma(xi + 1.0) + (xi > 0 ? xi * std::log(b(i, i)) : 0.0);
        la -= xi * std::log(d(i));
        lb -= xi * std::log(D + d(i));
    }
    // ln(e^la - e^lb) with lb < la
    return v + la + std::log1p(-std::exp(lb - la));
}

namespace {

std::vector<int> checked_order(const std::vector<int>& order, int k) {
    if (order.empty()) {
        std::vector<int> id(static_cast<std::size_t>(k));
        std::iota(id.begin(), id.end(), 0);
        return id;
    }
    std::vector<int> s = order;
    std::sort(s.begin(), s.end());
    for (int i = 0; i < k; ++i)
        if (static_cast<int>(s.size()) != k || s[static_cast<std::size_t>(i)] != i)
            throw Error(Errc::ConfigError, "ordering must be a permutation of 1..k");
    return order;
}

double checked_log(double v, const char* what) {
    if (!(v > 0.0)) throw Error(Errc::AssumptionViolated, std::string(what) + " = " + std::to_string(v) + " <= 0");
    return std::log(v);
}

// ln of the rate factor shared by Lambda and the WKB asymptote:
//   prod_p beta_{e_c} beta_{-e_c} (q_p)
//   / ( b_{last,last} prod_p d beta_{-e_c}/dy_c (q_{p+1}) prod_{p<k-1} beta_{e_c}(q_{p+1}) )
// where c = order[p] and q_p zeroes the coordinates in positions < p and
// holds the rest at y*.
double nested_log_factor(const WkbEngine& e, const std::vector<int>& order, const LinearizedRates& lin) {
    const ModelSpec& m = e.model();
    const int k = m.k();
    std::vector<Vector> q(static_cast<std::size_t>(k + 1), e.y_star());
    for (int p = 1; p <= k; ++p) {
        q[static_cast<std::size_t>(p)] = q[static_cast<std::size_t>(p - 1)];
        q[static_cast<std::size_t>(p)](order[static_cast<std::size_t>(p - 1)]) = 0.0;
    }
    double v = 0.0;
    for (int p = 0; p < k; ++p) {
        const int c = order[static_cast<std::size_t>(p)];
        const Vector& here = q[static_cast<std::size_t>(p)];
        const Vector& next = q[static_cast<std::size_t>(p + 1)];
        v += checked_log(m.rate(m.birth_index(c), here), "birth rate at a partial equilibrium");
        v += checked_log(m.rate(m.death_index(c), here), "death rate at a partial equilibrium");
        const double slope = domain_partial(
            m, [&](const Vector& z) { return m.rate(m.death_index(c), z); }, next, c, e.field().fd());
        v -= checked_log(slope, "death-rate slope at a partial equilibrium");
        if (p < k - 1) v -= checked_log(m.rate(m.birth_index(c), next), "birth rate at a partial equilibrium");
    }
    const int last = order.back();
    v -= checked_log(lin.b(last, last), "b_kk");
    return v;
}

} // namespace

double log_lambda_normalizer(const WkbEngine& engine, double N, const std::vector<int>& order) {
    const ModelSpec& m = engine.model();
    LinearizedRates lin = linearized_constants(m, engine.field().fd());
    auto ord = checked_order(order, m.k());
    const double nested = nested_log_factor(engine, ord, lin);
    return 0.5 * (std::log(N) + engine.sigma_and_G().log_det - std::log(2.0 * std::numbers::pi) + nested) -
           N * engine.V_at_origin();
}

BDExtinction tau_asymptotic(const WkbEngine& engine, double N, const std::vector<int>& order) {
    const ModelSpec& m = engine.model();
    if (!m.is_birth_death())
        throw Error(Errc::NotBirthDeath, "prefactor unavailable: non-BD jump set (use log_tau_limit)");
    ConditionReport lk = check_linear_kolmogorov(m, engine.options().tol, engine.field().fd());
    if (!lk.passed())
        throw Error(Errc::ConditionViolated, "linear Kolmogorov condition fails: " +
                                                 (lk.witness ? lk.witness->where : std::string()));
    LinearizedRates lin = linearized_constants(m, engine.field().fd());
    BDExtinction r;
    r.b = lin.b;
    r.d = lin.d;
    r.D = solve_D(lin.b, lin.d);
    r.N = N;
    r.order = checked_order(order, m.k());
    r.A = engine.V_at_origin();
    r.log_Lambda = log_lambda_normalizer(engine, N, r.order);
    r.log_tau = -r.log_Lambda - std::log(r.D);
    r.tau_log10 = r.log_tau / std::numbers::ln10;
    if (r.log_tau < std::log(1e300)) r.tau = std::exp(r.log_tau);
    r.log_K = r.log_tau + 0.5 * std::log(N) - N * r.A;
    r.K = std::exp(r.log_K);
    return r;
}

double log_tau_limit(const WkbEngine& engine) { return engine.V_at_origin(); }

double log_linear_asymptote(const Matrix& b, const Vector& d, double log_Lambda, double xhat, const Vector& xi) {
    const int k = static_cast<int>(d.size());
    double v = log_Lambda - 0.5 * ((k - 1) * std::log(2.0 * std::numbers::pi) + (k + 1) * std::log(xhat));
    for (int i = 0; i < k; ++i) {
        v -= 0.5 * std::log(xi(i));
        v += xhat * xi(i) * std::log(b(i, i) / (xi(i) * d(i)));
    }
    return v;
}

double log_wkb_asymptote(const WkbEngine& engine, double N, double xhat, const Vector& xi,
                         const std::vector<int>& order) {
    const ModelSpec& m = engine.model();
    const int k = m.k();
    LinearizedRates lin = linearized_constants(m, engine.field().fd());
    auto ord = checked_order(order, k);
    double v = std::log(N) + engine.sigma_and_G().log_det - k * std::log(2.0 * std::numbers::pi) -
               (k + 1) * std::log(xhat) + nested_log_factor(engine, ord, lin);
    for (int i = 0; i < k; ++i) v -= std::log(xi(i));
    v *= 0.5;
    for (int i = 0; i < k; ++i) v += xhat * xi(i) * std::log(lin.b(i, i) / (xi(i) * lin.d(i)));
    return v - N * engine.V_at_origin();
}

} // namespace qsd
