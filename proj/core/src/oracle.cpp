#include "qsdkit/oracle.hpp"

#include "qsdkit/deterministic.hpp"
#include "qsdkit/errors.hpp"
#include "qsdkit/wkb.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace qsd {

std::vector<long> default_truncation(const ModelSpec& m, long N, const Vector& y_star) {
    std::vector<long> t(static_cast<std::size_t>(m.k()));
    for (int i = 0; i < m.k(); ++i)
        t[static_cast<std::size_t>(i)] =
            static_cast<long>(std::ceil(6.0 * static_cast<double>(N) * y_star(i) + 10.0 * std::sqrt(static_cast<double>(N))));
    return t;
}

TruncatedChain::TruncatedChain(const ModelSpec& m, long N, std::optional<std::vector<long>> truncation,
                               std::size_t cap)
    : N_(N) {
    if (N < 1) throw Error(Errc::ConfigError, "N must be >= 1");
    const int k = m.k();
    const bool box = m.geom().kind == GeomKind::Box;
    if (box) {
        bound_ = m.geom().capacities(N);
        if (truncation) {
            if (truncation->size() != static_cast<std::size_t>(k))
                throw Error(Errc::ConfigError, "truncation needs one bound per coordinate");
            for (int i = 0; i < k; ++i)
                bound_[static_cast<std::size_t>(i)] =
                    std::min(bound_[static_cast<std::size_t>(i)], (*truncation)[static_cast<std::size_t>(i)]);
        }
    } else {
        if (truncation) {
            if (truncation->size() != static_cast<std::size_t>(k))
                throw Error(Errc::ConfigError, "truncation needs one bound per coordinate");
            bound_ = *truncation;
        } else {
            bound_ = default_truncation(m, N, find_equilibria(m).y_star);
        }
    }

    std::size_t total = 1;
    stride_.resize(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
        if (bound_[static_cast<std::size_t>(i)] < 1) throw Error(Errc::ConfigError, "truncation bounds must be >= 1");
        stride_[static_cast<std::size_t>(i)] = total;
        const auto side = static_cast<std::size_t>(bound_[static_cast<std::size_t>(i)] + 1);
        if (total > cap / side + 1) throw Error(Errc::StateSpaceTooLarge, "more than " + std::to_string(cap) + " states");
        total *= side;
    }
    const std::size_t n = total - 1;
    if (n > cap)
        throw Error(Errc::StateSpaceTooLarge, std::to_string(n) + " states exceed the cap of " + std::to_string(cap));

    offsets_.assign(n + 1, 0);
    exit_.assign(n, 0.0);
    absorb_.assign(n, 0.0);
    clipped_.assign(n, 0.0);
    targets_.reserve(n * m.num_jumps());
    rates_.reserve(n * m.num_jumps());

    Vector y(k);
    std::vector<long> x(static_cast<std::size_t>(k));
    const double Nd = static_cast<double>(N);
    for (std::size_t s = 0; s < n; ++s) {
        x = state(s);
        for (int i = 0; i < k; ++i) y(i) = static_cast<double>(x[static_cast<std::size_t>(i)]) / Nd;
        for (std::size_t j = 0; j < m.num_jumps(); ++j) {
            const double r = Nd * m.rate(j, y);
            if (r == 0.0) continue;
            if (!(r > 0.0) || !std::isfinite(r))
                throw Error(Errc::InvalidModel, "rate of jump " + to_string(m.jump(j)) + " is " + std::to_string(r) +
                                                    " at state " + std::to_string(s));
            bool outside_low = false, outside_high = false, origin = true;
            std::int64_t idx = 0;
            for (int i = 0; i < k; ++i) {
                long xt = x[static_cast<std::size_t>(i)] + m.jump(j).components[static_cast<std::size_t>(i)];
                if (xt < 0) outside_low = true;
                if (xt > bound_[static_cast<std::size_t>(i)]) outside_high = true;
                if (xt != 0) origin = false;
                idx += static_cast<std::int64_t>(xt) * static_cast<std::int64_t>(stride_[static_cast<std::size_t>(i)]);
            }
            if (outside_low || (outside_high && box && !truncation))
                throw Error(Errc::InvalidModel, "positive rate for jump " + to_string(m.jump(j)) +
                                                    " leaving the state space");
            if (outside_high) {
                clipped_[s] += r;
                continue;
            }
            targets_.push_back(origin ? -1 : idx - 1);
            rates_.push_back(r);
            exit_[s] += r;
            if (origin) absorb_[s] += r;
        }
        offsets_[s + 1] = targets_.size();
        q_max_ = std::max(q_max_, exit_[s]);
    }
}

std::vector<long> TruncatedChain::state(std::size_t s) const {
    std::size_t idx = s + 1;
    std::vector<long> x(bound_.size());
    for (std::size_t i = 0; i < bound_.size(); ++i) {
        const auto side = static_cast<std::size_t>(bound_[i] + 1);
        x[i] = static_cast<long>(idx % side);
        idx /= side;
    }
    return x;
}

std::int64_t TruncatedChain::index_of(const std::vector<long>& x) const {
    if (x.size() != bound_.size()) return -1;
    std::int64_t idx = 0;
    for (std::size_t i = 0; i < bound_.size(); ++i) {
        if (x[i] < 0 || x[i] > bound_[i]) return -1;
        idx += static_cast<std::int64_t>(x[i]) * static_cast<std::int64_t>(stride_[i]);
    }
    return idx - 1;
}

namespace {

// w = u Q_C, accumulated in extended precision.
void apply_generator(const TruncatedChain& c, const std::vector<double>& u, std::vector<long double>& w) {
    const std::size_t n = c.size();
    w.assign(n, 0.0L);
    for (std::size_t s = 0; s < n; ++s) {
        w[s] -= static_cast<long double>(c.exit_rate(s)) * u[s];
        for (std::size_t t = c.row_begin(s); t < c.row_end(s); ++t) {
            auto tg = c.target(t);
            if (tg >= 0) w[static_cast<std::size_t>(tg)] += static_cast<long double>(c.rate(t)) * u[s];
        }
    }
}

} // namespace

OracleResult exact_qsd(const ModelSpec& m, long N, std::optional<std::vector<long>> truncation,
                       const OracleOptions& o) {
    TruncatedChain c(m, N, truncation, o.cap);
    const std::size_t n = c.size();
    const double q = c.q_max();
    if (!(q > 0.0)) throw Error(Errc::InvalidModel, "chain has no transitions");

    std::vector<double> u(n, 1.0 / static_cast<double>(n)), v(n);
    if (o.start) {
        if (o.start->size() != n) throw Error(Errc::ConfigError, "start vector has the wrong size");
        u = *o.start;
        double s = std::accumulate(u.begin(), u.end(), 0.0);
        for (double& x : u) x /= s;
    }
    std::vector<double> stay(n);
    for (std::size_t s = 0; s < n; ++s) stay[s] = 1.0 - c.exit_rate(s) / q;

    OracleResult r;
    std::vector<long double> w;
    auto residual_of = [&](const std::vector<double>& uu, double& flux) {
        long double f = 0.0L;
        for (std::size_t s = 0; s < n; ++s) f += static_cast<long double>(uu[s]) * c.absorption_rate(s);
        flux = static_cast<double>(f);
        apply_generator(c, uu, w);
        long double res = 0.0L;
        for (std::size_t s = 0; s < n; ++s) res += std::abs(w[s] + f * uu[s]);
        return static_cast<double>(res / static_cast<long double>(N));
    };

    std::vector<std::size_t> absorbing;
    for (std::size_t s = 0; s < n; ++s)
        if (c.absorption_rate(s) > 0.0) absorbing.push_back(s);
    auto flux_of = [&](const std::vector<double>& uu) {
        long double f = 0.0L;
        for (std::size_t s : absorbing) f += static_cast<long double>(uu[s]) * c.absorption_rate(s);
        return static_cast<double>(f);
    };

    // The L1 change is dominated by the bulk of u, while 1/tau lives on the
    // tiny components next to the origin, so the absorption flux is tracked
    // separately until it settles at round-off.
    long it = 0;
    double change = std::numeric_limits<double>::infinity();
    double flux_change = change;
    double flux_prev = flux_of(u);
    bool satisfied = false;
    long polish_left = 0;
    double best = change;
    long since_best = 0;
    for (; it < o.max_iterations; ++it) {
        for (std::size_t s = 0; s < n; ++s) v[s] = u[s] * stay[s];
        for (std::size_t s = 0; s < n; ++s) {
            const double us = u[s] / q;
            for (std::size_t t = c.row_begin(s); t < c.row_end(s); ++t) {
                auto tg = c.target(t);
                if (tg >= 0) v[static_cast<std::size_t>(tg)] += us * c.rate(t);
            }
        }
        double norm = 0.0;
        for (double x : v) norm += x;
        change = 0.0;
        for (std::size_t s = 0; s < n; ++s) {
            v[s] /= norm;
            change += std::abs(v[s] - u[s]);
        }
        u.swap(v);
        const double flux_now = flux_of(u);
        flux_change = std::abs(flux_now - flux_prev) / flux_now;
        flux_prev = flux_now;

        if (!satisfied) {
            if (change < o.change_tol && flux_change < 1e-15) {
                double flux;
                if (residual_of(u, flux) < o.residual_tol) {
                    satisfied = true;
                    polish_left = std::max(it + 1, 1000L); // settle at round-off
                    best = std::max(change, flux_change);
                }
            }
        } else {
            const double worst = std::max(change, flux_change);
            if (worst < best) {
                best = worst;
                since_best = 0;
            } else {
                ++since_best;
            }
            if (worst < 1e-17 || since_best > 500 || --polish_left <= 0) {
                ++it;
                break;
            }
        }
    }
    if (!satisfied) {
        std::ostringstream os;
        os << it << " iterations, last L1 change " << change;
        throw Error(Errc::NotConverged, os.str());
    }

    double flux = 0.0;
    r.residual = residual_of(u, flux);
    r.decay_rate = flux;
    long double num = 0.0L, den = 0.0L;
    for (std::size_t s = 0; s < n; ++s) {
        num += w[s] * u[s];
        den += static_cast<long double>(u[s]) * u[s];
    }
    r.decay_rate_eigen = static_cast<double>(-num / den);
    r.tau_exact = 1.0 / flux;
    r.log_tau = -std::log(flux);
    r.iterations = it;
    r.change = change;
    r.q_max = q;
    r.N = N;
    r.truncation = c.bound();
    for (std::size_t s = 0; s < n; ++s)
        if (c.clipped_rate(s) > 0.0) r.truncation_mass += u[s];
    r.states.reserve(n);
    for (std::size_t s = 0; s < n; ++s) r.states.push_back(c.state(s));
    r.u = std::move(u);
    if (r.truncation_mass > o.mass_tol) {
        std::ostringstream os;
        os << "QSD mass " << r.truncation_mass << " on states next to the truncation face exceeds " << o.mass_tol;
        throw Error(Errc::TruncationMassTooLarge, os.str());
    }
    return r;
}

ErrorProfile qsd_error_profile(const WkbEngine& engine, const OracleResult& exact, double delta) {
    const ModelSpec& m = engine.model();
    const double N = static_cast<double>(exact.N);
    ErrorProfile p;
    std::size_t mode = 0;
    for (std::size_t s = 0; s < exact.u.size(); ++s)
        if (exact.u[s] > exact.u[mode]) mode = s;
    p.mode = exact.states[mode];
    for (std::size_t s = 0; s < exact.u.size(); ++s) {
        ProfileRow row;
        row.x = exact.states[s];
        row.u_exact = exact.u[s];
        Vector x(m.k());
        for (int i = 0; i < m.k(); ++i) x(i) = static_cast<double>(row.x[static_cast<std::size_t>(i)]);
        row.body = m.boundary_distance(x / N) >= delta - 1e-12;
        if (row.body) {
            QsdApprox a = engine.qsd_wkb(N, x);
            row.u_wkb = a.u;
            row.log_ratio = a.log_u - std::log(row.u_exact);
            p.max_abs_log_ratio_body = std::max(p.max_abs_log_ratio_body, std::abs(row.log_ratio));
            p.body_mass_wkb += row.u_wkb;
            p.body_mass_exact += row.u_exact;
            if (s == mode) p.log_ratio_at_mode = row.log_ratio;
        } else {
            row.u_wkb = std::numeric_limits<double>::quiet_NaN();
            row.log_ratio = std::numeric_limits<double>::quiet_NaN();
        }
        p.rows.push_back(std::move(row));
    }
    return p;
}

KsResult ks_test_exponential(std::vector<double> times, double mean) {
    KsResult r;
    const std::size_t n = times.size();
    if (n == 0 || !(mean > 0.0)) return r;
    std::sort(times.begin(), times.end());
    const double nd = static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double F = -std::expm1(-times[i] / mean);
        r.D = std::max({r.D, (static_cast<double>(i) + 1.0) / nd - F, F - static_cast<double>(i) / nd});
    }
    const double sn = std::sqrt(nd);
    const double lambda = (sn + 0.12 + 0.11 / sn) * r.D;
    double p = 0.0;
    for (int j = 1; j <= 100; ++j) {
        const double term = std::exp(-2.0 * j * j * lambda * lambda);
        p += (j % 2 ? 2.0 : -2.0) * term;
        if (term < 1e-18) break;
    }
    r.p = std::clamp(p, 0.0, 1.0);
    if (lambda < 0.2) r.p = 1.0; // the alternating series is useless for tiny lambda
    return r;
}

} // namespace qsd
