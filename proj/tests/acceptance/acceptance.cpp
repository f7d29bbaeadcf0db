// Acceptance run: one PASS/FAIL line per criterion.
//
// Exit status: 0 when every criterion was evaluated, 1 when one threw before
// reaching a verdict. With --strict any FAIL also gives exit status 1.

#include "qsdkit/catalog.hpp"
#include "qsdkit/conditions.hpp"
#include "qsdkit/errors.hpp"
#include "qsdkit/extinction.hpp"
#include "qsdkit/oracle.hpp"
#include "qsdkit/wkb.hpp"

#include "oracles.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

using namespace qsd;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmtnum(double v, int prec = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    return buf;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

const std::vector<std::string> kConforming{"sis1d", "sis_hetero", "linear_birth_quadratic_death", "bc23_bd",
                                           "competition"};

Verdict sis_hetero_closed_form() {
    oracles::sis_hetero::Params p{3.0, {1.0, 1.0}, {1.0, 0.5}, {0.5, 0.5}};
    WkbEngine e(catalog("sis_hetero", {{"beta", 3.0}, {"mu1", 1.0}, {"mu2", 1.0}, {"alpha1", 1.0},
                                       {"alpha2", 0.5}, {"f1", 0.5}, {"f2", 0.5}}));
    const double got = tau_asymptotic(e, 50).log_tau;
    const double want = oracles::sis_hetero::log_tau(p, 50);
    const double r = rel(got, want);
    return {r < 1e-8, "log tau " + fmtnum(got, 12) + " vs closed form " + fmtnum(want, 12) + ", rel " + fmtnum(r, 3)};
}

Verdict lbqd_closed_form() {
    WkbEngine e(catalog("linear_birth_quadratic_death", {{"k", 2}, {"lambda", 1.0}, {"mu", 1.0}, {"kappa", 1.0}}));
    const double got = tau_asymptotic(e, 50).log_tau;
    const double want = oracles::lbqd::log_tau(2, 1.0, 1.0, 1.0, 50);
    const double r = rel(got, want);
    return {r < 1e-8, "log tau " + fmtnum(got, 12) + " vs closed form " + fmtnum(want, 12) + ", rel " + fmtnum(r, 3)};
}

Verdict competition_det() {
    oracles::competition::Params p{1.0, 1.2, 1.0, 1.0, 1.0, 1.0, 0.05, 0.0};
    WkbEngine e(catalog("competition"));
    const double got = e.sigma_and_G().det;
    const double want = oracles::competition::det_sigma(p, oracles::competition::y_star(p));
    const double r = rel(got, want);
    return {r < 1e-6, "det Sigma " + fmtnum(got, 10) + " vs closed form " + fmtnum(want, 10) + ", rel " + fmtnum(r, 3) +
                          " (a1 a4 a5 = a2 a3 a6 = 1.2)"};
}

Verdict exponent_convergence() {
    auto m = catalog("sis1d", {{"R0", 2.0}});
    WkbEngine e(m);
    const double A = e.V_at_origin();
    std::vector<double> gap;
    bool envelope = true;
    std::string s;
    for (long N : {40L, 80L, 160L}) {
        auto o = exact_qsd(m, N);
        const double g = std::abs(o.log_tau / static_cast<double>(N) - A);
        const double env = 2.5 / static_cast<double>(N) * std::log(static_cast<double>(N));
        envelope = envelope && g < env;
        gap.push_back(g);
        s += "N=" + std::to_string(N) + ": |ln tau/N - A| = " + fmtnum(g, 4) + " (envelope " + fmtnum(env, 3) + "); ";
    }
    const bool monotone = gap[1] < gap[0] && gap[2] < gap[1];
    auto o160 = exact_qsd(m, 160);
    const double ratio = o160.tau_exact / std::exp(tau_asymptotic(e, 160).log_tau);
    const bool ratio_ok = ratio >= 0.8 && ratio <= 1.25;
    s += "monotone " + std::string(monotone ? "yes" : "no") + ", envelope " + (envelope ? "yes" : "no") +
         ", tau_exact/tau_asym(160) = " + fmtnum(ratio, 6);
    return {monotone && envelope && ratio_ok, s};
}

Verdict qsd_body() {
    WkbEngine e(catalog("sis1d", {{"R0", 2.0}}));
    auto o = exact_qsd(e.model(), 100);
    auto p = qsd_error_profile(e, o, 0.05);
    const bool ok = p.max_abs_log_ratio_body <= 0.1 && std::abs(p.log_ratio_at_mode) <= 0.02;
    return {ok, "max |ln(u_wkb/u_exact)| on 5..95 = " + fmtnum(p.max_abs_log_ratio_body, 4) + " (<= 0.1), at mode x=" +
                    std::to_string(p.mode[0]) + ": " + fmtnum(p.log_ratio_at_mode, 4) + " (<= 0.02)"};
}

Verdict oracle_identities() {
    struct Case {
        const char* name;
        long N;
    };
    bool ok = true;
    std::string s;
    for (Case c : {Case{"sis1d", 25}, Case{"sis_hetero", 20}, Case{"linear_birth_quadratic_death", 10},
                   Case{"bc23_bd", 10}, Case{"competition", 10}, Case{"nonrev2d", 10}}) {
        auto m = catalog(c.name);
        auto o = exact_qsd(m, c.N);
        const double r = rel(o.decay_rate_eigen, o.decay_rate);
        const bool small = o.u.size() <= 100000;
        const bool pass = small && o.residual < 1e-10 && r < 1e-10;
        ok = ok && pass;
        s += std::string(c.name) + "(N=" + std::to_string(c.N) + ", " + std::to_string(o.u.size()) +
             " states): residual " + fmtnum(o.residual, 2) + ", routes rel " + fmtnum(r, 2) + "; ";
    }
    return {ok, s};
}

// Relative residual of the linear-regime balance equations at |x| <= nmax.
// The equations are linear in Lambda, so Lambda = 1 avoids underflow.
double linear_balance(const BDExtinction& t, int k, int nmax) {
    auto u = [&](std::vector<long> x) {
        long n = 0;
        for (long v : x) {
            if (v < 0) return 0.0;
            n += v;
        }
        if (n == 0) return 0.0;
        return std::exp(log_u_tilde(t.b, t.d, t.D, 0.0, x));
    };
    double worst = 0.0;
    std::vector<long> x(static_cast<std::size_t>(k), 0);
    std::function<void(int, long)> rec = [&](int i, long left) {
        if (i == k) {
            long n = 0;
            for (long v : x) n += v;
            if (n == 0) return;
            double in = 0.0, out = 0.0;
            for (int j = 0; j < k; ++j) {
                const auto J = static_cast<std::size_t>(j);
                auto lo = x, hi = x;
                --lo[J];
                ++hi[J];
                in += u(lo) * t.b(j, j) * static_cast<double>(n - 1) + u(hi) * t.d(j) * static_cast<double>(x[J] + 1);
                out += u(x) * (t.b(j, j) * static_cast<double>(n) + t.d(j) * static_cast<double>(x[J]));
            }
            const double r = std::abs(in - out) / (in + out);
            worst = std::isfinite(r) ? std::max(worst, r) : std::numeric_limits<double>::infinity();
            return;
        }
        for (long v = 0; v <= left; ++v) {
            x[static_cast<std::size_t>(i)] = v;
            rec(i + 1, left - v);
        }
        x[static_cast<std::size_t>(i)] = 0;
    };
    rec(0, nmax);
    return worst;
}

Verdict property_suite() {
    bool ok = true;
    std::string s;
    for (const auto& name : kConforming) {
        auto m = catalog(name);
        WkbEngine e(m);
        const Vector& ys = e.y_star();
        double path = 0.0, hj = 0.0, tr = 0.0;
        for (const auto& y : interior_samples(m, 100)) {
            // Detour through a point that shares no coordinate with either end.
            Vector w = 0.5 * (y + ys);
            w(0) = 0.25 * y(0) + 0.75 * ys(0);
            PolyPath detour{{ys, w, y}, 32};
            path = std::max(path, std::abs(e.potential_V(y) - e.potential_V(y, detour)));
            hj = std::max(hj, e.hj_residual(y));
            tr = std::max(tr, e.transport_residual(y));
        }
        const auto& sg = e.sigma_and_G();
        const double th = e.field().theta(ys).lpNorm<Eigen::Infinity>();
        const double lyap = std::max(sg.lyapunov_G_Sigma, sg.lyapunov_J);
        bool pass = path < 1e-8 && hj < 1e-8 && tr < 1e-6 && sg.asymmetry < 1e-8 && lyap < 1e-8 && th < 1e-10;
        s += name + ": path " + fmtnum(path, 2) + ", HJ " + fmtnum(hj, 2) + ", transport " + fmtnum(tr, 2) + ", Sigma asym " +
             fmtnum(sg.asymmetry, 2) + ", Lyapunov " + fmtnum(lyap, 2) + ", |theta(y*)| " + fmtnum(th, 2);
        if (m.is_birth_death()) {
            auto t = tau_asymptotic(e, 1e6);
            const double bal = linear_balance(t, m.k(), 20);
            // Matching at 1 << xhat << N, with the full WKB body.
            WkbOptions o;
            o.delta = 0.0;
            o.v0_crosscheck = false;
            WkbEngine near(m, o);
            const double N = 1e6, xhat = 100;
            Vector xi = Vector::Constant(m.k(), 1.0 / m.k());
            std::vector<long> xl;
            for (int i = 0; i < m.k(); ++i) xl.push_back(std::lround(xhat * xi(i)));
            const double lw = near.qsd_wkb(N, xhat * xi).log_u;
            const double lu = log_u_tilde(t.b, t.d, t.D, t.log_Lambda, xl);
            const double la = log_linear_asymptote(t.b, t.d, t.log_Lambda, xhat, xi);
            const double lwa = log_wkb_asymptote(near, N, xhat, xi);
            const double match = std::max({std::abs(std::expm1(lw - lu)), std::abs(std::expm1(lw - la)),
                                           std::abs(std::expm1(lwa - la))});
            pass = pass && bal < 1e-10 && match < 0.02;
            s += ", linear balance " + fmtnum(bal, 2) + ", matching " + fmtnum(match, 2);
        }
        s += pass ? "; " : " [fail]; ";
        ok = ok && pass;
    }
    return {ok, s};
}

Verdict negative_controls() {
    auto irr = check_IRR(catalog("nonrev2d"));
    const bool a = irr.status == ConditionStatus::Fail && irr.worst_residual > 1e-3;
    auto [k1, irr2] = check_K1_IRR2(catalog("competition", {{"eta", 0.5}}));
    const bool b = k1.status == ConditionStatus::Fail;
    bool c = false;
    try {
        catalog("linear_birth_quadratic_death", {{"k", 2}, {"lambda", 1.0}, {"mu", 2.0}, {"kappa", 1.0}});
    } catch (const Error& err) {
        c = err.code() == Errc::ParameterConstraintViolated;
    }
    bool c2 = false;
    try {
        catalog("linear_birth_quadratic_death", {{"k", 2}, {"lambda", 1.0}, {"mu", 3.0}, {"kappa", 1.0}});
    } catch (const Error& err) {
        c2 = err.code() == Errc::ParameterConstraintViolated;
    }
    return {a && b && c && c2, "nonrev2d IRR residual " + fmtnum(irr.worst_residual, 3) + " (" +
                                   std::string(to_string(irr.status)) + "); competition eta=0.5 K1 " +
                                   std::string(to_string(k1.status)) + " (residual " + fmtnum(k1.worst_residual, 3) +
                                   "); k lambda = mu and k lambda < mu " + (c && c2 ? "rejected" : "accepted")};
}

Verdict simulation() {
    auto m = catalog("sis1d", {{"R0", 2.0}});
    auto o = exact_qsd(m, 25);
    auto st = gillespie_extinction(m, 25, InitialDistribution::from_oracle(o), 10000, 20240607);
    const double z = (st.mean - o.tau_exact) / st.std_error;
    auto ks = ks_test_exponential(st.times, o.tau_exact);
    return {std::abs(z) < 3.0 && ks.p > 0.01 && st.aborted == 0,
            "mean " + fmtnum(st.mean, 6) + " +- " + fmtnum(st.std_error, 3) + " vs tau_exact " + fmtnum(o.tau_exact, 8) +
                " (z = " + fmtnum(z, 3) + "), KS D = " + fmtnum(ks.D, 3) + ", p = " + fmtnum(ks.p, 3)};
}

} // namespace

int main(int argc, char** argv) {
    bool strict = false;
    std::string report;
    for (int i = 1; i < argc; ++i) {
        std::string a = argv[i];
        if (a == "--strict") strict = true;
        else if (a == "--report" && i + 1 < argc) report = argv[++i];
        else {
            std::cerr << "usage: qsdkit_acceptance [--strict] [--report FILE]\n";
            return 1;
        }
    }
    struct Item {
        int id;
        const char* title;
        Verdict (*run)();
    };
    const Item items[] = {
        {1, "heterogeneous SIS closed form", sis_hetero_closed_form},
        {2, "linear birth, quadratic death closed form", lbqd_closed_form},
        {3, "competition det Sigma", competition_det},
        {4, "oracle exponent convergence", exponent_convergence},
        {5, "QSD body accuracy", qsd_body},
        {6, "oracle exactness identities", oracle_identities},
        {7, "property suite", property_suite},
        {8, "negative controls", negative_controls},
        {9, "simulation concordance", simulation},
    };
    std::ostringstream lines;
    int passed = 0, failed = 0, errors = 0;
    for (const auto& it : items) {
        const auto t0 = std::chrono::steady_clock::now();
        std::string line;
        try {
            Verdict v = it.run();
            const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            (v.pass ? passed : failed)++;
            line = std::string(v.pass ? "PASS" : "FAIL") + " " + std::to_string(it.id) + " " + it.title + ": " +
                   v.detail + " [" + fmtnum(secs, 3) + " s]";
        } catch (const std::exception& e) {
            ++errors;
            line = "FAIL " + std::to_string(it.id) + " " + it.title + ": not evaluated: " + e.what();
        }
        std::cout << line << std::endl;
        lines << line << "\n";
    }
    const std::string summary = std::to_string(passed) + " passed, " + std::to_string(failed) + " failed, " +
                                std::to_string(errors) + " not evaluated";
    std::cout << summary << std::endl;
    if (!report.empty()) std::ofstream(report) << lines.str() << summary << "\n";
    if (errors > 0) return 1;
    return strict && failed > 0 ? 1 : 0;
}
