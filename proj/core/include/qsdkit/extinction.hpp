#pragma once

#include "qsdkit/deterministic.hpp"
#include "qsdkit/model.hpp"
#include "qsdkit/wkb.hpp"

#include <optional>
#include <vector>

namespace qsd {

/// Checked linearisation: NotBirthDeath for other jump sets,
/// AssumptionViolated if some d_i <= 0, a row of b has no positive entry, or
/// a cross death derivative is nonzero.
LinearizedRates linearized_constants(const ModelSpec& m, const num::FdOptions& fd = {});

/// Unique positive root of sum_i b_ii / (D + d_i) = 1. Throws NoPositiveRoot
/// when sum_i b_ii / d_i <= 1.
double solve_D(const Matrix& b, const Vector& d);

/// ln of the linear-regime QSD u~_x (x != 0) for normaliser ln Lambda.
/// Throws InvalidState for x = 0 or negative entries.
double log_u_tilde(const Matrix& b, const Vector& d, double D, double log_Lambda, const std::vector<long>& x);

/// ln Lambda for coordinate ordering `order` (order[p] is the coordinate in
/// position p of the nested partial equilibria; identity by default).
double log_lambda_normalizer(const WkbEngine& engine, double N, const std::vector<int>& order = {});

struct BDExtinction {
    Matrix b;
    Vector d;
    double D = 0.0;
    double log_Lambda = 0.0;
    double A = 0.0;          // V(0)
    double log_tau = 0.0;
    std::optional<double> tau; // present when tau < 1e300
    double tau_log10 = 0.0;
    double log_K = 0.0;      // tau = K / sqrt(N) * exp(N A)
    double K = 0.0;
    double N = 0.0;
    std::vector<int> order;
};

/// tau ~ 1/(Lambda D) for a birth-death model meeting the linear Kolmogorov
/// condition (ConditionViolated otherwise).
BDExtinction tau_asymptotic(const WkbEngine& engine, double N, const std::vector<int>& order = {});

/// lim ln(tau)/N = V(0). Works for any model whose theta field exists.
double log_tau_limit(const WkbEngine& engine);

/// ln of the large-x form of u~ along x = xhat * xi (sum xi = 1).
double log_linear_asymptote(const Matrix& b, const Vector& d, double log_Lambda, double xhat, const Vector& xi);

/// ln of the small-y form of the WKB body along x = xhat * xi, built from
/// rate evaluations at the nested partial equilibria (no Lambda involved).
double log_wkb_asymptote(const WkbEngine& engine, double N, double xhat, const Vector& xi,
                         const std::vector<int>& order = {});

} // namespace qsd
