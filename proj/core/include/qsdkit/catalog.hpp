#pragma once

#include "qsdkit/model.hpp"

#include <map>
#include <string>
#include <vector>

namespace qsd {

using Bindings = std::map<std::string, double>;

struct CatalogOptions {
    /// Apply the parameter constraints each model needs (e.g. the
    /// a1*a4*a5 = a2*a3*a6 relation for the competition process). Turning
    /// this off builds deliberately non-conforming variants for negative
    /// controls.
    bool check_constraints = true;
};

/// Names accepted by catalog().
const std::vector<std::string>& catalog_names();

/// Default parameter bindings for a catalog model (k-dependent entries are
/// filled for the default k).
Bindings catalog_defaults(const std::string& name);

/// Builds a catalog model. Bindings override defaults; unknown keys are a
/// ConfigError.
///
///  - sis1d: one-type SIS, birth R0*y(1-y), death y (box, f = 1).
///  - sis_hetero: k-type SIS with susceptibilities mu_i, infectious periods
///    alpha_i, group fractions f_i and infection rate beta (box).
///  - linear_birth_quadratic_death: birth lambda*sum(y), death y_i*(mu + kappa*sum(y)).
///  - bc23_bd: birth b0(s)*b_i(y_i), death d0(s)*d_i(y_i) with b0(s) = s,
///    d0(s) = 1 + kappa*s, b_i(u) = beta_i*(1 + rho*u), d_i(u) = delta_i*u.
///  - competition: two-type competition process with swap jumps +-(e1 - e2);
///    b0(u) = lambda*u, d0(u) = 1 + kappa*u, d1(u) = d2(u) = u,
///    b3(u) = exp(gamma*u), d3(u) = exp(-gamma*u + eta*u^2). a5 = a6 = 0 drops
///    the swap jumps (birth-death reduction).
///  - nonrev2d: two-type birth-death process whose log-ratio field is not a
///    gradient.
ModelSpec catalog(const std::string& name, const Bindings& params = {}, const CatalogOptions& opts = {});

} // namespace qsd
