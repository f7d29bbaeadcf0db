#pragma once

#include "qsdkit/model.hpp"
#include "qsdkit/numerics.hpp"

#include <complex>
#include <limits>
#include <vector>

namespace qsd {

using ComplexVector = Eigen::VectorXcd;

/// d g / dy_i at y. Central differences when both sides of the step stay
/// in S~, one-sided ones otherwise.
template <class G>
double domain_partial(const ModelSpec& m, G&& g, const Vector& y, int i, const num::FdOptions& fd = {}) {
    double h = num::first_step(y(i), fd);
    const double lo = y(i);
    const double hi = m.geom().kind == GeomKind::Box ? m.geom().f[static_cast<std::size_t>(i)] - y(i)
                                                     : std::numeric_limits<double>::infinity();
    auto along = [&](double t) {
        Vector z = y;
        z(i) += t;
        return g(z);
    };
    if (lo >= h && hi >= h) return num::central_derivative(along, h, fd.richardson);
    if (hi >= lo) return num::forward_derivative(along, std::min(h, hi), fd.richardson);
    return num::forward_derivative(along, -std::min(h, lo), fd.richardson);
}

/// Derivative of g along dir at y, keeping every stencil point strictly
/// inside S~ (for quantities such as ln beta that blow up on the boundary).
template <class G>
double interior_directional(const ModelSpec& m, G&& g, const Vector& y, const Vector& dir,
                            const num::FdOptions& fd = {}) {
    double h = num::first_step(y.lpNorm<Eigen::Infinity>(), fd) / std::max(1.0, dir.lpNorm<Eigen::Infinity>());
    auto inside = [&](double t) { return m.boundary_distance(y + t * dir) > 0.0; };
    auto along = [&](double t) { return g(Vector(y + t * dir)); };
    for (int shrink = 0; shrink < 40; ++shrink, h *= 0.5) {
        if (inside(h) && inside(-h)) return num::central_derivative(along, h, fd.richardson);
        if (inside(h)) return num::forward_derivative(along, h, fd.richardson);
        if (inside(-h)) return num::forward_derivative(along, -h, fd.richardson);
    }
    return num::central_derivative(along, h, fd.richardson);
}

/// F(y) = sum_l l * beta_l(y), the fluid-limit drift.
Vector drift(const ModelSpec& m, const Vector& y);

/// dF/dy by finite differences of the rates. Steps that would leave S~ are
/// replaced by one-sided differences.
Matrix drift_jacobian(const ModelSpec& m, const Vector& y, const num::FdOptions& fd = {});

/// d beta_j / dy at y (finite differences, one-sided near the boundary).
Vector rate_gradient(const ModelSpec& m, std::size_t j, const Vector& y, const num::FdOptions& fd = {});

/// Rate derivatives at the origin of a birth-death model:
/// b(i,j) = d beta_{e_i}/dy_j and d(i) = d beta_{-e_i}/dy_i, by one-sided
/// differences. cross_death_max is the largest |d beta_{-e_i}/dy_j|, i != j.
struct LinearizedRates {
    Matrix b;
    Vector d;
    double cross_death_max = 0.0;
};

/// Raw linearisation, no assumption checks. Throws NotBirthDeath.
LinearizedRates linearize_at_origin(const ModelSpec& m, const num::FdOptions& fd = {});

struct Equilibria {
    Vector y_star;
    Matrix jacobian_at_star;
    Matrix jacobian_at_origin;
    ComplexVector eigen_star;
    ComplexVector eigen_origin;
    bool origin_unstable = false;
    double residual = 0.0;               // ||F(y*)||_inf
    int starts = 0;                      // multistart points tried
    std::vector<Vector> boundary_points; // converged points on the boundary of S~
};

/// Locates the unique interior stable equilibrium by damped Newton from a
/// Halton multistart. Throws NoInteriorEquilibrium,
/// MultipleInteriorEquilibria or UnstableInterior.
Equilibria find_equilibria(const ModelSpec& m, double tol = 1e-12);

} // namespace qsd
