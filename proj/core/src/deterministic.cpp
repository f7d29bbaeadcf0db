#include "qsdkit/deterministic.hpp"

#include "qsdkit/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace qsd {

Vector drift(const ModelSpec& m, const Vector& y) {
    Vector F = Vector::Zero(m.k());
    for (std::size_t j = 0; j < m.num_jumps(); ++j) {
        double b = m.rate(j, y);
        const auto& l = m.jump(j).components;
        for (int i = 0; i < m.k(); ++i) F(i) += l[static_cast<std::size_t>(i)] * b;
    }
    return F;
}

Vector rate_gradient(const ModelSpec& m, std::size_t j, const Vector& y, const num::FdOptions& fd) {
    Vector g(m.k());
    for (int i = 0; i < m.k(); ++i) g(i) = domain_partial(m, [&](const Vector& z) { return m.rate(j, z); }, y, i, fd);
    return g;
}

Matrix drift_jacobian(const ModelSpec& m, const Vector& y, const num::FdOptions& fd) {
    Matrix J = Matrix::Zero(m.k(), m.k());
    for (std::size_t j = 0; j < m.num_jumps(); ++j) {
        Vector grad = rate_gradient(m, j, y, fd);
        J += m.jump(j).as_vector() * grad.transpose();
    }
    return J;
}

LinearizedRates linearize_at_origin(const ModelSpec& m, const num::FdOptions& fd) {
    if (!m.is_birth_death()) throw Error(Errc::NotBirthDeath, "jump set of '" + m.label() + "' is not {+-e_i}");
    const int k = m.k();
    const Vector zero = Vector::Zero(k);
    LinearizedRates lin{Matrix::Zero(k, k), Vector::Zero(k), 0.0};
    for (int i = 0; i < k; ++i) {
        Vector gb = rate_gradient(m, m.birth_index(i), zero, fd);
        Vector gd = rate_gradient(m, m.death_index(i), zero, fd);
        lin.b.row(i) = gb.transpose();
        lin.d(i) = gd(i);
        for (int j = 0; j < k; ++j)
            if (j != i) lin.cross_death_max = std::max(lin.cross_death_max, std::abs(gd(j)));
    }
    return lin;
}

namespace {

// Scale for the convergence test: the largest rate flux through y.
double flux_scale(const ModelSpec& m, const Vector& y) {
    double s = 0.0;
    for (std::size_t j = 0; j < m.num_jumps(); ++j) s = std::max(s, std::abs(m.rate(j, y)));
    return std::max(1.0, s);
}

struct NewtonResult {
    Vector y;
    double residual;
    bool converged;
};

NewtonResult damped_newton(const ModelSpec& m, Vector y, double tol) {
    double fnorm = drift(m, y).lpNorm<Eigen::Infinity>();
    for (int it = 0; it < 100; ++it) {
        if (fnorm < tol * flux_scale(m, y)) return {y, fnorm, true};
        Vector F = drift(m, y);
        Matrix J = drift_jacobian(m, y);
        Vector step = J.fullPivLu().solve(-F);
        if (!step.allFinite()) break;
        double t = 1.0;
        bool moved = false;
        for (int h = 0; h < 60; ++h, t *= 0.5) {
            Vector trial = y + t * step;
            if (!m.in_domain(trial)) continue;
            double fn;
            try {
                fn = drift(m, trial).lpNorm<Eigen::Infinity>();
            } catch (const Error&) {
                continue;
            }
            if (fn < fnorm) {
                y = trial;
                fnorm = fn;
                moved = true;
                break;
            }
        }
        if (!moved) break;
    }
    return {y, fnorm, fnorm < tol * flux_scale(m, y)};
}

bool lex_less(const Vector& a, const Vector& b) {
    for (int i = 0; i < a.size(); ++i) {
        if (a(i) < b(i)) return true;
        if (a(i) > b(i)) return false;
    }
    return false;
}

std::string fmt(const Vector& y) {
    std::ostringstream os;
    os.precision(10);
    os << "(";
    for (int i = 0; i < y.size(); ++i) os << (i ? ", " : "") << y(i);
    os << ")";
    return os.str();
}

} // namespace

Equilibria find_equilibria(const ModelSpec& m, double tol) {
    const int k = m.k();
    const double diam = m.geom().diameter();
    std::vector<Vector> found;
    auto starts = interior_samples(m, 64, 1e-3);
    for (const Vector& s : starts) {
        NewtonResult r = damped_newton(m, s, tol);
        if (r.converged) found.push_back(r.y);
    }
    std::sort(found.begin(), found.end(), lex_less);

    std::vector<Vector> unique;
    for (const Vector& y : found) {
        bool dup = false;
        for (const Vector& u : unique)
            if ((u - y).lpNorm<Eigen::Infinity>() < 1e-7 * std::max(1.0, diam)) dup = true;
        if (!dup) unique.push_back(y);
    }

    Equilibria eq;
    eq.starts = static_cast<int>(starts.size());
    std::vector<Vector> interior;
    for (const Vector& y : unique) {
        if (m.boundary_distance(y) > 1e-6 * diam)
            interior.push_back(y);
        else
            eq.boundary_points.push_back(y);
    }
    if (interior.empty())
        throw Error(Errc::NoInteriorEquilibrium, "multistart Newton (" + std::to_string(eq.starts) +
                                                     " starts) found no interior zero of the drift");
    if (interior.size() > 1) {
        std::string list;
        for (const auto& y : interior) list += " " + fmt(y);
        throw Error(Errc::MultipleInteriorEquilibria, std::to_string(interior.size()) + " interior equilibria:" + list);
    }

    eq.y_star = interior.front();
    eq.residual = drift(m, eq.y_star).lpNorm<Eigen::Infinity>();
    eq.jacobian_at_star = drift_jacobian(m, eq.y_star);
    eq.jacobian_at_origin = drift_jacobian(m, Vector::Zero(k));
    eq.eigen_star = Eigen::EigenSolver<Matrix>(eq.jacobian_at_star, false).eigenvalues();
    eq.eigen_origin = Eigen::EigenSolver<Matrix>(eq.jacobian_at_origin, false).eigenvalues();

    const double margin = 1e-9 * eq.jacobian_at_star.norm();
    for (int i = 0; i < k; ++i)
        if (!(eq.eigen_star(i).real() < -margin)) {
            std::ostringstream os;
            os << "eigenvalue " << eq.eigen_star(i) << " of J(y*) at y* = " << fmt(eq.y_star);
            throw Error(Errc::UnstableInterior, os.str());
        }
    for (int i = 0; i < k; ++i)
        if (eq.eigen_origin(i).real() > 0.0) eq.origin_unstable = true;
    return eq;
}

} // namespace qsd
