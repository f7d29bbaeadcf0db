#pragma once

#include "qsdkit/deterministic.hpp"
#include "qsdkit/model.hpp"
#include "qsdkit/numerics.hpp"

#include <Eigen/QR>

#include <memory>
#include <optional>
#include <vector>

namespace qsd {

/// Least-squares solution of l^T theta = r_l over the jump set.
struct ThetaSolve {
    Vector value;
    double residual = 0.0;    // ||L theta - r||_inf / max(1, ||r||_inf)
    std::size_t worst = 0;    // jump index with the largest misfit
};

/// theta(y) solves l^T theta = ln(beta_{-l}/beta_l); theta0(y) solves
/// l^T theta0 = (1/2) l^T grad ln(beta_{-l} beta_l). The jump matrix is
/// factored once.
class ThetaField {
public:
    explicit ThetaField(ModelSpec m, double tol = 1e-7, num::FdOptions fd = {});

    const ModelSpec& model() const noexcept { return m_; }
    double tol() const noexcept { return tol_; }
    const num::FdOptions& fd() const noexcept { return fd_; }

    /// r_l = ln(beta_{-l}(y)/beta_l(y)). Throws DegenerateRates if a rate is
    /// not positive.
    Vector log_ratio(const Vector& y) const;
    /// s_l = (1/2) l^T grad ln(beta_{-l} beta_l)(y).
    Vector half_log_product_slope(const Vector& y, const num::FdOptions& fd) const;
    Vector half_log_product_slope(const Vector& y) const { return half_log_product_slope(y, fd_); }

    ThetaSolve solve_theta(const Vector& y) const;
    ThetaSolve solve_theta0(const Vector& y) const;

    /// Checked evaluation (ConditionViolated when the residual reaches tol).
    /// Within radius 1e-6 of the origin theta is replaced by its limit along
    /// the ray through y.
    Vector theta(const Vector& y) const;
    Vector theta0(const Vector& y) const;

    /// d theta / dy = L^+ dr/dy with dr/dy by finite differences.
    Matrix theta_jacobian(const Vector& y, const num::FdOptions& fd) const;
    Matrix theta_jacobian(const Vector& y) const { return theta_jacobian(y, fd_); }
    /// d theta0 / dy = L^+ M with M_{l,j} = (1/2) l^T H_l e_j from mixed
    /// second differences of ln(beta_{-l} beta_l).
    Matrix theta0_jacobian(const Vector& y) const;

    const Matrix& jump_matrix() const noexcept { return L_; }
    Vector least_squares(const Vector& rhs) const { return qr_.solve(rhs); }

private:
    Vector origin_limit(const Vector& y) const;

    ModelSpec m_;
    double tol_;
    num::FdOptions fd_;
    Matrix L_;
    Eigen::ColPivHouseholderQR<Matrix> qr_;
    std::vector<std::size_t> opp_;
    std::optional<LinearizedRates> lin_; // birth-death models only
};

/// Piecewise-linear path. The first vertex is the start point.
struct PolyPath {
    std::vector<Vector> vertices;
    int order = 32;
};

struct LineIntegral {
    double value = 0.0;
    double error = 0.0;
    int panels = 0;
};

struct JumpStep {
    double a;
    JumpVector l;
};

struct SigmaG {
    Matrix Sigma;           // symmetrised
    Matrix G;
    Matrix J;               // drift Jacobian at y*
    double asymmetry = 0.0; // max |S - S^T| / max(1, max |S|) before symmetrising
    double lyapunov_G_Sigma = 0.0; // ||G Sigma + 2J|| / ||2J||
    double lyapunov_J = 0.0;       // ||J S^-1 + S^-1 J^T + G|| / ||G||
    double det = 0.0;
    double log_det = 0.0;
};

struct PotentialResult {
    Vector y;
    double V = 0.0;
    double V0 = 0.0;
    double V0_integral = 0.0;
    Matrix Sigma;
    Matrix G;
    double M_N = 0.0;
    double log_M_N = 0.0;
    PolyPath path;
    double path_residual = 0.0; // |V(straight) - V(two-leg detour)|
};

struct QsdApprox {
    double log_u = 0.0;
    double u = 0.0;
    double V = 0.0;
    double V0 = 0.0;
};

struct WkbOptions {
    double tol = 1e-7;        // theta / theta0 consistency
    int quad_order = 32;
    double quad_tol = 1e-10;
    double delta = 0.05;      // minimum scaled distance to the boundary for qsd_wkb
    bool v0_crosscheck = true;
    double v0_agreement = 1e-6;
    num::FdOptions fd;
};

/// Quasipotential machinery around the stable equilibrium y*.
/// Immutable after construction except for the lazily computed V(0).
class WkbEngine {
public:
    explicit WkbEngine(ModelSpec m, WkbOptions o = {});
    WkbEngine(ModelSpec m, Equilibria eq, WkbOptions o = {});

    const ModelSpec& model() const noexcept { return field_.model(); }
    const ThetaField& field() const noexcept { return field_; }
    const Equilibria& equilibria() const noexcept { return eq_; }
    const Vector& y_star() const noexcept { return eq_.y_star; }
    const WkbOptions& options() const noexcept { return opts_; }

    LineIntegral integrate_theta(const PolyPath& path) const;
    LineIntegral integrate_theta0(const PolyPath& path) const;

    /// V(y) as the line integral of theta from y* (straight path by default).
    double potential_V(const Vector& y, const std::optional<PolyPath>& path = std::nullopt) const;
    /// V(0), cached.
    double V_at_origin() const;

    /// V0(y) from the telescoping product along decompose_in_jumps(y),
    /// cross-checked against the line integral of theta0.
    double potential_V0(const Vector& y) const;
    double potential_V0_integral(const Vector& y) const;
    double V0_product(const std::vector<JumpStep>& steps) const;
    std::vector<JumpStep> decompose_in_jumps(const Vector& y) const;

    const SigmaG& sigma_and_G() const noexcept { return sg_; }
    double log_M_N(double N) const;
    /// M_N exp(-N V(x/N) - V0(x/N)).
    QsdApprox qsd_wkb(double N, const Vector& x) const;
    PotentialResult evaluate(const Vector& y, double N) const;

    /// sum_l beta_l (exp(l^T theta) - 1), relative to sum_l beta_l.
    double hj_residual(const Vector& y) const;
    /// Transport equation residual with dV0/dy = theta0, relative to the sum
    /// of absolute term sizes.
    double transport_residual(const Vector& y) const;

private:
    void build();
    PolyPath straight(const Vector& y) const;

    ThetaField field_;
    Equilibria eq_;
    WkbOptions opts_;
    SigmaG sg_;
    struct Cache;
    std::shared_ptr<Cache> cache_;
};

} // namespace qsd
