#include "qsdkit/wkb.hpp"

#include "qsdkit/errors.hpp"
#include "qsdkit/quadrature.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <numeric>
#include <sstream>

namespace qsd {

namespace {

std::string fmt_point(const Vector& y) {
    std::ostringstream os;
    os.precision(8);
    os << "(";
    for (int i = 0; i < y.size(); ++i) os << (i ? ", " : "") << y(i);
    os << ")";
    return os.str();
}

constexpr double kOriginRadius = 1e-6;

} // namespace

// ---------------------------------------------------------------- ThetaField

ThetaField::ThetaField(ModelSpec m, double tol, num::FdOptions fd)
    : m_(std::move(m)), tol_(tol), fd_(fd), L_(m_.jump_matrix()), qr_(L_) {
    opp_.resize(m_.num_jumps());
    for (std::size_t j = 0; j < m_.num_jumps(); ++j) {
        auto o = m_.opposite(j);
        if (!o) throw Error(Errc::InvalidModel, "jump " + to_string(m_.jump(j)) + " has no opposite");
        opp_[j] = *o;
    }
    if (qr_.rank() < m_.k()) throw Error(Errc::InvalidModel, "jump set does not span R^k");
    if (m_.is_birth_death()) lin_ = linearize_at_origin(m_, fd_);
}

Vector ThetaField::log_ratio(const Vector& y) const {
    const std::size_t n = m_.num_jumps();
    std::vector<double> lb(n);
    for (std::size_t j = 0; j < n; ++j) {
        double b = m_.rate(j, y);
        if (!(b > 0.0))
            throw Error(Errc::DegenerateRates,
                        "beta" + to_string(m_.jump(j)) + " = " + std::to_string(b) + " at " + fmt_point(y));
        lb[j] = std::log(b);
    }
    Vector r(static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < n; ++j) r(static_cast<Eigen::Index>(j)) = lb[opp_[j]] - lb[j];
    return r;
}

Vector ThetaField::half_log_product_slope(const Vector& y, const num::FdOptions& fd) const {
    const std::size_t n = m_.num_jumps();
    Vector s(static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < n; ++j) {
        if (opp_[j] < j) {
            // l^T grad g_l with g_{-l} = g_l, so s_{-l} = -s_l
            s(static_cast<Eigen::Index>(j)) = -s(static_cast<Eigen::Index>(opp_[j]));
            continue;
        }
        auto g = [&](const Vector& z) { return std::log(m_.rate(j, z)) + std::log(m_.rate(opp_[j], z)); };
        s(static_cast<Eigen::Index>(j)) = 0.5 * interior_directional(m_, g, y, m_.jump(j).as_vector(), fd);
    }
    return s;
}

namespace {

ThetaSolve solve_ls(const Eigen::ColPivHouseholderQR<Matrix>& qr, const Matrix& L, const Vector& r) {
    ThetaSolve out;
    out.value = qr.solve(r);
    Vector misfit = L * out.value - r;
    Eigen::Index worst = 0;
    double mx = misfit.cwiseAbs().maxCoeff(&worst);
    out.residual = mx / std::max(1.0, r.lpNorm<Eigen::Infinity>());
    out.worst = static_cast<std::size_t>(worst);
    return out;
}

} // namespace

ThetaSolve ThetaField::solve_theta(const Vector& y) const { return solve_ls(qr_, L_, log_ratio(y)); }

ThetaSolve ThetaField::solve_theta0(const Vector& y) const {
    return solve_ls(qr_, L_, half_log_product_slope(y));
}

Vector ThetaField::origin_limit(const Vector& y) const {
    const double sum = y.sum();
    const int k = m_.k();
    Vector xi = sum > 0.0 ? Vector(y / sum) : Vector::Constant(k, 1.0 / k);
    if (lin_) {
        Vector th(k);
        for (int i = 0; i < k; ++i) th(i) = std::log(xi(i) * lin_->d(i)) - std::log(lin_->b.row(i).dot(xi));
        if (th.allFinite()) return th;
    }
    return solve_theta(xi * (kOriginRadius / std::max(xi.norm(), 1e-300))).value;
}

Vector ThetaField::theta(const Vector& y) const {
    if (y.norm() < kOriginRadius) return origin_limit(y);
    ThetaSolve s = solve_theta(y);
    if (!(s.residual < tol_))
        throw Error(Errc::ConditionViolated, "theta system inconsistent at " + fmt_point(y) + " (residual " +
                                                 std::to_string(s.residual) + ", jump " +
                                                 to_string(m_.jump(s.worst)) + ")");
    return s.value;
}

Vector ThetaField::theta0(const Vector& y) const {
    ThetaSolve s = solve_theta0(y);
    if (!(s.residual < tol_))
        throw Error(Errc::ConditionViolated, "theta0 system inconsistent at " + fmt_point(y) + " (residual " +
                                                 std::to_string(s.residual) + ", jump " +
                                                 to_string(m_.jump(s.worst)) + ")");
    return s.value;
}

Matrix ThetaField::theta_jacobian(const Vector& y, const num::FdOptions& fd) const {
    const int k = m_.k();
    const std::size_t n = m_.num_jumps();
    Matrix R(static_cast<Eigen::Index>(n), k);
    for (std::size_t j = 0; j < n; ++j) {
        auto r = [&](const Vector& z) { return std::log(m_.rate(opp_[j], z)) - std::log(m_.rate(j, z)); };
        for (int c = 0; c < k; ++c)
            R(static_cast<Eigen::Index>(j), c) = interior_directional(m_, r, y, Vector::Unit(k, c), fd);
    }
    return qr_.solve(R);
}

Matrix ThetaField::theta0_jacobian(const Vector& y) const {
    const int k = m_.k();
    const std::size_t n = m_.num_jumps();
    Matrix M(static_cast<Eigen::Index>(n), k);
    const double h = num::second_step(y.lpNorm<Eigen::Infinity>(), fd_);
    for (std::size_t j = 0; j < n; ++j) {
        const Vector l = m_.jump(j).as_vector();
        auto g = [&](const Vector& z) { return std::log(m_.rate(j, z)) + std::log(m_.rate(opp_[j], z)); };
        for (int c = 0; c < k; ++c) {
            const Vector e = Vector::Unit(k, c);
            bool ok = true;
            for (double sa : {-h, h})
                for (double sb : {-h, h}) ok = ok && m_.boundary_distance(y + sa * l + sb * e) > 0.0;
            double v;
            if (ok) {
                auto f = [&](double s, double t) { return g(Vector(y + s * l + t * e)); };
                v = num::mixed_second_derivative(f, h, fd_.richardson);
            } else {
                auto inner = [&](const Vector& z) { return interior_directional(m_, g, z, l, fd_); };
                v = interior_directional(m_, inner, y, e, fd_);
            }
            M(static_cast<Eigen::Index>(j), c) = 0.5 * v;
        }
    }
    return qr_.solve(M);
}

// ---------------------------------------------------------------- WkbEngine

struct WkbEngine::Cache {
    std::mutex mu;
    std::optional<double> v_origin;
};

WkbEngine::WkbEngine(ModelSpec m, WkbOptions o)
    : field_(m, o.tol, o.fd), eq_(find_equilibria(m)), opts_(o), cache_(std::make_shared<Cache>()) {
    build();
}

WkbEngine::WkbEngine(ModelSpec m, Equilibria eq, WkbOptions o)
    : field_(std::move(m), o.tol, o.fd), eq_(std::move(eq)), opts_(o), cache_(std::make_shared<Cache>()) {
    build();
}

void WkbEngine::build() {
    const ModelSpec& m = model();
    const int k = m.k();
    const Vector& ys = eq_.y_star;
    Matrix S = field_.theta_jacobian(ys);
    sg_.asymmetry = (S - S.transpose()).cwiseAbs().maxCoeff() / std::max(1.0, S.cwiseAbs().maxCoeff());
    sg_.Sigma = 0.5 * (S + S.transpose());
    Eigen::LLT<Matrix> llt(sg_.Sigma);
    if (llt.info() != Eigen::Success) {
        std::ostringstream os;
        os << "Sigma at y* = " << fmt_point(ys) << " is not positive definite";
        throw Error(Errc::SigmaNotPD, os.str());
    }
    sg_.log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    sg_.det = std::exp(sg_.log_det);

    sg_.G = Matrix::Zero(k, k);
    for (std::size_t j = 0; j < m.num_jumps(); ++j) {
        Vector l = m.jump(j).as_vector();
        sg_.G += m.rate(j, ys) * l * l.transpose();
    }
    sg_.J = eq_.jacobian_at_star;
    sg_.lyapunov_G_Sigma = (sg_.G * sg_.Sigma + 2.0 * sg_.J).norm() / (2.0 * sg_.J).norm();
    Matrix Si = llt.solve(Matrix::Identity(k, k));
    sg_.lyapunov_J = (sg_.J * Si + Si * sg_.J.transpose() + sg_.G).norm() / sg_.G.norm();
}

PolyPath WkbEngine::straight(const Vector& y) const { return PolyPath{{eq_.y_star, y}, opts_.quad_order}; }

namespace {

template <class F>
LineIntegral integrate_path(const ModelSpec& m, const PolyPath& path, double tol, F&& field) {
    LineIntegral out;
    for (const Vector& v : path.vertices)
        if (v.size() != m.k() || !m.in_domain(v, 1e-12))
            throw Error(Errc::PathOutsideDomain, "vertex " + fmt_point(v) + " is outside the state space");
    for (std::size_t s = 0; s + 1 < path.vertices.size(); ++s) {
        const Vector a = path.vertices[s];
        const Vector d = path.vertices[s + 1] - a;
        if (d.lpNorm<Eigen::Infinity>() == 0.0) continue;
        auto f = [&](double t) { return field(Vector(a + t * d)).dot(d); };
        AdaptiveResult r = integrate_adaptive(f, 0.0, 1.0, path.order, tol);
        out.value += r.value;
        out.error += r.error;
        out.panels += r.panels;
    }
    return out;
}

} // namespace

LineIntegral WkbEngine::integrate_theta(const PolyPath& path) const {
    return integrate_path(model(), path, opts_.quad_tol, [&](const Vector& z) { return field_.theta(z); });
}

LineIntegral WkbEngine::integrate_theta0(const PolyPath& path) const {
    return integrate_path(model(), path, opts_.quad_tol, [&](const Vector& z) { return field_.theta0(z); });
}

double WkbEngine::potential_V(const Vector& y, const std::optional<PolyPath>& path) const {
    if (path) {
        if (path->vertices.empty() || (path->vertices.front() - eq_.y_star).lpNorm<Eigen::Infinity>() > 1e-9)
            throw Error(Errc::PathOutsideDomain, "path must start at y*");
        return integrate_theta(*path).value;
    }
    return integrate_theta(straight(y)).value;
}

double WkbEngine::V_at_origin() const {
    std::lock_guard lock(cache_->mu);
    if (!cache_->v_origin) cache_->v_origin = potential_V(Vector::Zero(model().k()));
    return *cache_->v_origin;
}

std::vector<JumpStep> WkbEngine::decompose_in_jumps(const Vector& y) const {
    const ModelSpec& m = model();
    const int k = m.k();
    const Vector d = y - eq_.y_star;
    const double scale = std::max(1.0, y.lpNorm<Eigen::Infinity>());
    if (d.lpNorm<Eigen::Infinity>() <= 1e-15 * scale) return {};

    // a single jump direction
    for (std::size_t j = 0; j < m.num_jumps(); ++j) {
        Vector l = m.jump(j).as_vector();
        double a = d.dot(l) / l.squaredNorm();
        if (a > 0.0 && (d - a * l).norm() <= 1e-12 * d.norm()) return {{a, m.jump(j)}};
    }

    // coordinate moves 1..k when every e_i is a jump
    bool unit = true;
    for (int i = 0; i < k && unit; ++i) unit = m.index_of(unit_jump(k, i, 1)).has_value();
    if (unit) {
        std::vector<JumpStep> steps;
        for (int i = 0; i < k; ++i)
            if (d(i) != 0.0) steps.push_back({d(i), unit_jump(k, i, 1)});
        return steps;
    }

    // bounded search: k independent jumps (one per +- pair), every ordering
    std::vector<std::size_t> reps;
    for (std::size_t j = 0; j < m.num_jumps(); ++j)
        if (*m.opposite(j) > j) reps.push_back(j);
    const std::size_t n = reps.size();
    std::vector<int> pick(static_cast<std::size_t>(k));
    std::vector<bool> mask(n, false);
    std::fill(mask.begin(), mask.begin() + std::min<std::size_t>(n, static_cast<std::size_t>(k)), true);
    if (n >= static_cast<std::size_t>(k)) {
        do {
            std::vector<std::size_t> chosen;
            for (std::size_t i = 0; i < n; ++i)
                if (mask[i]) chosen.push_back(reps[i]);
            Matrix B(k, k);
            for (int c = 0; c < k; ++c) B.col(c) = m.jump(chosen[static_cast<std::size_t>(c)]).as_vector();
            Eigen::FullPivLU<Matrix> lu(B);
            if (lu.rank() < k) continue;
            Vector a = lu.solve(d);
            std::vector<int> order(static_cast<std::size_t>(k));
            std::iota(order.begin(), order.end(), 0);
            do {
                Vector p = eq_.y_star;
                bool ok = true;
                std::vector<JumpStep> steps;
                for (int c : order) {
                    if (a(c) == 0.0) continue;
                    const JumpVector& l = m.jump(chosen[static_cast<std::size_t>(c)]);
                    p += a(c) * l.as_vector();
                    if (!(m.boundary_distance(p) > 0.0)) {
                        ok = false;
                        break;
                    }
                    steps.push_back({a(c), l});
                }
                if (ok) return steps;
            } while (std::next_permutation(order.begin(), order.end()));
        } while (std::prev_permutation(mask.begin(), mask.end()));
    }
    throw Error(Errc::DecompositionFailed, "no interior-preserving jump decomposition of " + fmt_point(y));
}

double WkbEngine::V0_product(const std::vector<JumpStep>& steps) const {
    const ModelSpec& m = model();
    auto log_bb = [&](const JumpVector& l, const Vector& p) {
        auto j = m.index_of(l);
        auto jm = m.index_of(-l);
        if (!j || !jm) throw Error(Errc::DecompositionFailed, "jump " + to_string(l) + " not in the model");
        double bb = m.rate(*j, p) * m.rate(*jm, p);
        if (!(bb > 0.0)) throw Error(Errc::BoundaryDivergence, "V0 diverges at " + fmt_point(p));
        return std::log(bb);
    };
    double v = 0.0;
    Vector p = eq_.y_star;
    for (const auto& s : steps) {
        Vector q = p + s.a * s.l.as_vector();
        v += 0.5 * (log_bb(s.l, q) - log_bb(s.l, p));
        p = q;
    }
    return v;
}

double WkbEngine::potential_V0_integral(const Vector& y) const {
    if (!(model().boundary_distance(y) > 0.0))
        throw Error(Errc::BoundaryDivergence, "V0 diverges on the boundary, y = " + fmt_point(y));
    return integrate_theta0(straight(y)).value;
}

double WkbEngine::potential_V0(const Vector& y) const {
    if (!(model().boundary_distance(y) > 0.0))
        throw Error(Errc::BoundaryDivergence, "V0 diverges on the boundary, y = " + fmt_point(y));
    const double prod = V0_product(decompose_in_jumps(y));
    if (opts_.v0_crosscheck) {
        const double integ = potential_V0_integral(y);
        if (std::abs(prod - integ) > opts_.v0_agreement * std::max(1.0, std::abs(prod)))
            throw Error(Errc::ConditionViolated, "V0 product (" + std::to_string(prod) + ") and theta0 integral (" +
                                                     std::to_string(integ) + ") disagree at " + fmt_point(y));
    }
    return prod;
}

double WkbEngine::log_M_N(double N) const {
    return 0.5 * (sg_.log_det - model().k() * std::log(2.0 * std::numbers::pi * N));
}

QsdApprox WkbEngine::qsd_wkb(double N, const Vector& x) const {
    const Vector y = x / N;
    if (!(model().boundary_distance(y) >= opts_.delta - 1e-12))
        throw Error(Errc::TooCloseToBoundary, "x/N = " + fmt_point(y) + " is within delta = " +
                                                  std::to_string(opts_.delta) + " of the boundary");
    QsdApprox q;
    q.V = potential_V(y);
    q.V0 = potential_V0(y);
    q.log_u = log_M_N(N) - N * q.V - q.V0;
    q.u = std::exp(q.log_u);
    return q;
}

PotentialResult WkbEngine::evaluate(const Vector& y, double N) const {
    PotentialResult r;
    r.y = y;
    r.path = straight(y);
    r.V = integrate_theta(r.path).value;
    // two-leg detour through a point pulled toward the middle of the region
    const ModelSpec& m = model();
    Vector centre(m.k());
    for (int i = 0; i < m.k(); ++i) centre(i) = 0.5 * m.geom().upper(i);
    Vector mid = 0.5 * (eq_.y_star + y);
    Vector w = mid + 0.25 * (centre - mid);
    PolyPath detour{{eq_.y_star, w, y}, opts_.quad_order};
    r.path_residual = std::abs(integrate_theta(detour).value - r.V);
    r.V0 = potential_V0(y);
    r.V0_integral = potential_V0_integral(y);
    r.Sigma = sg_.Sigma;
    r.G = sg_.G;
    r.log_M_N = log_M_N(N);
    r.M_N = std::exp(r.log_M_N);
    return r;
}

double WkbEngine::hj_residual(const Vector& y) const {
    const ModelSpec& m = model();
    Vector th = field_.theta(y);
    double sum = 0.0, scale = 0.0;
    for (std::size_t j = 0; j < m.num_jumps(); ++j) {
        double b = m.rate(j, y);
        sum += b * std::expm1(m.jump(j).as_vector().dot(th));
        scale += b;
    }
    return std::abs(sum) / scale;
}

double WkbEngine::transport_residual(const Vector& y) const {
    const ModelSpec& m = model();
    Vector th = field_.theta(y);
    Vector th0 = field_.theta0(y);
    Matrix H = field_.theta_jacobian(y);
    double sum = 0.0, scale = 0.0;
    for (std::size_t j = 0; j < m.num_jumps(); ++j) {
        Vector l = m.jump(j).as_vector();
        double b = m.rate(j, y);
        double w = std::exp(l.dot(th));
        double t1 = l.dot(th0) * b;
        double t2 = 0.5 * l.dot(H * l) * b;
        double t3 = l.dot(rate_gradient(m, j, y, opts_.fd));
        sum += w * (t1 - t2 - t3);
        scale += w * (std::abs(t1) + std::abs(t2) + std::abs(t3));
    }
    return std::abs(sum) / scale;
}

} // namespace qsd
