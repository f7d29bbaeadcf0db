#include "qsdkit/conditions.hpp"

#include "qsdkit/deterministic.hpp"
#include "qsdkit/errors.hpp"
#include "qsdkit/wkb.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace qsd {

std::string_view to_string(ConditionId id) noexcept {
    switch (id) {
    case ConditionId::K0: return "K0";
    case ConditionId::IRR: return "IRR";
    case ConditionId::K1: return "K1";
    case ConditionId::IRR2: return "IRR2";
    case ConditionId::BD_IRR: return "BD_IRR";
    case ConditionId::BD_IRR2: return "BD_IRR2";
    case ConditionId::LIN_K: return "LIN_K";
    case ConditionId::BD_ASSUMP: return "BD_ASSUMP";
    }
    return "?";
}

std::string_view to_string(ConditionStatus s) noexcept {
    switch (s) {
    case ConditionStatus::Pass: return "pass";
    case ConditionStatus::Fail: return "fail";
    case ConditionStatus::NotApplicable: return "n/a";
    }
    return "?";
}

namespace {

struct Worst {
    double value = -1.0;
    Vector point;
    std::string where;

    void offer(double v, const Vector& y, std::string w) {
        if (v > value) {
            value = v;
            point = y;
            where = std::move(w);
        }
    }
};

ConditionReport finish(ConditionId id, const Worst& w, int samples, double tol, std::string note = {}) {
    ConditionReport r;
    r.id = id;
    r.worst_residual = std::max(0.0, w.value);
    r.samples = samples;
    r.tol = tol;
    r.note = std::move(note);
    r.status = r.worst_residual < tol ? ConditionStatus::Pass : ConditionStatus::Fail;
    if (r.status == ConditionStatus::Fail) r.witness = Witness{w.point, w.where};
    return r;
}

double asymmetry(const Matrix& J, int& wi, int& wj) {
    const double scale = std::max(1.0, J.cwiseAbs().maxCoeff());
    double worst = 0.0;
    wi = 0;
    wj = 0;
    for (int i = 0; i < J.rows(); ++i)
        for (int j = i + 1; j < J.cols(); ++j) {
            double a = std::abs(J(i, j) - J(j, i)) / scale;
            if (a > worst) {
                worst = a;
                wi = i;
                wj = j;
            }
        }
    return worst;
}

std::string entry_name(const char* sym, int i, int j) {
    std::ostringstream os;
    os << "d" << sym << "_" << i + 1 << "/dy_" << j + 1 << " vs d" << sym << "_" << j + 1 << "/dy_" << i + 1;
    return os.str();
}

} // namespace

ConditionReport check_K0(const ModelSpec& m, const CheckOptions& o) {
    ThetaField field(m, o.tol, o.fd);
    Worst w;
    for (const Vector& y : interior_samples(m, o.samples, o.margin)) {
        ThetaSolve s = field.solve_theta(y);
        w.offer(s.residual, y, "jump " + to_string(m.jump(s.worst)));
    }
    std::string note;
    if (m.is_birth_death()) note = "square system for a birth-death jump set";
    return finish(ConditionId::K0, w, o.samples, o.tol, note);
}

ConditionReport check_IRR(const ModelSpec& m, const CheckOptions& o) {
    ThetaField field(m, o.tol, o.fd);
    Worst w;
    for (const Vector& y : interior_samples(m, o.samples, o.margin)) {
        int i = 0, j = 0;
        double a = asymmetry(field.theta_jacobian(y, o.fd), i, j);
        w.offer(a, y, entry_name("theta", i, j));
    }
    std::string note;
    if (m.k() == 1) note = "1x1 Jacobian is symmetric";
    return finish(ConditionId::IRR, w, o.samples, o.tol, note);
}

std::pair<ConditionReport, ConditionReport> check_K1_IRR2(const ModelSpec& m, const CheckOptions& o) {
    ThetaField field(m, o.tol, o.fd);
    Worst k1, irr2;
    for (const Vector& y : interior_samples(m, o.samples, o.margin)) {
        ThetaSolve s = field.solve_theta0(y);
        k1.offer(s.residual, y, "jump " + to_string(m.jump(s.worst)));
        int i = 0, j = 0;
        double a = asymmetry(field.theta0_jacobian(y), i, j);
        irr2.offer(a, y, entry_name("theta0", i, j));
    }
    return {finish(ConditionId::K1, k1, o.samples, o.tol), finish(ConditionId::IRR2, irr2, o.samples, o.tol)};
}

namespace {

ConditionReport bd_report(const ModelSpec& m, ConditionId id, double tol, const num::FdOptions& fd) {
    LinearizedRates lin = linearize_at_origin(m, fd);
    const int k = m.k();
    const Vector zero = Vector::Zero(k);
    ConditionReport r;
    r.id = id;
    r.tol = tol;
    r.samples = 1;
    std::ostringstream problems;
    for (int i = 0; i < k; ++i) {
        if (!(lin.d(i) > 0.0)) problems << "d_" << i + 1 << " = " << lin.d(i) << " <= 0; ";
        if (!(lin.b.row(i).maxCoeff() > 0.0)) problems << "row " << i + 1 << " of b has no positive entry; ";
    }
    const double bscale = std::max(lin.b.cwiseAbs().maxCoeff(), 1e-300);
    if (lin.cross_death_max > tol * std::max(1.0, lin.d.cwiseAbs().maxCoeff()))
        problems << "cross death derivative " << lin.cross_death_max << " != 0; ";
    double worst = 0.0;
    std::string where;
    if (id == ConditionId::LIN_K) {
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j) {
                double dev = std::abs(lin.b(i, j) - lin.b(i, i)) / bscale;
                if (dev > worst) {
                    worst = dev;
                    std::ostringstream os;
                    os << "b_" << i + 1 << j + 1 << " = " << lin.b(i, j) << " vs b_" << i + 1 << i + 1 << " = "
                       << lin.b(i, i);
                    where = os.str();
                }
            }
    }
    const std::string p = problems.str();
    if (!p.empty()) {
        worst = std::numeric_limits<double>::infinity();
        where = p;
    }
    r.worst_residual = worst;
    r.status = worst < tol ? ConditionStatus::Pass : ConditionStatus::Fail;
    if (r.status == ConditionStatus::Fail) r.witness = Witness{zero, where};
    std::ostringstream note;
    note.precision(10);
    note << "b = [";
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) note << (i || j ? (j ? ", " : "; ") : "") << lin.b(i, j);
    note << "], d = [";
    for (int i = 0; i < k; ++i) note << (i ? ", " : "") << lin.d(i);
    note << "]";
    r.note = note.str();
    return r;
}

} // namespace

ConditionReport check_bd_assumptions(const ModelSpec& m, const CheckOptions& o) {
    return bd_report(m, ConditionId::BD_ASSUMP, o.tol, o.fd);
}

ConditionReport check_linear_kolmogorov(const ModelSpec& m, double tol, const num::FdOptions& fd) {
    return bd_report(m, ConditionId::LIN_K, tol, fd);
}

std::vector<ConditionReport> check_all(const ModelSpec& m, const CheckOptions& o) {
    std::vector<ConditionReport> out;
    out.push_back(check_K0(m, o));
    out.push_back(check_IRR(m, o));
    auto [k1, irr2] = check_K1_IRR2(m, o);
    out.push_back(k1);
    out.push_back(irr2);
    if (m.is_birth_death()) {
        out.push_back(check_bd_assumptions(m, o));
        out.push_back(check_linear_kolmogorov(m, o.tol, o.fd));
    } else {
        for (ConditionId id : {ConditionId::BD_ASSUMP, ConditionId::LIN_K}) {
            ConditionReport r;
            r.id = id;
            r.status = ConditionStatus::NotApplicable;
            r.tol = o.tol;
            r.note = "jump set is not {+-e_i}";
            out.push_back(r);
        }
    }
    return out;
}

} // namespace qsd
