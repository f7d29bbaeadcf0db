#include "qsdkit/validate.hpp"

#include "qsdkit/errors.hpp"
#include "qsdkit/numerics.hpp"

#include <Eigen/LU>

#include <cmath>
#include <sstream>

namespace qsd {

std::string_view to_string(ValidationEntry::Status s) noexcept {
    switch (s) {
    case ValidationEntry::Status::Pass: return "pass";
    case ValidationEntry::Status::Fail: return "fail";
    case ValidationEntry::Status::Info: return "info";
    }
    return "?";
}

bool ValidationReport::all_pass() const {
    for (const auto& e : entries)
        if (e.status == ValidationEntry::Status::Fail) return false;
    return true;
}

const ValidationEntry* ValidationReport::find(std::string_view id) const {
    for (const auto& e : entries)
        if (e.id == id) return &e;
    return nullptr;
}

namespace {

using Status = ValidationEntry::Status;

struct Tracker {
    ValidationEntry entry;
    double worst = -1.0;

    void fail(const Vector& y, double score, std::string detail) {
        entry.status = Status::Fail;
        if (score > worst) {
            worst = score;
            entry.witness = y;
            entry.detail = std::move(detail);
        }
    }
};

std::string describe(const ModelSpec& m, std::size_t j, double v) {
    std::ostringstream os;
    os.precision(6);
    os << "beta" << to_string(m.jump(j)) << " = " << v;
    return os.str();
}

} // namespace

ValidationReport validate_model(const ModelSpec& m, int samples, double tol) {
    ValidationReport rep;
    const int k = m.k();
    const auto& g = m.geom();

    {
        ValidationEntry e{"A1_GEOM", "state space geometry well formed", Status::Pass, {}, {}};
        if (g.kind == GeomKind::Box) {
            double s = 0.0;
            for (double f : g.f) {
                s += f;
                if (!(f > 0.0)) e.status = Status::Fail;
            }
            if (std::abs(s - 1.0) > 1e-12) e.status = Status::Fail;
            if (e.status == Status::Fail) e.detail = "box needs f_i > 0 and sum f_i = 1";
        }
        rep.entries.push_back(e);
    }
    if (g.kind == GeomKind::Box)
        rep.entries.push_back({"A1_FIXED_F", "capacity fractions f_i independent of N (not checkable on one instance)",
                               Status::Info, {}, {}});

    {
        ValidationEntry e{"A3_SYM", "jump set closed under negation", Status::Pass, {}, {}};
        for (std::size_t j = 0; j < m.num_jumps(); ++j)
            if (!m.opposite(j)) {
                e.status = Status::Fail;
                e.detail = "missing -" + to_string(m.jump(j));
                break;
            }
        rep.entries.push_back(e);
    }
    {
        Eigen::FullPivLU<Matrix> lu(m.jump_matrix());
        ValidationEntry e{"A3_SPAN", "jump set spans R^k", Status::Pass, {}, {}};
        if (lu.rank() < k) {
            e.status = Status::Fail;
            e.detail = "rank " + std::to_string(lu.rank()) + " < " + std::to_string(k);
        }
        rep.entries.push_back(e);
    }

    Tracker origin{{"A4_ORIGIN", "all rates vanish at the origin", Status::Pass, {}, {}}};
    Tracker finite{{"A6_FINITE", "rates evaluate to finite values", Status::Pass, {}, {}}};
    Tracker interior{{"A5_INTERIOR", "rates positive in the interior", Status::Pass, {}, {}}};
    Tracker boundary{{"A5_BOUNDARY", "rates vanish on faces they would cross", Status::Pass, {}, {}}};
    Tracker nonneg{{"NONNEG", "rates nonnegative on the closed domain", Status::Pass, {}, {}}};

    auto eval = [&](std::size_t j, const Vector& y) -> std::optional<double> {
        try {
            return m.rate(j, y);
        } catch (const Error& err) {
            finite.fail(y, 0.0, describe(m, j, NAN) + " (" + err.what() + ")");
            return std::nullopt;
        }
    };

    const Vector zero = Vector::Zero(k);
    for (std::size_t j = 0; j < m.num_jumps(); ++j) {
        auto v = eval(j, zero);
        if (v && std::abs(*v) > tol) origin.fail(zero, std::abs(*v), describe(m, j, *v));
    }

    for (const Vector& y : interior_samples(m, samples)) {
        for (std::size_t j = 0; j < m.num_jumps(); ++j) {
            auto v = eval(j, y);
            if (!v) continue;
            if (!(*v > 0.0)) interior.fail(y, -*v, describe(m, j, *v));
        }
    }

    // Faces: y_i = 0 everywhere, y_i = f_i for boxes. The remaining
    // coordinates run over a Halton sample of the (closed) region.
    const int per_face = std::max(1, samples / std::max(1, 2 * k));
    for (int i = 0; i < k; ++i) {
        for (int side = 0; side < (g.kind == GeomKind::Box ? 2 : 1); ++side) {
            num::Halton h(k, 7);
            for (int s = 0; s < per_face; ++s) {
                auto u = h.next();
                Vector y(k);
                for (int c = 0; c < k; ++c) y(c) = u[static_cast<std::size_t>(c)] * g.upper(c);
                y(i) = side == 0 ? 0.0 : g.upper(i);
                for (std::size_t j = 0; j < m.num_jumps(); ++j) {
                    auto v = eval(j, y);
                    if (!v) continue;
                    if (*v < -tol) nonneg.fail(y, -*v, describe(m, j, *v));
                    int li = m.jump(j).components[static_cast<std::size_t>(i)];
                    bool must_vanish = side == 0 ? li < 0 : li > 0;
                    if (must_vanish && std::abs(*v) > tol) boundary.fail(y, std::abs(*v), describe(m, j, *v));
                }
            }
        }
    }

    for (auto* t : {&origin, &interior, &boundary, &nonneg, &finite}) rep.entries.push_back(t->entry);
    return rep;
}

} // namespace qsd
