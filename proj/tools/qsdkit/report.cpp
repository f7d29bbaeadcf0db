#include "report.hpp"

#include "qsdkit/conditions.hpp"
#include "qsdkit/deterministic.hpp"
#include "qsdkit/extinction.hpp"
#include "qsdkit/oracle.hpp"
#include "qsdkit/validate.hpp"
#include "qsdkit/wkb.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>

namespace qsd::cli {

using json = nlohmann::ordered_json;

int exit_code(ErrorCategory c) noexcept {
    switch (c) {
    case ErrorCategory::Config: return kExitUsage;
    case ErrorCategory::Condition: return kExitCondition;
    case ErrorCategory::Numerical: return kExitNumerical;
    }
    return kExitNumerical;
}

namespace {

const std::vector<std::string> kCommands{"check", "equilibria", "potential", "qsd-approx",
                                         "tau",   "oracle",     "simulate",  "compare"};

json vec(const Vector& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

json mat(const Matrix& m) {
    json a = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(vec(m.row(i).transpose()));
    return a;
}

json complex_vec(const ComplexVector& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back({v(i).real(), v(i).imag()});
    return a;
}

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string csv_num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

std::string csv_opt(const std::optional<double>& v) { return v ? csv_num(*v) : ""; }

std::string point_text(const Vector& y) {
    std::ostringstream os;
    os << std::setprecision(8) << "(";
    for (Eigen::Index i = 0; i < y.size(); ++i) os << (i ? ", " : "") << y(i);
    return os.str() + ")";
}

Format resolve(const RunConfig& c) {
    if (c.format != Format::Auto) return c.format;
    if (c.command == "check") return Format::Table;
    if (c.command == "potential") return Format::Csv;
    return Format::Json;
}

// Left-aligned columns separated by two spaces.
std::string text_table(const std::vector<std::string>& head, const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> w(head.size());
    for (std::size_t i = 0; i < head.size(); ++i) w[i] = head[i].size();
    for (const auto& r : rows)
        for (std::size_t i = 0; i < r.size() && i < w.size(); ++i) w[i] = std::max(w[i], r[i].size());
    std::ostringstream os;
    auto line = [&](const std::vector<std::string>& r) {
        for (std::size_t i = 0; i < r.size(); ++i) {
            os << r[i];
            if (i + 1 < r.size()) os << std::string(w[i] - r[i].size() + 2, ' ');
        }
        os << "\n";
    };
    line(head);
    for (const auto& r : rows) line(r);
    return os.str();
}

std::string cell(const std::optional<double>& v, int prec = 8) {
    if (!v) return "-";
    std::ostringstream os;
    os << std::setprecision(prec) << *v;
    return os.str();
}

const char* extension(Format f) {
    switch (f) {
    case Format::Csv: return "csv";
    case Format::Table: return "txt";
    default: return "json";
    }
}

struct Output {
    std::string body;
    std::string summary;
    int code = kExitOk;
    std::vector<std::pair<std::string, std::string>> extra_files; // name, content
};

json report_json(const ConditionReport& r) {
    json j{{"id", to_string(r.id)},
           {"status", to_string(r.status)},
           {"worst_residual", r.worst_residual},
           {"tol", r.tol},
           {"samples", r.samples}};
    if (r.witness) j["witness"] = {{"point", vec(r.witness->point)}, {"where", r.witness->where}};
    if (!r.note.empty()) j["note"] = r.note;
    return j;
}

CheckOptions check_options(const RunConfig& c) {
    CheckOptions o;
    o.samples = c.samples;
    o.tol = c.tol;
    return o;
}

WkbOptions wkb_options(const RunConfig& c) {
    WkbOptions o;
    o.tol = c.tol;
    o.delta = c.delta;
    return o;
}

std::vector<int> zero_based(const std::vector<int>& order) {
    std::vector<int> z;
    for (int i : order) z.push_back(i - 1);
    return z;
}

const ConditionReport* find(const std::vector<ConditionReport>& rs, ConditionId id) {
    for (const auto& r : rs)
        if (r.id == id) return &r;
    return nullptr;
}

bool passed(const std::vector<ConditionReport>& rs, std::initializer_list<ConditionId> ids) {
    for (ConditionId id : ids) {
        const ConditionReport* r = find(rs, id);
        if (r && r->status == ConditionStatus::Fail) return false;
    }
    return true;
}

std::string failures(const std::vector<ConditionReport>& rs, std::initializer_list<ConditionId> ids) {
    std::string s;
    for (ConditionId id : ids) {
        const ConditionReport* r = find(rs, id);
        if (r && r->status == ConditionStatus::Fail) {
            std::ostringstream os;
            os << (s.empty() ? "" : "; ") << to_string(id) << " fails (residual " << r->worst_residual;
            if (r->witness) os << " at " << point_text(r->witness->point) << ", " << r->witness->where;
            os << ")";
            s += os.str();
        }
    }
    return s;
}

/// Structural validation shared by every command.
void require_valid(const ModelSpec& m, const RunConfig& c) {
    ValidationReport v = validate_model(m, c.samples, 0.0);
    if (v.all_pass()) return;
    std::string what;
    for (const auto& e : v.entries)
        if (e.status == ValidationEntry::Status::Fail)
            what += (what.empty() ? "" : "; ") + e.id + ": " + e.detail;
    throw Error(Errc::AssumptionViolated, "model fails structural checks: " + what);
}

/// Gate for the analytic commands: throws ConditionViolated listing the
/// failing conditions among `ids`.
void require_conditions(const std::vector<ConditionReport>& rs, std::initializer_list<ConditionId> ids) {
    if (!passed(rs, ids)) throw Error(Errc::ConditionViolated, failures(rs, ids));
}

Output cmd_check(const ModelSpec& m, const RunConfig& c) {
    ValidationReport v = validate_model(m, c.samples, 0.0);
    std::vector<ConditionReport> rs = check_all(m, check_options(c));
    bool ok = v.all_pass();
    for (const auto& r : rs) ok = ok && r.status != ConditionStatus::Fail;

    Output o;
    o.code = ok ? kExitOk : kExitCondition;
    const Format f = resolve(c);
    if (f == Format::Json) {
        json j{{"model", m.label()}, {"pass", ok}};
        json va = json::array();
        for (const auto& e : v.entries) {
            json je{{"id", e.id}, {"status", to_string(e.status)}, {"description", e.description}};
            if (e.witness) je["witness"] = vec(*e.witness);
            if (!e.detail.empty()) je["detail"] = e.detail;
            va.push_back(je);
        }
        j["validation"] = va;
        json ca = json::array();
        for (const auto& r : rs) ca.push_back(report_json(r));
        j["conditions"] = ca;
        o.body = j.dump(2) + "\n";
    } else {
        std::ostringstream os;
        const bool csv = f == Format::Csv;
        if (csv) {
            os << "kind,id,status,residual,witness\n";
        } else {
            os << std::left << std::setw(11) << "condition" << std::setw(8) << "status" << std::setw(13) << "residual"
               << "witness\n";
        }
        for (const auto& e : v.entries) {
            if (e.status != ValidationEntry::Status::Fail) continue;
            if (csv)
                os << "assumption," << e.id << ",fail,," << '"' << e.detail << '"' << "\n";
            else
                os << std::setw(11) << e.id << std::setw(8) << "fail" << std::setw(13) << "-" << e.detail << "\n";
        }
        for (const auto& r : rs) {
            std::string w = r.witness ? point_text(r.witness->point) + " " + r.witness->where : "";
            if (csv) {
                os << "condition," << to_string(r.id) << "," << to_string(r.status) << ","
                   << csv_num(r.worst_residual) << ",\"" << w << "\"\n";
            } else {
                std::ostringstream res;
                res << std::setprecision(3) << std::scientific << r.worst_residual;
                os << std::setw(11) << to_string(r.id) << std::setw(8) << to_string(r.status) << std::setw(13)
                   << (r.status == ConditionStatus::NotApplicable ? "-" : res.str()) << w << "\n";
            }
        }
        o.body = os.str();
    }
    o.summary = m.label() + ": " + (ok ? "all conditions pass" : "condition failure");
    return o;
}

Output cmd_equilibria(const ModelSpec& m, const RunConfig&) {
    Equilibria e = find_equilibria(m);
    json j{{"model", m.label()},
           {"y_star", vec(e.y_star)},
           {"residual", e.residual},
           {"jacobian_at_star", mat(e.jacobian_at_star)},
           {"eigen_star", complex_vec(e.eigen_star)},
           {"jacobian_at_origin", mat(e.jacobian_at_origin)},
           {"eigen_origin", complex_vec(e.eigen_origin)},
           {"origin_unstable", e.origin_unstable},
           {"starts", e.starts}};
    json b = json::array();
    for (const auto& p : e.boundary_points) b.push_back(vec(p));
    j["boundary_points"] = b;
    Output o;
    o.body = j.dump(2) + "\n";
    o.summary = m.label() + ": y* = " + point_text(e.y_star);
    return o;
}

std::vector<std::vector<double>> grid_axes(const ModelSpec& m, const std::string& spec) {
    const int k = m.k();
    std::vector<std::string> parts;
    if (!spec.empty()) {
        std::stringstream ss(spec);
        std::string item;
        while (std::getline(ss, item, ',')) parts.push_back(item);
        if (parts.size() != 1 && parts.size() != static_cast<std::size_t>(k))
            throw Error(Errc::ConfigError, "--grid needs one lo:hi:n triple or one per axis");
    }
    std::vector<std::vector<double>> axes(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
        double lo = 0.05 * m.geom().upper(i), hi = 0.95 * m.geom().upper(i);
        long n = 10;
        if (!parts.empty()) {
            const std::string& t = parts[parts.size() == 1 ? 0 : static_cast<std::size_t>(i)];
            char c1 = 0, c2 = 0;
            std::istringstream is(t);
            if (!(is >> lo >> c1 >> hi >> c2 >> n) || c1 != ':' || c2 != ':' || n < 1 || !(hi >= lo))
                throw Error(Errc::ConfigError, "bad grid triple '" + t + "' (expected lo:hi:n)");
        }
        for (long p = 0; p < n; ++p)
            axes[static_cast<std::size_t>(i)].push_back(n == 1 ? lo : lo + (hi - lo) * static_cast<double>(p) / static_cast<double>(n - 1));
    }
    return axes;
}

Output cmd_potential(const ModelSpec& m, const RunConfig& c) {
    auto rs = check_all(m, check_options(c));
    require_conditions(rs, {ConditionId::K0, ConditionId::IRR, ConditionId::K1, ConditionId::IRR2});
    WkbEngine e(m, wkb_options(c));
    const double N = static_cast<double>(c.N.front());
    const auto axes = grid_axes(m, c.grid);
    const int k = m.k();

    std::ostringstream os;
    json rows = json::array();
    for (int i = 0; i < k; ++i) os << "y" << i + 1 << ",";
    os << "V,V0,u_wkb\n";
    std::vector<std::size_t> idx(static_cast<std::size_t>(k), 0);
    long written = 0, skipped = 0;
    for (;;) {
        Vector y(k);
        for (int i = 0; i < k; ++i) y(i) = axes[static_cast<std::size_t>(i)][idx[static_cast<std::size_t>(i)]];
        if (m.boundary_distance(y) > 0.0) {
            const double V = e.potential_V(y);
            const double V0 = e.potential_V0(y);
            double u = std::numeric_limits<double>::quiet_NaN();
            if (m.boundary_distance(y) >= c.delta) u = std::exp(e.log_M_N(N) - N * V - V0);
            for (int i = 0; i < k; ++i) os << csv_num(y(i)) << ",";
            os << csv_num(V) << "," << csv_num(V0) << "," << csv_num(u) << "\n";
            rows.push_back({{"y", vec(y)}, {"V", V}, {"V0", V0}, {"u_wkb", std::isnan(u) ? json(nullptr) : json(u)}});
            ++written;
        } else {
            ++skipped;
        }
        int a = 0;
        while (a < k && ++idx[static_cast<std::size_t>(a)] == axes[static_cast<std::size_t>(a)].size()) idx[static_cast<std::size_t>(a++)] = 0;
        if (a == k) break;
    }
    Output o;
    if (resolve(c) == Format::Json) {
        json j{{"model", m.label()}, {"N", c.N.front()}, {"delta", c.delta}, {"points", rows}};
        o.body = j.dump(2) + "\n";
    } else {
        o.body = os.str();
    }
    o.summary = m.label() + ": " + std::to_string(written) + " grid points (" + std::to_string(skipped) +
                " outside the open state space skipped)";
    return o;
}

Output cmd_qsd_approx(const ModelSpec& m, const RunConfig& c) {
    auto rs = check_all(m, check_options(c));
    require_conditions(rs, {ConditionId::K0, ConditionId::IRR, ConditionId::K1, ConditionId::IRR2});
    WkbEngine e(m, wkb_options(c));
    const long N = c.N.front();
    std::vector<long> x = c.x;
    if (x.empty())
        for (int i = 0; i < m.k(); ++i) x.push_back(std::lround(static_cast<double>(N) * e.y_star()(i)));
    if (x.size() != static_cast<std::size_t>(m.k())) throw Error(Errc::ConfigError, "--x needs one entry per coordinate");
    Vector xv(m.k());
    for (int i = 0; i < m.k(); ++i) xv(i) = static_cast<double>(x[static_cast<std::size_t>(i)]);
    QsdApprox a = e.qsd_wkb(static_cast<double>(N), xv);
    const double lm = e.log_M_N(static_cast<double>(N));
    json j{{"model", m.label()}, {"N", N},         {"x", x},           {"y", vec(xv / static_cast<double>(N))},
           {"V", a.V},          {"V0", a.V0},      {"log_M_N", lm},    {"M_N", std::exp(lm)},
           {"log_u", a.log_u},  {"u", a.u}};
    Output o;
    if (resolve(c) == Format::Csv) {
        std::ostringstream os;
        for (int i = 0; i < m.k(); ++i) os << "x" << i + 1 << ",";
        os << "V,V0,log_M_N,log_u,u\n";
        for (long xi : x) os << xi << ",";
        os << csv_num(a.V) << "," << csv_num(a.V0) << "," << csv_num(lm) << "," << csv_num(a.log_u) << "," << csv_num(a.u)
           << "\n";
        o.body = os.str();
    } else {
        o.body = j.dump(2) + "\n";
    }
    std::ostringstream s;
    s << m.label() << ": u_wkb = " << std::setprecision(6) << a.u;
    o.summary = s.str();
    return o;
}

json tau_json(const ModelSpec& m, const WkbEngine& e, const std::vector<ConditionReport>& rs, const RunConfig& c,
              long N) {
    json j{{"model", m.label()}, {"N", N}, {"A", e.V_at_origin()}};
    std::string why;
    if (!m.is_birth_death()) {
        why = "prefactor unavailable: non-BD jump set";
    } else if (!passed(rs, {ConditionId::K1, ConditionId::IRR2, ConditionId::BD_ASSUMP, ConditionId::LIN_K})) {
        why = "prefactor unavailable: " +
              failures(rs, {ConditionId::K1, ConditionId::IRR2, ConditionId::BD_ASSUMP, ConditionId::LIN_K});
    }
    if (!why.empty()) {
        j["K"] = nullptr;
        j["D"] = nullptr;
        j["Lambda_log"] = nullptr;
        j["tau_log10"] = nullptr;
        j["tau"] = nullptr;
        j["log_tau_over_N_limit"] = e.V_at_origin();
        j["note"] = why;
        return j;
    }
    BDExtinction t = tau_asymptotic(e, static_cast<double>(N), zero_based(c.order));
    j["K"] = t.K;
    j["D"] = t.D;
    j["Lambda_log"] = t.log_Lambda;
    j["tau_log10"] = t.tau_log10;
    j["tau"] = opt(t.tau);
    j["log_tau"] = t.log_tau;
    j["log_K"] = t.log_K;
    j["b"] = mat(t.b);
    j["d"] = vec(t.d);
    return j;
}

Output cmd_tau(const ModelSpec& m, const RunConfig& c) {
    auto rs = check_all(m, check_options(c));
    require_conditions(rs, {ConditionId::K0, ConditionId::IRR});
    WkbEngine e(m, wkb_options(c));
    json all = json::array();
    for (long N : c.N) all.push_back(tau_json(m, e, rs, c, N));
    Output o;
    if (resolve(c) == Format::Csv) {
        std::ostringstream os;
        os << "N,A,K,D,Lambda_log,tau_log10,tau\n";
        for (const auto& j : all) {
            auto num = [&](const char* key) {
                return j[key].is_null() ? std::string() : csv_num(j[key].get<double>());
            };
            os << j["N"].get<long>() << "," << num("A") << "," << num("K") << "," << num("D") << ","
               << num("Lambda_log") << "," << num("tau_log10") << "," << num("tau") << "\n";
        }
        o.body = os.str();
    } else if (resolve(c) == Format::Table) {
        std::vector<std::vector<std::string>> rows;
        auto get = [](const json& j, const char* key) {
            return j.contains(key) && !j[key].is_null() ? std::optional<double>(j[key].get<double>()) : std::nullopt;
        };
        for (const auto& j : all)
            rows.push_back({std::to_string(j["N"].get<long>()), cell(get(j, "A"), 10), cell(get(j, "K")),
                            cell(get(j, "D")), cell(get(j, "log_tau"), 10), cell(get(j, "tau"))});
        o.body = text_table({"N", "A", "K", "D", "log_tau", "tau"}, rows);
        if (all.front().contains("note")) o.body += all.front()["note"].get<std::string>() + "\n";
    } else {
        o.body = (all.size() == 1 ? all.front() : all).dump(2) + "\n";
    }
    std::ostringstream s;
    s << m.label() << ": A = " << std::setprecision(10) << e.V_at_origin();
    if (all.front().contains("note")) s << " (" << all.front()["note"].get<std::string>() << ")";
    o.summary = s.str();
    return o;
}

std::string u_csv(const OracleResult& r, int k) {
    std::ostringstream os;
    for (int i = 0; i < k; ++i) os << "x" << i + 1 << ",";
    os << "u\n";
    for (std::size_t s = 0; s < r.u.size(); ++s) {
        for (long xi : r.states[s]) os << xi << ",";
        os << csv_num(r.u[s]) << "\n";
    }
    return os.str();
}

json oracle_json(const ModelSpec& m, const OracleResult& r) {
    return json{{"model", m.label()},
                {"N", r.N},
                {"tau", r.tau_exact},
                {"log_tau", r.log_tau},
                {"tau_log10", r.log_tau / std::numbers::ln10},
                {"decay_rate", r.decay_rate},
                {"decay_rate_eigen", r.decay_rate_eigen},
                {"residual", r.residual},
                {"truncation_mass", r.truncation_mass},
                {"truncation", r.truncation},
                {"states", r.u.size()},
                {"iterations", r.iterations},
                {"q_max", r.q_max}};
}

Output cmd_oracle(const ModelSpec& m, const RunConfig& c) {
    OracleResult r = exact_qsd(m, c.N.front(), c.truncation);
    Output o;
    if (resolve(c) == Format::Csv) {
        o.body = u_csv(r, m.k());
    } else {
        o.body = oracle_json(m, r).dump(2) + "\n";
        o.extra_files.emplace_back("oracle_u.csv", u_csv(r, m.k()));
    }
    std::ostringstream s;
    s << m.label() << ": tau_exact = " << std::setprecision(10) << r.tau_exact << " (" << r.u.size() << " states)";
    o.summary = s.str();
    return o;
}

InitialDistribution initial(const ModelSpec& m, const RunConfig& c, long N, const OracleResult* r) {
    if (c.init == "point") {
        if (c.start.size() != static_cast<std::size_t>(m.k()))
            throw Error(Errc::ConfigError, "--init point needs --start with one entry per coordinate");
        return InitialDistribution::point(c.start);
    }
    if (r) return InitialDistribution::from_oracle(*r);
    Equilibria eq = find_equilibria(m);
    std::vector<long> x;
    for (int i = 0; i < m.k(); ++i) x.push_back(std::max(1L, std::lround(static_cast<double>(N) * eq.y_star(i))));
    return InitialDistribution::point(x);
}

Output cmd_simulate(const ModelSpec& m, const RunConfig& c) {
    const long N = c.N.front();
    std::optional<OracleResult> r;
    if (c.init == "qsd") r = exact_qsd(m, N, c.truncation);
    InitialDistribution init = initial(m, c, N, r ? &*r : nullptr);
    SimOptions so;
    so.threads = c.threads;
    SimStats s = gillespie_extinction(m, N, init, c.reps, *c.seed, so);
    json j{{"model", m.label()},  {"N", N},          {"replicates", s.replicates}, {"mean", s.mean},
           {"std_error", s.std_error}, {"seed", s.seed}, {"init", s.descriptor},  {"aborted", s.aborted}};
    if (r) j["tau_exact"] = r->tau_exact;
    Output o;
    if (resolve(c) == Format::Csv) {
        std::ostringstream os;
        os << "replicate,time\n";
        for (std::size_t i = 0; i < s.times.size(); ++i) os << i << "," << csv_num(s.times[i]) << "\n";
        o.body = os.str();
    } else {
        o.body = j.dump(2) + "\n";
    }
    std::ostringstream sm;
    sm << m.label() << ": mean extinction time " << std::setprecision(8) << s.mean << " +- " << s.std_error;
    o.summary = sm.str();
    return o;
}

Output cmd_compare(const ModelSpec& m, const RunConfig& c) {
    CompareReport rep = compare(m, c);
    Output o;
    if (resolve(c) == Format::Csv) {
        std::ostringstream os;
        os << "N,log_tau_asymptotic,log_tau_exact,ratio,sim_mean,sim_std_error,log_tau_over_N,A,K,note\n";
        for (const auto& r : rep.rows)
            os << r.N << "," << csv_opt(r.log_tau_asymptotic) << "," << csv_opt(r.log_tau_exact) << ","
               << csv_opt(r.ratio) << "," << csv_opt(r.sim_mean) << "," << csv_opt(r.sim_std_error) << ","
               << csv_opt(r.log_tau_over_N) << "," << csv_opt(rep.A) << "," << csv_opt(rep.K) << ",\"" << r.note
               << "\"\n";
        o.body = os.str();
    } else if (resolve(c) == Format::Table) {
        std::vector<std::vector<std::string>> rows;
        for (const auto& r : rep.rows)
            rows.push_back({std::to_string(r.N), cell(r.log_tau_asymptotic), cell(r.log_tau_exact), cell(r.ratio, 6),
                            cell(r.sim_mean, 8), cell(r.sim_std_error, 4), cell(r.log_tau_over_N), r.note});
        o.body = text_table({"N", "log_tau_asym", "log_tau_exact", "ratio", "sim_mean", "sim_se", "log_tau/N", "note"},
                            rows);
        o.body += "A = " + cell(rep.A, 10) + ", K = " + cell(rep.K) + (rep.note.empty() ? "" : ", " + rep.note) + "\n";
    } else {
        json rows = json::array();
        for (const auto& r : rep.rows) {
            json jr{{"N", r.N},
                    {"log_tau_asymptotic", opt(r.log_tau_asymptotic)},
                    {"log_tau_exact", opt(r.log_tau_exact)},
                    {"ratio", opt(r.ratio)},
                    {"sim_mean", opt(r.sim_mean)},
                    {"sim_std_error", opt(r.sim_std_error)},
                    {"log_tau_over_N", opt(r.log_tau_over_N)},
                    {"truncation_mass", opt(r.truncation_mass)}};
            if (!r.note.empty()) jr["note"] = r.note;
            rows.push_back(jr);
        }
        json j{{"model", rep.model}, {"A", opt(rep.A)}, {"K", opt(rep.K)}, {"reps", rep.reps},
               {"seed", rep.seed ? json(*rep.seed) : json(nullptr)}, {"rows", rows}};
        if (!rep.note.empty()) j["note"] = rep.note;
        o.body = j.dump(2) + "\n";
    }
    std::ostringstream s;
    s << m.label() << ": " << rep.rows.size() << " rows";
    if (rep.A) s << ", A = " << std::setprecision(10) << *rep.A;
    o.summary = s.str();
    return o;
}

} // namespace

void validate_config(const RunConfig& c) {
    if (std::find(kCommands.begin(), kCommands.end(), c.command) == kCommands.end())
        throw Error(Errc::ConfigError, "unknown command '" + c.command + "'");
    if (c.model.empty()) throw Error(Errc::ConfigError, "no model given");
    if (!(c.tol > 0.0)) throw Error(Errc::ConfigError, "--tol must be positive");
    if (c.samples < 1) throw Error(Errc::ConfigError, "--samples must be positive");
    if (!(c.delta >= 0.0)) throw Error(Errc::ConfigError, "--delta must be nonnegative");
    for (long n : c.N)
        if (n < 1) throw Error(Errc::ConfigError, "N must be >= 1");
    const bool needs_N = c.command != "check" && c.command != "equilibria";
    if (needs_N && c.N.empty()) throw Error(Errc::ConfigError, "--N is required for '" + c.command + "'");
    if (c.command == "simulate" && c.reps < 1) throw Error(Errc::ConfigError, "--reps must be >= 1");
    if ((c.command == "simulate" || (c.command == "compare" && c.reps > 0)) && !c.seed)
        throw Error(Errc::ConfigError, "--seed is required when simulating");
    if (c.init != "qsd" && c.init != "point") throw Error(Errc::ConfigError, "--init must be 'qsd' or 'point'");
    const bool table_ok = c.command == "check" || c.command == "tau" || c.command == "compare";
    if (c.format == Format::Table && !table_ok)
        throw Error(Errc::ConfigError, "--format table is available for check, tau and compare only");
    if (c.format == Format::Csv && c.command == "equilibria")
        throw Error(Errc::ConfigError, "equilibria writes JSON only");
}

ModelSpec load_model(const RunConfig& c) {
    std::error_code ec;
    if (std::filesystem::is_regular_file(c.model, ec)) {
        if (!c.params.empty()) throw Error(Errc::ConfigError, "parameter overrides apply to catalog models only");
        return load_model_file(c.model);
    }
    const auto& names = catalog_names();
    if (std::find(names.begin(), names.end(), c.model) == names.end())
        throw Error(Errc::UnknownModel, "'" + c.model + "' is neither a file nor a catalog model");
    return catalog(c.model, c.params);
}

CompareReport compare(const ModelSpec& m, const RunConfig& c) {
    CompareReport rep;
    rep.model = m.label();
    rep.reps = c.reps;
    rep.seed = c.seed;
    std::vector<long> Ns = c.N;
    std::sort(Ns.begin(), Ns.end());
    Ns.erase(std::unique(Ns.begin(), Ns.end()), Ns.end());

    auto rs = check_all(m, check_options(c));
    std::optional<WkbEngine> e;
    bool prefactor = false;
    if (passed(rs, {ConditionId::K0, ConditionId::IRR})) {
        e.emplace(m, wkb_options(c));
        rep.A = e->V_at_origin();
        prefactor = m.is_birth_death() &&
                    passed(rs, {ConditionId::K1, ConditionId::IRR2, ConditionId::BD_ASSUMP, ConditionId::LIN_K});
        if (!prefactor)
            rep.note = m.is_birth_death() ? "prefactor unavailable: " + failures(rs, {ConditionId::K1, ConditionId::IRR2,
                                                                                    ConditionId::BD_ASSUMP, ConditionId::LIN_K})
                                          : "prefactor unavailable: non-BD jump set";
    } else {
        rep.note = "asymptotics unavailable: " + failures(rs, {ConditionId::K0, ConditionId::IRR});
    }

    for (long N : Ns) {
        CompareRow row;
        row.N = N;
        if (prefactor) {
            BDExtinction t = tau_asymptotic(*e, static_cast<double>(N), zero_based(c.order));
            row.log_tau_asymptotic = t.log_tau;
            rep.K = t.K;
        }
        std::optional<OracleResult> r;
        try {
            r = exact_qsd(m, N, c.truncation);
            row.log_tau_exact = r->log_tau;
            row.truncation_mass = r->truncation_mass;
        } catch (const Error& err) {
            if (err.code() != Errc::StateSpaceTooLarge && err.code() != Errc::NotConverged &&
                err.code() != Errc::TruncationMassTooLarge)
                throw;
            row.note = std::string("oracle unavailable: ") + err.what();
        }
        if (row.log_tau_asymptotic && row.log_tau_exact)
            row.ratio = std::exp(*row.log_tau_asymptotic - *row.log_tau_exact);
        if (row.log_tau_exact)
            row.log_tau_over_N = *row.log_tau_exact / static_cast<double>(N);
        else if (row.log_tau_asymptotic)
            row.log_tau_over_N = *row.log_tau_asymptotic / static_cast<double>(N);
        if (c.reps > 0) {
            SimOptions so;
            so.threads = c.threads;
            so.keep_times = false;
            SimStats s = gillespie_extinction(m, N, initial(m, c, N, r ? &*r : nullptr), c.reps, *c.seed, so);
            row.sim_mean = s.mean;
            row.sim_std_error = s.std_error;
            if (s.aborted) row.note += (row.note.empty() ? "" : "; ") + std::to_string(s.aborted) + " replicates aborted";
        }
        rep.rows.push_back(std::move(row));
    }
    return rep;
}

int run(const RunConfig& c, std::ostream& out, std::ostream& err) {
    try {
        validate_config(c);
        ModelSpec m = load_model(c);
        if (c.command != "check") require_valid(m, c);
        Output o;
        if (c.command == "check") o = cmd_check(m, c);
        else if (c.command == "equilibria") o = cmd_equilibria(m, c);
        else if (c.command == "potential") o = cmd_potential(m, c);
        else if (c.command == "qsd-approx") o = cmd_qsd_approx(m, c);
        else if (c.command == "tau") o = cmd_tau(m, c);
        else if (c.command == "oracle") o = cmd_oracle(m, c);
        else if (c.command == "simulate") o = cmd_simulate(m, c);
        else o = cmd_compare(m, c);

        if (c.out.empty()) {
            out << o.body;
        } else {
            std::filesystem::create_directories(c.out);
            auto write = [&](const std::string& name, const std::string& text) {
                std::ofstream f(std::filesystem::path(c.out) / name, std::ios::binary);
                if (!f) throw Error(Errc::ConfigError, "cannot write " + (std::filesystem::path(c.out) / name).string());
                f << text;
            };
            write(c.command + "." + extension(resolve(c)), o.body);
            for (const auto& [name, text] : o.extra_files) write(name, text);
            out << o.summary << "\n";
        }
        return o.code;
    } catch (const Error& e) {
        err << "qsdkit " << c.command << ": " << e.what() << "\n";
        return exit_code(category(e.code()));
    } catch (const std::exception& e) {
        err << "qsdkit " << c.command << ": " << e.what() << "\n";
        return kExitNumerical;
    }
}

} // namespace qsd::cli
