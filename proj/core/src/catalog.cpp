#include "qsdkit/catalog.hpp"

#include "qsdkit/errors.hpp"

#include <cmath>
#include <sstream>

namespace qsd {

namespace {

std::string idx(const std::string& base, int i) { return base + std::to_string(i + 1); }

std::string sum_expr(int k) {
    std::string s = "(";
    for (int i = 0; i < k; ++i) {
        if (i) s += "+";
        s += "y" + std::to_string(i + 1);
    }
    return s + ")";
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

[[noreturn]] void violated(const std::string& what) { throw Error(Errc::ParameterConstraintViolated, what); }

int get_k(const Bindings& p, int fallback) {
    auto it = p.find("k");
    if (it == p.end()) return fallback;
    double k = it->second;
    if (k < 1 || k != std::floor(k) || k > 16) throw Error(Errc::ConfigError, "k must be an integer in 1..16");
    return static_cast<int>(k);
}

Bindings defaults_for(const std::string& name, int k) {
    Bindings d;
    if (name == "sis1d") {
        d["R0"] = 2.0;
    } else if (name == "sis_hetero") {
        d["k"] = k;
        d["beta"] = 3.0;
        for (int i = 0; i < k; ++i) {
            d[idx("mu", i)] = 1.0;
            d[idx("alpha", i)] = i == 0 ? 1.0 : 0.5;
            d[idx("f", i)] = 1.0 / k;
        }
    } else if (name == "linear_birth_quadratic_death") {
        d["k"] = k;
        d["lambda"] = 1.0;
        d["mu"] = 1.0;
        d["kappa"] = 1.0;
    } else if (name == "bc23_bd") {
        d["k"] = k;
        d["kappa"] = 1.0;
        d["rho"] = 0.5;
        d["extent"] = 4.0;
        for (int i = 0; i < k; ++i) {
            d[idx("beta", i)] = i == 0 ? 1.0 : 0.8;
            d[idx("delta", i)] = i == 0 ? 1.0 : 1.2;
        }
    } else if (name == "competition") {
        d["a1"] = 1.0;
        d["a2"] = 1.2;
        d["a3"] = 1.0;
        d["a4"] = 1.0;
        d["a5"] = 1.2;
        d["a6"] = 1.0;
        d["lambda"] = 1.0;
        d["kappa"] = 1.0;
        d["gamma"] = 0.05;
        d["eta"] = 0.0;
        d["extent"] = 3.0;
    } else if (name == "nonrev2d") {
        d["lambda"] = 1.0;
        d["extent"] = 3.0;
    } else {
        throw Error(Errc::UnknownModel, "'" + name + "'");
    }
    return d;
}

Bindings merged(const std::string& name, const Bindings& user) {
    int k = get_k(user, name == "sis1d" ? 1 : 2);
    if (name == "sis1d" || name == "competition" || name == "nonrev2d") {
        if (user.count("k") && user.at("k") != (name == "sis1d" ? 1 : 2))
            throw Error(Errc::ConfigError, "model '" + name + "' has fixed dimension");
    }
    Bindings p = defaults_for(name, k);
    for (const auto& [key, value] : user) {
        if (key == "k" && name != "sis1d" && name != "competition" && name != "nonrev2d") continue;
        if (key == "k") continue;
        if (!p.count(key)) throw Error(Errc::ConfigError, "unknown parameter '" + key + "' for model '" + name + "'");
        p[key] = value;
    }
    return p;
}

std::vector<std::pair<std::string, double>> as_params(const Bindings& p, std::initializer_list<std::string> skip = {}) {
    std::vector<std::pair<std::string, double>> out;
    for (const auto& [key, value] : p) {
        bool drop = key == "k" || key == "extent";
        for (const auto& s : skip) drop = drop || key == s;
        if (!drop) out.emplace_back(key, value);
    }
    return out;
}

void require_positive(const Bindings& p, const std::string& key) {
    if (!(p.at(key) > 0.0)) violated(key + " > 0");
}

ModelSpec make_sis1d(const Bindings& p, bool check) {
    if (check) {
        require_positive(p, "R0");
        if (!(p.at("R0") > 1.0)) violated("R0 > 1");
    }
    StateSpaceGeom g{GeomKind::Box, 1, {1.0}, std::nullopt, {}};
    return make_model("sis1d", g, {unit_jump(1, 0, 1), unit_jump(1, 0, -1)}, {"R0*y1*(1-y1)", "y1"}, as_params(p));
}

ModelSpec make_sis_hetero(const Bindings& p, int k, bool check) {
    StateSpaceGeom g{GeomKind::Box, k, {}, std::nullopt, {}};
    double fsum = 0.0, musum = 0.0, growth = 0.0;
    for (int i = 0; i < k; ++i) {
        double f = p.at(idx("f", i)), mu = p.at(idx("mu", i)), alpha = p.at(idx("alpha", i));
        g.f.push_back(f);
        fsum += f;
        musum += mu * f;
        growth += alpha * mu * f;
        if (check) {
            require_positive(p, idx("f", i));
            require_positive(p, idx("mu", i));
            require_positive(p, idx("alpha", i));
        }
    }
    if (check) {
        require_positive(p, "beta");
        if (std::abs(fsum - 1.0) > 1e-12) violated("sum_i f_i = 1");
        if (std::abs(musum - 1.0) > 1e-12) violated("sum_i mu_i f_i = 1");
        if (!(p.at("beta") * growth > 1.0)) violated("beta * sum_i alpha_i mu_i f_i > 1");
    }
    std::vector<JumpVector> jumps;
    std::vector<std::string> rates;
    const std::string s = sum_expr(k);
    for (int i = 0; i < k; ++i) {
        const std::string y = "y" + std::to_string(i + 1);
        jumps.push_back(unit_jump(k, i, 1));
        rates.push_back("beta*" + idx("mu", i) + "*(" + idx("f", i) + "-" + y + ")*" + s);
        jumps.push_back(unit_jump(k, i, -1));
        rates.push_back(y + "/" + idx("alpha", i));
    }
    return make_model("sis_hetero", g, jumps, rates, as_params(p));
}

ModelSpec make_lbqd(const Bindings& p, int k, bool check) {
    double lambda = p.at("lambda"), mu = p.at("mu"), kappa = p.at("kappa");
    if (check) {
        require_positive(p, "lambda");
        require_positive(p, "mu");
        require_positive(p, "kappa");
        if (!(k * lambda > mu)) violated("k*lambda > mu");
    }
    double s_star = std::max((k * lambda - mu) / kappa, 0.25);
    StateSpaceGeom g{GeomKind::Lattice, k, {}, std::nullopt,
                     std::vector<double>(static_cast<std::size_t>(k), 3.0 * s_star)};
    std::vector<JumpVector> jumps;
    std::vector<std::string> rates;
    const std::string s = sum_expr(k);
    for (int i = 0; i < k; ++i) {
        jumps.push_back(unit_jump(k, i, 1));
        rates.push_back("lambda*" + s);
        jumps.push_back(unit_jump(k, i, -1));
        rates.push_back("y" + std::to_string(i + 1) + "*(mu+kappa*" + s + ")");
    }
    return make_model("linear_birth_quadratic_death", g, jumps, rates, as_params(p));
}

ModelSpec make_bc23(const Bindings& p, int k, bool check) {
    double kappa = p.at("kappa"), rho = p.at("rho");
    if (check) {
        require_positive(p, "kappa");
        if (rho < 0.0) violated("rho >= 0");
        double r = 0.0;
        for (int i = 0; i < k; ++i) {
            require_positive(p, idx("beta", i));
            require_positive(p, idx("delta", i));
            r += p.at(idx("beta", i)) / p.at(idx("delta", i));
            if (!(kappa * p.at(idx("delta", i)) > rho * p.at(idx("beta", i))))
                violated("kappa*delta_i > rho*beta_i for i = " + std::to_string(i + 1));
        }
        if (!(r > 1.0)) violated("sum_i beta_i/delta_i > 1");
    }
    StateSpaceGeom g{GeomKind::Lattice, k, {}, std::nullopt,
                     std::vector<double>(static_cast<std::size_t>(k), p.at("extent"))};
    std::vector<JumpVector> jumps;
    std::vector<std::string> rates;
    const std::string s = sum_expr(k);
    for (int i = 0; i < k; ++i) {
        const std::string y = "y" + std::to_string(i + 1);
        jumps.push_back(unit_jump(k, i, 1));
        rates.push_back(s + "*" + idx("beta", i) + "*(1+rho*" + y + ")");
        jumps.push_back(unit_jump(k, i, -1));
        rates.push_back("(1+kappa*" + s + ")*" + idx("delta", i) + "*" + y);
    }
    return make_model("bc23_bd", g, jumps, rates, as_params(p));
}

ModelSpec make_competition(const Bindings& p, bool check) {
    const bool swaps = !(p.at("a5") == 0.0 && p.at("a6") == 0.0);
    if (check) {
        for (const char* a : {"a1", "a2", "a3", "a4", "lambda"}) require_positive(p, a);
        if (p.at("kappa") < 0.0) violated("kappa >= 0");
        if (swaps) {
            require_positive(p, "a5");
            require_positive(p, "a6");
            double lhs = p.at("a1") * p.at("a4") * p.at("a5");
            double rhs = p.at("a2") * p.at("a3") * p.at("a6");
            if (std::abs(lhs - rhs) > 1e-12 * std::max(lhs, rhs))
                violated("a1*a4*a5 = a2*a3*a6 (got " + fmt(lhs) + " vs " + fmt(rhs) + ")");
        }
    }
    StateSpaceGeom g{GeomKind::Lattice, 2, {}, std::nullopt, {p.at("extent"), p.at("extent")}};
    const std::string s = "(y1+y2)";
    const std::string b3 = "exp(gamma*(y1-y2))";
    const std::string d3 = "exp(eta*(y1-y2)^2-gamma*(y1-y2))";
    std::vector<JumpVector> jumps{{{-1, 0}}, {{1, 0}}, {{0, -1}}, {{0, 1}}};
    std::vector<std::string> rates{
        "a1*(1+kappa*" + s + ")*y1*" + d3,
        "a2*lambda*" + s + "*" + b3,
        "a3*(1+kappa*" + s + ")*y2*" + b3,
        "a4*lambda*" + s + "*" + d3,
    };
    if (swaps) {
        jumps.push_back({{1, -1}});
        rates.push_back("a5*y2*" + b3 + "^2");
        jumps.push_back({{-1, 1}});
        rates.push_back("a6*y1*" + d3 + "^2");
    }
    return make_model(swaps ? "competition" : "competition_bd", g, jumps, rates, as_params(p, {}));
}

ModelSpec make_nonrev2d(const Bindings& p, bool check) {
    if (check) require_positive(p, "lambda");
    StateSpaceGeom g{GeomKind::Lattice, 2, {}, std::nullopt, {p.at("extent"), p.at("extent")}};
    std::vector<JumpVector> jumps{unit_jump(2, 0, 1), unit_jump(2, 0, -1), unit_jump(2, 1, 1), unit_jump(2, 1, -1)};
    std::vector<std::string> rates{"lambda*(y1+y2)", "y1*(1+y1)", "lambda*(y1+y2)", "y2*(1+y1+y2)"};
    return make_model("nonrev2d", g, jumps, rates, as_params(p));
}

} // namespace

const std::vector<std::string>& catalog_names() {
    static const std::vector<std::string> names{"sis_hetero", "linear_birth_quadratic_death", "bc23_bd",
                                                "competition", "sis1d", "nonrev2d"};
    return names;
}

Bindings catalog_defaults(const std::string& name) { return defaults_for(name, name == "sis1d" ? 1 : 2); }

ModelSpec catalog(const std::string& name, const Bindings& params, const CatalogOptions& opts) {
    Bindings p = merged(name, params);
    const bool check = opts.check_constraints;
    int k = get_k(params, name == "sis1d" ? 1 : 2);
    if (name == "sis1d") return make_sis1d(p, check);
    if (name == "sis_hetero") return make_sis_hetero(p, k, check);
    if (name == "linear_birth_quadratic_death") return make_lbqd(p, k, check);
    if (name == "bc23_bd") return make_bc23(p, k, check);
    if (name == "competition") return make_competition(p, check);
    if (name == "nonrev2d") return make_nonrev2d(p, check);
    throw Error(Errc::UnknownModel, "'" + name + "'");
}

} // namespace qsd
