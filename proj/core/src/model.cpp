#include "qsdkit/model.hpp"

#include "qsdkit/errors.hpp"
#include "qsdkit/numerics.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace qsd {

bool JumpVector::is_zero() const noexcept {
    return std::all_of(components.begin(), components.end(), [](int c) { return c == 0; });
}

JumpVector JumpVector::operator-() const {
    JumpVector out = *this;
    for (int& c : out.components) c = -c;
    return out;
}

Vector JumpVector::as_vector() const {
    Vector v(dim());
    for (int i = 0; i < dim(); ++i) v(i) = components[static_cast<std::size_t>(i)];
    return v;
}

std::string to_string(const JumpVector& l) {
    std::string s = "(";
    for (std::size_t i = 0; i < l.components.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(l.components[i]);
    }
    return s + ")";
}

std::vector<Vector> interior_samples(const ModelSpec& m, int n, double margin) {
    const auto& g = m.geom();
    const double pad = margin * g.diameter();
    num::Halton h(m.k());
    std::vector<Vector> out;
    out.reserve(static_cast<std::size_t>(std::max(n, 0)));
    for (int s = 0; s < n; ++s) {
        auto u = h.next();
        Vector y(m.k());
        for (int i = 0; i < m.k(); ++i) y(i) = pad + u[static_cast<std::size_t>(i)] * (g.upper(i) - 2.0 * pad);
        out.push_back(std::move(y));
    }
    return out;
}

JumpVector unit_jump(int k, int i, int sign) {
    JumpVector l{std::vector<int>(static_cast<std::size_t>(k), 0)};
    l.components[static_cast<std::size_t>(i)] = sign;
    return l;
}

double StateSpaceGeom::upper(int i) const {
    return kind == GeomKind::Box ? f[static_cast<std::size_t>(i)] : extent[static_cast<std::size_t>(i)];
}

double StateSpaceGeom::diameter() const {
    double d = 0.0;
    for (int i = 0; i < k; ++i) d = std::max(d, upper(i));
    return d;
}

std::vector<long> StateSpaceGeom::capacities(long N) const {
    if (kind != GeomKind::Box) throw Error(Errc::InvalidModel, "capacities requested for a lattice model");
    std::vector<long> cap(static_cast<std::size_t>(k));
    if (counts) {
        long total = std::accumulate(counts->begin(), counts->end(), 0L);
        for (int i = 0; i < k; ++i) {
            long num = (*counts)[static_cast<std::size_t>(i)] * N;
            if (num % total != 0)
                throw Error(Errc::InvalidModel, "N*f_" + std::to_string(i + 1) + " is not an integer for N=" +
                                                    std::to_string(N));
            cap[static_cast<std::size_t>(i)] = num / total;
        }
        return cap;
    }
    for (int i = 0; i < k; ++i) {
        double v = static_cast<double>(N) * f[static_cast<std::size_t>(i)];
        double r = std::round(v);
        if (std::abs(v - r) > 1e-9 * std::max(1.0, v))
            throw Error(Errc::InvalidModel,
                        "N*f_" + std::to_string(i + 1) + " is not an integer for N=" + std::to_string(N));
        cap[static_cast<std::size_t>(i)] = static_cast<long>(r);
    }
    return cap;
}

std::optional<double> ModelSpec::param(std::string_view name) const {
    for (std::size_t i = 0; i < param_names_.size(); ++i)
        if (param_names_[i] == name) return param_values_[i];
    return std::nullopt;
}

std::optional<std::size_t> ModelSpec::index_of(const JumpVector& l) const {
    auto it = std::find(jumps_.begin(), jumps_.end(), l);
    if (it == jumps_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - jumps_.begin());
}

Matrix ModelSpec::jump_matrix() const {
    Matrix L(static_cast<Eigen::Index>(jumps_.size()), k());
    for (std::size_t j = 0; j < jumps_.size(); ++j)
        for (int i = 0; i < k(); ++i) L(static_cast<Eigen::Index>(j), i) = jumps_[j].components[static_cast<std::size_t>(i)];
    return L;
}

bool ModelSpec::in_domain(const Vector& y, double tol) const {
    for (int i = 0; i < k(); ++i) {
        if (y(i) < -tol) return false;
        if (geom_.kind == GeomKind::Box && y(i) > geom_.f[static_cast<std::size_t>(i)] + tol) return false;
    }
    return true;
}

double ModelSpec::boundary_distance(const Vector& y) const {
    double d = std::numeric_limits<double>::infinity();
    for (int i = 0; i < k(); ++i) {
        d = std::min(d, y(i));
        if (geom_.kind == GeomKind::Box) d = std::min(d, geom_.f[static_cast<std::size_t>(i)] - y(i));
    }
    return d;
}

void ModelSpec::index_jumps() {
    opposite_.assign(jumps_.size(), std::nullopt);
    for (std::size_t j = 0; j < jumps_.size(); ++j) opposite_[j] = index_of(-jumps_[j]);

    birth_idx_.assign(static_cast<std::size_t>(k()), 0);
    death_idx_.assign(static_cast<std::size_t>(k()), 0);
    birth_death_ = jumps_.size() == static_cast<std::size_t>(2 * k());
    for (int i = 0; i < k() && birth_death_; ++i) {
        auto b = index_of(unit_jump(k(), i, +1));
        auto d = index_of(unit_jump(k(), i, -1));
        if (!b || !d) {
            birth_death_ = false;
            break;
        }
        birth_idx_[static_cast<std::size_t>(i)] = *b;
        death_idx_[static_cast<std::size_t>(i)] = *d;
    }
}

ModelSpec make_model(std::string label, StateSpaceGeom geom, std::vector<JumpVector> jumps,
                     const std::vector<std::string>& rate_texts,
                     std::vector<std::pair<std::string, double>> params) {
    if (geom.k < 1) throw Error(Errc::InvalidModel, "k must be >= 1");
    const auto k = static_cast<std::size_t>(geom.k);
    if (geom.kind == GeomKind::Box) {
        if (geom.counts) {
            if (geom.counts->size() != k) throw Error(Errc::InvalidModel, "geom.counts must have k entries");
            long total = std::accumulate(geom.counts->begin(), geom.counts->end(), 0L);
            if (total <= 0) throw Error(Errc::InvalidModel, "geom.counts must be positive");
            geom.f.resize(k);
            for (std::size_t i = 0; i < k; ++i) {
                if ((*geom.counts)[i] <= 0) throw Error(Errc::InvalidModel, "geom.counts must be positive");
                geom.f[i] = static_cast<double>((*geom.counts)[i]) / static_cast<double>(total);
            }
        }
        if (geom.f.size() != k) throw Error(Errc::InvalidModel, "geom.f must have k entries");
        for (double f : geom.f)
            if (!(f > 0.0) || !std::isfinite(f)) throw Error(Errc::InvalidModel, "geom.f entries must be positive");
    } else {
        if (geom.extent.empty()) geom.extent.assign(k, 4.0);
        if (geom.extent.size() != k) throw Error(Errc::InvalidModel, "geom.extent must have k entries");
        for (double e : geom.extent)
            if (!(e > 0.0)) throw Error(Errc::InvalidModel, "geom.extent entries must be positive");
    }
    if (jumps.empty()) throw Error(Errc::InvalidModel, "jump set is empty");
    if (rate_texts.size() != jumps.size())
        throw Error(Errc::InvalidModel, "every jump needs exactly one rate expression");
    std::set<JumpVector> seen;
    for (const auto& l : jumps) {
        if (l.components.size() != k)
            throw Error(Errc::InvalidModel, "jump " + to_string(l) + " has wrong dimension");
        if (l.is_zero()) throw Error(Errc::InvalidModel, "zero jump vector");
        if (!seen.insert(l).second) throw Error(Errc::InvalidModel, "duplicate jump " + to_string(l));
    }

    ModelSpec m;
    m.label_ = std::move(label);
    m.geom_ = std::move(geom);
    m.jumps_ = std::move(jumps);
    for (auto& [name, value] : params) {
        if (std::find(m.param_names_.begin(), m.param_names_.end(), name) != m.param_names_.end())
            throw Error(Errc::InvalidModel, "duplicate parameter '" + name + "'");
        m.param_names_.push_back(name);
        m.param_values_.push_back(value);
    }
    m.rates_.reserve(rate_texts.size());
    for (const auto& text : rate_texts) m.rates_.push_back(parse_rate_expr(text, m.k(), m.param_names_));
    m.index_jumps();
    return m;
}

ModelSpec ModelSpec::with_permuted_coordinates(std::span<const int> perm) const {
    ModelSpec out = *this;
    const auto k = static_cast<std::size_t>(this->k());
    auto permute_vec = [&](const auto& v) {
        auto w = v;
        for (std::size_t i = 0; i < k; ++i) w[static_cast<std::size_t>(perm[i])] = v[i];
        return w;
    };
    for (auto& l : out.jumps_) l.components = permute_vec(l.components);
    for (auto& r : out.rates_) r = r.with_permuted_coordinates(perm);
    if (!out.geom_.f.empty()) out.geom_.f = permute_vec(geom_.f);
    if (!out.geom_.extent.empty()) out.geom_.extent = permute_vec(geom_.extent);
    if (out.geom_.counts) out.geom_.counts = permute_vec(*geom_.counts);
    out.label_ = label_ + "[permuted]";
    out.index_jumps();
    return out;
}

ModelSpec parse_model_json(std::string_view text) {
    using nlohmann::json;
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(Errc::ConfigError, std::string("model file is not valid JSON: ") + e.what());
    }
    try {
        StateSpaceGeom geom;
        geom.k = doc.at("k").get<int>();
        const auto& g = doc.at("geom");
        std::string kind = g.at("kind").get<std::string>();
        if (kind == "box") {
            geom.kind = GeomKind::Box;
            if (g.contains("counts")) geom.counts = g.at("counts").get<std::vector<long>>();
            else geom.f = g.at("f").get<std::vector<double>>();
        } else if (kind == "lattice") {
            geom.kind = GeomKind::Lattice;
            if (g.contains("extent")) geom.extent = g.at("extent").get<std::vector<double>>();
        } else {
            throw Error(Errc::InvalidModel, "geom.kind must be \"box\" or \"lattice\"");
        }

        std::vector<JumpVector> jumps;
        for (const auto& j : doc.at("jumps")) jumps.push_back({j.get<std::vector<int>>()});

        std::vector<std::string> rates(jumps.size());
        std::vector<bool> have(jumps.size(), false);
        for (const auto& [key, value] : doc.at("rates").items()) {
            std::size_t idx = 0;
            try {
                idx = std::stoul(key);
            } catch (const std::exception&) {
                throw Error(Errc::InvalidModel, "rate key '" + key + "' is not a jump index");
            }
            if (idx >= jumps.size()) throw Error(Errc::InvalidModel, "rate key '" + key + "' out of range");
            rates[idx] = value.get<std::string>();
            have[idx] = true;
        }
        for (std::size_t j = 0; j < jumps.size(); ++j)
            if (!have[j]) throw Error(Errc::InvalidModel, "no rate given for jump index " + std::to_string(j));

        std::vector<std::pair<std::string, double>> params;
        if (doc.contains("params"))
            for (const auto& [name, value] : doc.at("params").items()) params.emplace_back(name, value.get<double>());

        return make_model(doc.value("label", std::string("model")), std::move(geom), std::move(jumps), rates,
                          std::move(params));
    } catch (const json::exception& e) {
        throw Error(Errc::InvalidModel, std::string("malformed model file: ") + e.what());
    }
}

ModelSpec load_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::ConfigError, "cannot open model file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_model_json(buf.str());
}

std::string model_to_json(const ModelSpec& m) {
    nlohmann::ordered_json doc;
    doc["label"] = m.label();
    doc["k"] = m.k();
    const auto& g = m.geom();
    if (g.kind == GeomKind::Box) {
        doc["geom"]["kind"] = "box";
        if (g.counts) doc["geom"]["counts"] = *g.counts;
        else doc["geom"]["f"] = g.f;
    } else {
        doc["geom"]["kind"] = "lattice";
        doc["geom"]["extent"] = g.extent;
    }
    doc["jumps"] = nlohmann::ordered_json::array();
    for (const auto& l : m.jumps()) doc["jumps"].push_back(l.components);
    for (std::size_t j = 0; j < m.num_jumps(); ++j) doc["rates"][std::to_string(j)] = m.rate_expr(j).source();
    doc["params"] = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < m.param_names().size(); ++i) doc["params"][m.param_names()[i]] = m.param_values()[i];
    return doc.dump(2);
}

} // namespace qsd
