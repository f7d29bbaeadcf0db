#pragma once

#include "qsdkit/expr.hpp"

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace qsd {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline std::span<const double> as_span(const Vector& v) {
    return {v.data(), static_cast<std::size_t>(v.size())};
}

/// Integer jump l of the chain (x -> x + l).
struct JumpVector {
    std::vector<int> components;

    int dim() const noexcept { return static_cast<int>(components.size()); }
    bool is_zero() const noexcept;
    JumpVector operator-() const;
    Vector as_vector() const;
    friend bool operator==(const JumpVector&, const JumpVector&) = default;
    friend auto operator<=>(const JumpVector&, const JumpVector&) = default;
};

std::string to_string(const JumpVector& l);

enum class GeomKind { Lattice, Box };

/// Scaled state space: the orthant for lattice models, or the box
/// [0,f_1] x ... x [0,f_k] with sum f_i = 1.
struct StateSpaceGeom {
    GeomKind kind = GeomKind::Lattice;
    int k = 1;
    std::vector<double> f;               // Box: capacity fractions
    std::optional<std::vector<long>> counts; // Box given as counts N_i: f_i = N_i / sum N_j exactly
    std::vector<double> extent;          // Lattice: per-axis bound of the sampling/search region

    /// Upper end of axis i of the region used for sampling and searches.
    double upper(int i) const;
    /// Largest side of that region.
    double diameter() const;
    /// Per-axis capacity N*f_i for a box model. Throws if N*f_i is not integral.
    std::vector<long> capacities(long N) const;
};

/// A density-dependent population model: jump set L with rate functions
/// beta_l(y). Immutable once built.
class ModelSpec {
public:
    ModelSpec() = default;

    const std::string& label() const noexcept { return label_; }
    const StateSpaceGeom& geom() const noexcept { return geom_; }
    int k() const noexcept { return geom_.k; }
    std::size_t num_jumps() const noexcept { return jumps_.size(); }
    const std::vector<JumpVector>& jumps() const noexcept { return jumps_; }
    const JumpVector& jump(std::size_t j) const { return jumps_[j]; }
    const RateExpr& rate_expr(std::size_t j) const { return rates_[j]; }
    const std::vector<std::string>& param_names() const noexcept { return param_names_; }
    const std::vector<double>& param_values() const noexcept { return param_values_; }
    std::optional<double> param(std::string_view name) const;

    /// beta_l(y) for jump index j.
    double rate(std::size_t j, std::span<const double> y) const {
        return rates_[j].eval(y, param_values_);
    }
    double rate(std::size_t j, const Vector& y) const { return rate(j, as_span(y)); }

    /// Index of jump l, if present.
    std::optional<std::size_t> index_of(const JumpVector& l) const;
    /// Index of -l_j, if present.
    std::optional<std::size_t> opposite(std::size_t j) const { return opposite_[j]; }

    /// Row j is l_j^T.
    Matrix jump_matrix() const;

    /// True iff L = {e_i, -e_i : i = 1..k}.
    bool is_birth_death() const noexcept { return birth_death_; }
    /// Jump indices of e_i and -e_i (birth-death models only).
    std::size_t birth_index(int i) const { return birth_idx_[static_cast<std::size_t>(i)]; }
    std::size_t death_index(int i) const { return death_idx_[static_cast<std::size_t>(i)]; }

    bool in_domain(const Vector& y, double tol = 0.0) const;
    /// Distance from y to the boundary of the scaled state space.
    double boundary_distance(const Vector& y) const;

    /// The same model with coordinate i renamed to perm[i].
    ModelSpec with_permuted_coordinates(std::span<const int> perm) const;

    friend ModelSpec make_model(std::string label, StateSpaceGeom geom, std::vector<JumpVector> jumps,
                                const std::vector<std::string>& rate_texts,
                                std::vector<std::pair<std::string, double>> params);

private:
    void index_jumps();

    std::string label_;
    StateSpaceGeom geom_;
    std::vector<JumpVector> jumps_;
    std::vector<RateExpr> rates_;
    std::vector<std::string> param_names_;
    std::vector<double> param_values_;
    std::vector<std::optional<std::size_t>> opposite_;
    bool birth_death_ = false;
    std::vector<std::size_t> birth_idx_;
    std::vector<std::size_t> death_idx_;
};

/// Builds a model; rate_texts[j] is the expression for jumps[j]. Throws
/// Error(InvalidModel) on malformed structure (zero or wrongly sized jumps,
/// duplicate jumps, bad geometry) and parse errors from the rate DSL.
ModelSpec make_model(std::string label, StateSpaceGeom geom, std::vector<JumpVector> jumps,
                     const std::vector<std::string>& rate_texts,
                     std::vector<std::pair<std::string, double>> params);

/// Model file: {"label", "k", "geom": {"kind": "box"|"lattice", "f": [...] | "counts": [...],
/// "extent": [...]}, "jumps": [[...], ...], "rates": {"<jump index>": "<expr>"}, "params": {...}}.
/// Jump indices are 0-based positions in "jumps".
ModelSpec parse_model_json(std::string_view text);
ModelSpec load_model_file(const std::string& path);
std::string model_to_json(const ModelSpec& m);

/// n Halton points in the sampling region of S~, shrunk by margin*diameter on
/// every face.
std::vector<Vector> interior_samples(const ModelSpec& m, int n, double margin = 1e-3);

/// Unit vector e_i (0-based i).
JumpVector unit_jump(int k, int i, int sign = 1);

} // namespace qsd
