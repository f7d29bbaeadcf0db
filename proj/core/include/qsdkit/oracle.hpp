#pragma once

#include "qsdkit/model.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace qsd {

class WkbEngine;

/// The chain restricted to C = S \ {0}, on a finite box. Box models use
/// {0..N f_i}; lattice models are cut at a per-axis bound and transitions
/// across the cut are dropped (their rates are kept as diagnostics).
class TruncatedChain {
public:
    TruncatedChain(const ModelSpec& m, long N, std::optional<std::vector<long>> truncation = std::nullopt,
                   std::size_t cap = 2'000'000);

    long N() const noexcept { return N_; }
    int k() const noexcept { return static_cast<int>(bound_.size()); }
    std::size_t size() const noexcept { return exit_.size(); }
    const std::vector<long>& bound() const noexcept { return bound_; }

    /// State for index s (0-based over C) and back. index_of returns -1 for
    /// the origin and for states outside the box.
    std::vector<long> state(std::size_t s) const;
    std::int64_t index_of(const std::vector<long>& x) const;

    /// Outgoing transitions of s: targets (-1 = absorption at 0) and rates.
    std::size_t row_begin(std::size_t s) const { return offsets_[s]; }
    std::size_t row_end(std::size_t s) const { return offsets_[s + 1]; }
    std::int64_t target(std::size_t t) const { return targets_[t]; }
    double rate(std::size_t t) const { return rates_[t]; }

    double exit_rate(std::size_t s) const { return exit_[s]; }
    double absorption_rate(std::size_t s) const { return absorb_[s]; }
    double clipped_rate(std::size_t s) const { return clipped_[s]; }
    double q_max() const noexcept { return q_max_; }

private:
    long N_;
    std::vector<long> bound_;
    std::vector<std::size_t> stride_;
    std::vector<std::size_t> offsets_;
    std::vector<std::int64_t> targets_;
    std::vector<double> rates_;
    std::vector<double> exit_;
    std::vector<double> absorb_;
    std::vector<double> clipped_;
    double q_max_ = 0.0;
};

/// Default lattice truncation: ceil(6 N y*_i + 10 sqrt(N)) per axis.
std::vector<long> default_truncation(const ModelSpec& m, long N, const Vector& y_star);

struct OracleOptions {
    std::size_t cap = 2'000'000;
    double change_tol = 1e-13;   // L1 change between iterates
    double residual_tol = 1e-10; // L1 residual of the QSD equations
    double mass_tol = 1e-8;      // allowed QSD mass on states with clipped transitions
    long max_iterations = 5'000'000;
    std::optional<std::vector<double>> start; // positive starting vector (default uniform)
};

struct OracleResult {
    std::vector<double> u;
    std::vector<std::vector<long>> states;
    std::vector<long> truncation;
    double tau_exact = 0.0;
    double log_tau = 0.0;
    double decay_rate = 0.0;       // 1/tau from the absorption flux
    double decay_rate_eigen = 0.0; // Rayleigh quotient of Q_C at u
    long iterations = 0;
    double residual = 0.0;         // ||u Q_C + u / tau||_1 / N
    double change = 0.0;
    double truncation_mass = 0.0;
    double q_max = 0.0;
    long N = 0;
};

/// QSD of the truncated chain by uniformized power iteration. Throws
/// StateSpaceTooLarge, NotConverged or TruncationMassTooLarge.
OracleResult exact_qsd(const ModelSpec& m, long N, std::optional<std::vector<long>> truncation = std::nullopt,
                       const OracleOptions& o = {});

struct ProfileRow {
    std::vector<long> x;
    double u_exact = 0.0;
    double u_wkb = 0.0;
    double log_ratio = 0.0; // ln(u_wkb / u_exact)
    bool body = false;      // d(x, boundary) >= delta N
};

struct ErrorProfile {
    std::vector<ProfileRow> rows;
    double max_abs_log_ratio_body = 0.0;
    double log_ratio_at_mode = 0.0;
    std::vector<long> mode;
    double body_mass_wkb = 0.0;
    double body_mass_exact = 0.0;
};

/// ln(u_wkb/u_exact) over the body states d(x, boundary) >= delta N.
ErrorProfile qsd_error_profile(const WkbEngine& engine, const OracleResult& exact, double delta = 0.05);

struct KsResult {
    double D = 0.0;
    double p = 0.0;
};

/// One-sample Kolmogorov-Smirnov test against Exponential(mean).
KsResult ks_test_exponential(std::vector<double> times, double mean);

struct InitialDistribution {
    std::vector<std::vector<long>> states;
    std::vector<double> weights;
    std::string descriptor;

    static InitialDistribution point(std::vector<long> x);
    static InitialDistribution from_oracle(const OracleResult& r);
};

struct SimOptions {
    unsigned threads = 0;          // 0: hardware concurrency
    long max_events = 100'000'000; // per replicate
    bool keep_times = true;
};

struct SimStats {
    long replicates = 0;
    double mean = 0.0;
    double std_error = 0.0;
    std::uint64_t seed = 0;
    std::string descriptor;
    std::vector<double> times;
    long aborted = 0; // replicates stopped by max_events (excluded from the stats)
};

/// Exact SSA to absorption at the origin. Replicate r uses its own stream
/// derived from (seed, r), so results do not depend on the thread count.
SimStats gillespie_extinction(const ModelSpec& m, long N, const InitialDistribution& init, long replicates,
                              std::uint64_t seed, const SimOptions& o = {});

} // namespace qsd
