#pragma once

#include "qsdkit/catalog.hpp"
#include "qsdkit/errors.hpp"
#include "qsdkit/model.hpp"

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace qsd::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitCondition = 2;
inline constexpr int kExitNumerical = 3;

int exit_code(ErrorCategory c) noexcept;

enum class Format { Auto, Json, Csv, Table };

struct RunConfig {
    std::string command;
    std::string model;                       // model file path or catalog name
    Bindings params;                         // catalog parameter overrides
    std::vector<long> N;
    double tol = 1e-7;
    int samples = 256;
    std::optional<std::uint64_t> seed;
    std::string out;                         // output directory; empty writes to the stream
    Format format = Format::Auto;
    long reps = 0;
    std::optional<std::vector<long>> truncation;
    std::string grid;                        // potential: "lo:hi:n", or one such triple per axis joined by ','
    std::vector<long> x;                     // qsd-approx state (default: nearest to N y*)
    double delta = 0.05;
    std::string init = "qsd";                // simulate: "qsd" or "point"
    std::vector<long> start;                 // simulate: start state for init = "point"
    unsigned threads = 0;
    std::vector<int> order;                  // tau: coordinate ordering, 1-based
};

/// Throws Error(ConfigError) when the configuration cannot be run.
void validate_config(const RunConfig& c);

/// A model file if `c.model` names an existing file, else a catalog entry.
ModelSpec load_model(const RunConfig& c);

struct CompareRow {
    long N = 0;
    std::optional<double> log_tau_asymptotic;
    std::optional<double> log_tau_exact;
    std::optional<double> ratio;             // tau_asymptotic / tau_exact
    std::optional<double> log_tau_over_N;    // from tau_exact when available
    std::optional<double> sim_mean;
    std::optional<double> sim_std_error;
    std::optional<double> truncation_mass;
    std::string note;
};

struct CompareReport {
    std::string model;
    std::optional<double> A;
    std::optional<double> K;                 // from the largest N
    std::vector<CompareRow> rows;            // sorted by N
    long reps = 0;
    std::optional<std::uint64_t> seed;
    std::string note;
};

CompareReport compare(const ModelSpec& m, const RunConfig& c);

/// Runs c.command. Machine-readable output goes to c.out/<command>.<ext>
/// (with a short summary on `out`) or, without --out, straight to `out`.
/// Diagnostics go to `err`. Returns the exit code.
int run(const RunConfig& c, std::ostream& out, std::ostream& err);

} // namespace qsd::cli
