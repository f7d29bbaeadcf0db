#pragma once

#include "qsdkit/model.hpp"
#include "qsdkit/numerics.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace qsd {

enum class ConditionId { K0, IRR, K1, IRR2, BD_IRR, BD_IRR2, LIN_K, BD_ASSUMP };
enum class ConditionStatus { Pass, Fail, NotApplicable };

std::string_view to_string(ConditionId id) noexcept;
std::string_view to_string(ConditionStatus s) noexcept;

struct Witness {
    Vector point;
    std::string where; // jump or matrix entry with the largest residual
};

struct ConditionReport {
    ConditionId id = ConditionId::K0;
    ConditionStatus status = ConditionStatus::NotApplicable;
    double worst_residual = 0.0;
    std::optional<Witness> witness; // present iff status == Fail
    int samples = 0;
    double tol = 0.0;
    std::string note;

    bool passed() const noexcept { return status == ConditionStatus::Pass; }
};

struct CheckOptions {
    int samples = 256;
    double tol = 1e-7;
    double margin = 1e-3; // samples stay this fraction of the diameter away from the boundary
    num::FdOptions fd;
};

/// Consistency of l^T theta = ln(beta_{-l}/beta_l) at Halton samples.
/// Throws DegenerateRates if a rate vanishes at an interior sample.
ConditionReport check_K0(const ModelSpec& m, const CheckOptions& o = {});
/// Symmetry of d theta/dy at the samples.
ConditionReport check_IRR(const ModelSpec& m, const CheckOptions& o = {});
/// Consistency of the theta0 system and symmetry of d theta0/dy.
std::pair<ConditionReport, ConditionReport> check_K1_IRR2(const ModelSpec& m, const CheckOptions& o = {});
/// d_i > 0 and every row of b has a positive entry. Throws NotBirthDeath.
ConditionReport check_bd_assumptions(const ModelSpec& m, const CheckOptions& o = {});
/// b_ij = b_ii within tol * max |b|, plus the checks of check_bd_assumptions.
/// Throws NotBirthDeath.
ConditionReport check_linear_kolmogorov(const ModelSpec& m, double tol = 1e-7, const num::FdOptions& fd = {});

/// Everything that applies to the model, in gate order: K0, IRR, K1, IRR2,
/// and for birth-death models BD_ASSUMP and LIN_K.
std::vector<ConditionReport> check_all(const ModelSpec& m, const CheckOptions& o = {});

} // namespace qsd
