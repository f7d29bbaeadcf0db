#pragma once

#include "qsdkit/model.hpp"

#include <optional>
#include <string>
#include <vector>

namespace qsd {

struct ValidationEntry {
    enum class Status { Pass, Fail, Info };

    std::string id;
    std::string description;
    Status status = Status::Pass;
    std::optional<Vector> witness;
    std::string detail;
};

std::string_view to_string(ValidationEntry::Status s) noexcept;

struct ValidationReport {
    std::vector<ValidationEntry> entries;

    bool all_pass() const;
    const ValidationEntry* find(std::string_view id) const;
};

/// Structural checks of a model: spanning jump set, symmetric jump set,
/// rates vanishing at the origin, positivity inside, vanishing on the
/// faces that would otherwise be left, nonnegativity and finiteness.
/// Failures are report entries, never exceptions.
ValidationReport validate_model(const ModelSpec& m, int samples = 256, double tol = 0.0);

} // namespace qsd
