#pragma once

#include "few/types.hpp"

#include <utility>
#include <vector>

namespace few {

// Per-group probability distribution over contexts: the reference measure
// that the parity constraint is stated against.
struct Target {
    int num_groups = 0;
    int num_contexts = 0;
    std::vector<double> mass; // row-major M x N

    Target() = default;
    Target(int groups, int contexts, double fill = 0.0)
        : num_groups(groups), num_contexts(contexts),
          mass(static_cast<std::size_t>(groups) * contexts, fill) {}

    static Target uniform(int groups, int contexts);

    double operator()(int i, int x) const { return mass[idx(i, x)]; }
    double& operator()(int i, int x) { return mass[idx(i, x)]; }

    std::size_t idx(int i, int x) const {
        return static_cast<std::size_t>(i) * num_contexts + x;
    }

    // Contexts with strictly nonzero mass. Exact-zero comparison: targets
    // are constructed inputs, never results of arithmetic.
    std::vector<int> support(int group) const;
};

struct TargetViolation {
    int group = 0;
    double row_deviation = 0.0; // |row sum - 1|
    bool negative_entry = false;
    bool out_of_range = false;
};

struct TargetReport {
    bool ok = true;
    std::vector<TargetViolation> violations;
};

// Row-stochastic check. With allow_inactive_rows, an all-zero row is
// accepted and marks the group as carrying no parity constraint (used by
// the empirical-fairness loop before a group has been seen).
TargetReport validate_target(const Target& t, const Dims& dims,
                             bool allow_inactive_rows = false);

// Sparse per-trial view of a target: per group, the (context id, mass)
// pairs of its support. Context ids are only required to be meaningful
// per group, which is what the decomposition-tree reduction needs. An
// empty row means the group is inactive this trial.
struct TrialTarget {
    std::vector<std::vector<std::pair<int, double>>> rows;

    TrialTarget() = default;
    explicit TrialTarget(int num_groups) : rows(num_groups) {}
    explicit TrialTarget(const Target& dense);

    int num_groups() const { return static_cast<int>(rows.size()); }
    bool active(int group) const { return !rows[group].empty(); }
    double mass_at(int group, int context) const;

    void validate() const; // each nonempty row must sum to 1 within 1e-9
};

} // namespace few
