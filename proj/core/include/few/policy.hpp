#pragma once

#include "few/target.hpp"
#include "few/types.hpp"

#include <functional>
#include <vector>

namespace few {

// Stochastic map from (group, context) to an action distribution. Stored
// dense; fine at desk scale, and the engine itself only ever touches
// support rows.
struct Policy {
    int num_groups = 0;
    int num_contexts = 0;
    int num_actions = 0;
    std::vector<double> probs; // row-major M x N x K

    Policy() = default;
    Policy(int groups, int contexts, int actions, double fill = 0.0)
        : num_groups(groups), num_contexts(contexts), num_actions(actions),
          probs(static_cast<std::size_t>(groups) * contexts * actions, fill) {}

    static Policy uniform(int groups, int contexts, int actions);

    double operator()(int i, int x, int a) const { return probs[idx(i, x, a)]; }
    double& operator()(int i, int x, int a) { return probs[idx(i, x, a)]; }

    std::size_t idx(int i, int x, int a) const {
        return (static_cast<std::size_t>(i) * num_contexts + x) * num_actions + a;
    }

    std::span<const double> row(int i, int x) const {
        return {probs.data() + idx(i, x, 0), static_cast<std::size_t>(num_actions)};
    }
    std::span<double> row(int i, int x) {
        return {probs.data() + idx(i, x, 0), static_cast<std::size_t>(num_actions)};
    }

    void set_row(int i, int x, std::span<const double> r);
    bool valid(double tol = 1e-9) const;
};

// Callback form used where a full Policy is never materialized: returns
// the action distribution of (group, context id).
using PolicyRowFn = std::function<ActionDist(int group, int context)>;

// omega(i,a) = sum_x mu(i,x) pi(i,x,a). Rows of the result sum to 1 for
// every active group when pi is a valid policy.
std::vector<double> group_action_marginal(const Policy& p, const Target& t);
std::vector<double> group_action_marginal(const PolicyRowFn& row, const TrialTarget& t,
                                          int num_actions);

// max over active group pairs and actions of |omega(i,a) - omega(i',a)|.
// Zero (up to float noise) exactly when the policy treats all groups
// identically under the target.
double parity_violation(const Policy& p, const Target& t);
double parity_violation(const PolicyRowFn& row, const TrialTarget& t, int num_actions);

// Violation computed from a precomputed M x K marginal table; groups
// listed in `active` participate.
double parity_violation_from_marginals(std::span<const double> omega, int num_actions,
                                       std::span<const int> active);

} // namespace few
