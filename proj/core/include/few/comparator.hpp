#pragma once

#include "few/environment.hpp"
#include "few/policy.hpp"

namespace few {

// A policy (or piecewise-constant policy sequence) claimed fair for a run.
// Fairness is verified against every target it is evaluated on.
struct Comparator {
    std::vector<long> starts; // starts[0] == 1, ascending
    std::vector<Policy> policies;

    static Comparator single(Policy p);
    static Comparator piecewise(std::vector<long> starts, std::vector<Policy> policies);

    const Policy& at(long trial) const;

    // Throws when any segment violates parity under a target it covers.
    void check_fair(std::span<const TrialTarget> targets, double tol = 1e-9) const;
    double worst_violation(std::span<const TrialTarget> targets) const;
};

struct FairLpOptions {
    long iterations = 4000;
    double step_scale = 1.0;
    int projection_sweeps = 64;   // Dykstra sweeps per projection
    long cert_samples = 1000000;  // random fair policies for certification
    std::uint64_t cert_seed = 17;
};

struct FairLpResult {
    Policy policy;
    double objective = 0.0;
    double parity = 0.0;           // violation of the returned policy
    double cert_best_random = 0.0; // best certificate objective observed
    long iterations = 0;
};

// min_{pi in F(mu)} sum_{i,x,a} cost(i,x,a) pi(i,x,a) by projected
// subgradient descent; the projection onto (product of simplices) cap
// (parity subspace) runs Dykstra sweeps with a closed-form affine step.
FairLpResult solve_fair_lp(const std::vector<double>& cost, const Target& mu,
                           int num_actions, const FairLpOptions& opts = {});

// Comparator for a constant-target script: cost(i,x,a) accumulates the
// script's losses at each visited instance. Throws if the script's target
// varies across trials.
FairLpResult best_fair_comparator(const std::vector<TrialRecord>& script, const Dims& dims,
                                  const FairLpOptions& opts = {});

// Euclidean projection of v onto the probability simplex.
void project_to_simplex(std::span<double> v);

} // namespace few
