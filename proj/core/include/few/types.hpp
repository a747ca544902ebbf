#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace few {

// Problem dimensions. Groups, contexts and actions are dense integer
// indices; any string labelling happens at the CLI boundary.
struct Dims {
    int num_groups = 0;
    int num_contexts = 0;
    int num_actions = 0;
    long horizon = 0;

    void validate() const;
    bool operator==(const Dims&) const = default;
};

// Distribution over the K actions.
using ActionDist = std::vector<double>;

// Loss assigned by the environment to each action; entries in [0,1].
// Pseudo-gradients are plain real vectors and are NOT LossVectors.
using LossVector = std::vector<double>;

struct Instance {
    int group = 0;
    int context = 0;
    bool operator==(const Instance&) const = default;
};

inline constexpr double kDistTol = 1e-12;

bool is_action_dist(std::span<const double> p, double tol = kDistTol);
bool is_loss_vector(std::span<const double> ell);

void require_action_dist(std::span<const double> p, const std::string& what);
void require_loss_vector(std::span<const double> ell, const std::string& what);
void require_finite(std::span<const double> v, const std::string& what);

} // namespace few
