#pragma once

#include "few/base_learner.hpp"
#include "few/target.hpp"

#include <functional>
#include <memory>

namespace few {

// Label prior along the decomposition tree: a node copies its parent's
// action with probability 1-gamma, otherwise resamples uniformly; the root
// label is uniform. Query/Update reduce to sum-product over the current
// subtree in O(depth * K) per message.
struct TreePrior {
    double switch_prob = 0.1;

    void validate() const {
        if (!(switch_prob > 0.0 && switch_prob <= 1.0))
            throw std::invalid_argument("TreePrior: switch probability must lie in (0,1]");
    }
};

enum class TreeMode { known_target, empirical };

// Integral of the true context measure over [lo,hi) for a group.
using MassOracle = std::function<double(int group, double lo, double hi)>;

// n >= 8 ln(2T) (h / eps)^2, the sample threshold under which empirical
// split proportions keep every trial's parity within 4*h*eps of the true
// measure with probability 1 - 2T exp(-2 eps^2 n).
long required_sample_size(long horizon, int height, double eps_hat);

// One group's dynamic subtree of the dyadic decomposition of [0,1):
// interval masses (known or empirical), per-node action potentials, and
// lazy belief-propagation messages. Node ids are arena indices; the root
// is node 0 covering all of [0,1).
class GroupSubtree {
public:
    GroupSubtree(int group, int num_actions, TreePrior prior, HedgeConfig hedge, int depth_cap,
                 TreeMode mode, long sample_threshold, MassOracle oracle);

    int root() const { return 0; }
    int num_actions() const { return K_; }
    int num_nodes() const { return static_cast<int>(nodes_.size()); }
    bool is_leaf(int node) const { return nodes_[node].left < 0; }
    int depth(int node) const { return nodes_[node].depth; }
    std::pair<double, double> interval(int node) const;
    double node_mass(int node) const { return nodes_[node].mass; }
    long visit_count(int node) const { return nodes_[node].count; }
    double proportion(int node) const { return nodes_[node].proportion; }
    int parent(int node) const { return nodes_[node].parent; }
    TreeMode mode() const { return mode_; }

    // The unique current leaf whose interval contains x.
    int locate_leaf(double x) const;
    std::vector<int> leaves() const;
    // Distribution of the (known or empirical) measure over current leaves.
    std::vector<std::pair<int, double>> leaf_target() const;

    ActionDist bp_query(int node) const;
    void bp_update(int leaf, std::span<const double> gradient);

    // Adds the children of `leaf`. Returns false at the depth cap and, in
    // empirical mode, while the visit count is below the sample threshold.
    // Growing a non-leaf is an error.
    bool grow(int leaf);

    // Empirical mode: counts the observation at its leaf and grows the
    // leaf once the threshold is met. Returns the located leaf.
    int record(double x);

    LearnerSnapshot snapshot() const;

private:
    struct Node {
        double lo = 0.0, hi = 1.0;
        int depth = 0;
        int parent = -1;
        int left = -1, right = -1;
        double mass = 1.0;
        double proportion = 1.0; // share of parent mass
        long count = 0;          // empirical visits since becoming a leaf
        long left_tally = 0;
        std::vector<double> log_potential;
        mutable bool up_valid = false;
        mutable std::vector<double> up_msg;
    };

    ActionDist potential_probs(int node) const;
    ActionDist node_belief(int node) const; // potential times child messages
    const std::vector<double>& up_message(int node) const;
    void invalidate_to_root(int node);
    ActionDist edge_propagate(const ActionDist& w) const;
    void check_node(int node) const;

    int group_ = 0;
    int K_ = 0;
    TreePrior prior_;
    double eta_ = 0.0;
    int depth_cap_ = 20;
    TreeMode mode_ = TreeMode::known_target;
    long sample_threshold_ = 0;
    MassOracle oracle_;
    std::vector<Node> nodes_;
};

// BaseLearner facade over a shared per-group subtree; context ids are the
// subtree's node ids.
class TreeLearner final : public BaseLearner {
public:
    explicit TreeLearner(std::shared_ptr<GroupSubtree> subtree) : subtree_(std::move(subtree)) {}

    ActionDist query(int context) const override { return subtree_->bp_query(context); }
    void update(int context, std::span<const double> gradient) override {
        subtree_->bp_update(context, gradient);
    }
    int num_actions() const override;
    std::unique_ptr<BaseLearner> clone() const override;
    LearnerSnapshot snapshot() const override { return subtree_->snapshot(); }

    GroupSubtree& subtree() { return *subtree_; }

private:
    std::shared_ptr<GroupSubtree> subtree_;
};

struct TreeConfig {
    TreePrior prior;
    int depth_cap = 20;
    TreeMode mode = TreeMode::known_target;
    long sample_threshold = 0; // empirical mode
};

// Per-group subtrees plus the per-trial plumbing that turns them into a
// target over leaf contexts for the engine.
class TreeReduction {
public:
    TreeReduction(int num_groups, int num_actions, TreeConfig cfg, HedgeConfig hedge,
                  MassOracle oracle);

    std::vector<std::unique_ptr<BaseLearner>> make_learners();

    TrialTarget trial_target() const;
    int locate(int group, double x) const { return trees_[group]->locate_leaf(x); }

    // Called once per trial after the engine update: known-target mode
    // grows the received leaf; empirical mode records and maybe grows.
    void end_trial(int group, double x);

    GroupSubtree& subtree(int group) { return *trees_[group]; }
    const GroupSubtree& subtree(int group) const { return *trees_[group]; }
    int num_groups() const { return static_cast<int>(trees_.size()); }

private:
    std::vector<std::shared_ptr<GroupSubtree>> trees_;
};

} // namespace few
