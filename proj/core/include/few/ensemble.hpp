#pragma once

#include "few/engine.hpp"

#include <functional>

namespace few {

// Builds the per-group learner set for a copy running at the given
// base-algorithm rate.
using LearnerSetFactory =
    std::function<std::vector<std::unique_ptr<BaseLearner>>(double hedge_rate)>;

struct EnsembleConfig {
    Dims dims;
    int copies = 0;           // default: ceil(log2 T) + 1
    double eta_min = 0.0;     // default: 1 / sqrt(K T)
    double master_rate = -1.0; // default: sqrt(8 ln J / T); 0 freezes the master
    std::vector<double> initial_master_weights; // default uniform

    void resolve(); // fills defaults in place
};

// Full-information ensemble: O(log T) copies with exponentially spaced
// tuning parameters, combined by a master Hedge over the copies' expected
// losses. Each copy is fair per trial, so any mixture of them is fair for
// the shared target.
class DoublingEnsemble {
public:
    DoublingEnsemble(EnsembleConfig cfg, const LearnerSetFactory& factory,
                     SupportPolicy support_policy = SupportPolicy::strict);

    // One full-information trial. Returns the combined action distribution
    // at the received instance (before the master update).
    ActionDist step(const TrialTarget& target, const Instance& inst,
                    std::span<const double> loss_vector);

    // step() split in two so callers can read combined rows mid-trial
    // (the online-to-batch averaging needs the whole support).
    void begin(const TrialTarget& target);
    void finish(const Instance& inst, std::span<const double> loss_vector);

    // Combined processed row at (group, context); valid while a trial is
    // open, i.e. between begin() and finish().
    ActionDist combined_row(int group, int context) const;

    const std::vector<double>& master_weights() const { return weights_; }
    int copies() const { return static_cast<int>(engines_.size()); }
    double copy_eta(int j) const { return engines_[j].config().eta; }
    const FewEngine& copy(int j) const { return engines_[j]; }
    long trials_completed() const { return trials_; }

private:
    EnsembleConfig cfg_;
    std::vector<FewEngine> engines_;
    std::vector<double> weights_;
    long trials_ = 0;
    bool open_ = false;
};

// Streaming average of per-trial policies over the (fixed-target) support
// entries; rows never touched stay uniform in the materialized policy.
class AveragedPolicy {
public:
    AveragedPolicy(int num_groups, int num_contexts, int num_actions);

    void add(const PolicyRowFn& rows, const TrialTarget& support);
    Policy average() const;
    long trials() const { return trials_; }

private:
    Policy sum_;
    std::vector<bool> touched_;
    long trials_ = 0;
};

struct LabeledExample {
    Instance inst;
    LossVector loss;
};

// A finite-support distribution over (group, context, loss vector).
struct WeightedExample {
    Instance inst;
    LossVector loss;
    double prob = 0.0;
};

// Runs the full-information ensemble once over the dataset with the fixed
// target and returns the average of the per-trial combined policies. The
// result has statistical parity under `target` up to float noise.
Policy train_fair_classifier(std::span<const LabeledExample> dataset, const Target& target,
                             const EnsembleConfig& cfg, const LearnerSetFactory& factory);

// Exact expected loss difference of `policy` against `comparator` under a
// finite-support distribution.
double generalisation_regret(const Policy& policy, const Policy& comparator,
                             std::span<const WeightedExample> dist);

// JSON tensor export: {"dims": {...}, "probs": [row-major]}.
std::string policy_to_json(const Policy& p);
Policy policy_from_json(const std::string& text);

} // namespace few
