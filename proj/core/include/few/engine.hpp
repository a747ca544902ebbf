#pragma once

#include "few/base_learner.hpp"
#include "few/policy.hpp"
#include "few/rng.hpp"
#include "few/target.hpp"

#include <memory>

namespace few {

enum class FeedbackMode { bandit, full_information };
enum class SupportPolicy { strict, lenient };

// Raised when the trial protocol is broken (out-of-order calls, instance
// outside the support in strict mode, malformed feedback).
class ProtocolViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct FewConfig {
    Dims dims;
    double eta = 1.0;
    FeedbackMode mode = FeedbackMode::bandit;
    SupportPolicy support_policy = SupportPolicy::strict;

    // eta larger than sqrt(T/K) is clamped, not rejected.
    double clamped_eta() const;
    bool eta_clamped() const;
    // Base-algorithm rate: clamped eta / sqrt(K*T).
    double hedge_rate() const;

    void validate() const;
};

using GradientRows = std::vector<std::pair<int, std::vector<double>>>;

struct PseudoGradient {
    std::vector<GradientRows> per_group; // aligned with group index
    bool loss_term_active = false;       // beta_t <= 1
};

// Everything computed for the current trial: raw rows, marginals,
// deficits, budget, push/pull groups, and the received instance once it
// arrives.
struct TrialState {
    long trial = 0;
    TrialTarget target;
    std::vector<std::vector<double>> xi; // per group: |support| x K, row-major
    std::vector<double> omega;           // M x K
    std::vector<double> delta;           // M x K, zero rows for inactive groups
    double beta = 0.0;
    std::vector<int> kappa_max;          // per action; -1 when no group is active
    std::vector<int> kappa_min;
    std::vector<int> active;

    bool have_instance = false;
    Instance instance;
    bool have_action = false;
    int action = -1;
    ActionDist acted_row;
    double acted_prob = 0.0;

    double xi_at(int group, int support_pos, int a, int K) const {
        return xi[group][static_cast<std::size_t>(support_pos) * K + a];
    }
};

// The meta-algorithm: one base-learner instance per group; each trial the
// raw per-group rows are processed into a policy with exact statistical
// parity under the trial target, an action is sampled, and the feedback is
// turned into per-context gradient rows dispatched back to the learners.
class FewEngine {
public:
    FewEngine(FewConfig cfg, std::vector<std::unique_ptr<BaseLearner>> learners);

    const TrialState& begin_trial(const TrialTarget& target);
    const TrialState& begin_trial(const Target& target);

    // Processed action distribution at (group, context). Contexts outside
    // the support are served via a fresh query; allowed because Query has
    // no side effects.
    ActionDist policy_row(int group, int context) const;
    // The pre-mixing sub-stochastic row; exposed for verification.
    std::vector<double> psi_row(int group, int context) const;

    void observe(const Instance& inst);
    int act(const Instance& inst, Rng& rng);

    PseudoGradient feedback_bandit(double observed_loss);
    PseudoGradient feedback_full(std::span<const double> loss_vector);

    // Gradient construction without dispatch, for enumeration checks: the
    // pseudo-gradient as if `action` had been drawn (importance-weighted
    // by the processed row), and the full-information gradient.
    PseudoGradient bandit_gradient(int action, double observed_loss) const;
    PseudoGradient full_gradient(std::span<const double> loss_vector) const;
    // Dispatches the gradient rows to the per-group learners, closing the
    // trial.
    void apply(const PseudoGradient& gradient);

    const TrialState& trial() const;
    bool trial_open() const { return trial_open_; }
    const FewConfig& config() const { return cfg_; }
    BaseLearner& learner(int group) { return *learners_[group]; }
    const BaseLearner& learner(int group) const { return *learners_[group]; }
    long trials_completed() const { return trials_completed_; }
    bool denominator_floor_hit() const { return floor_hit_; }

    // Parity of the processed policy under the trial target, computed from
    // the definition (materialized rows, mass-weighted sums).
    double trial_parity() const;

private:
    ActionDist raw_row(int group, int context) const;
    int support_pos(int group, int context) const;
    PseudoGradient build_gradient(const double* loss_vector, int action,
                                  double importance_weighted) const;

    FewConfig cfg_;
    std::vector<std::unique_ptr<BaseLearner>> learners_;
    TrialState state_;
    bool trial_open_ = false;
    long trials_completed_ = 0;
    bool floor_hit_ = false;
};

// Convenience: one clone of the prototype learner per group.
std::vector<std::unique_ptr<BaseLearner>> per_group_learners(const BaseLearner& prototype,
                                                             int num_groups);

} // namespace few
