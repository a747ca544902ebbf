#pragma once

#include "few/base_learner.hpp"
#include "few/engine.hpp"

namespace few {

// Unfair baseline: one bandit learner per group, importance-weighted loss
// estimates, no parity processing. Only the received (group, context)
// pair is updated each trial.
class Exp4PerGroup {
public:
    Exp4PerGroup(Dims dims, double exploration_rate,
                 std::vector<std::unique_ptr<BaseLearner>> learners);

    static double default_exploration(const Dims& dims);

    // (1 - gamma_e) * Query + gamma_e / K.
    ActionDist policy_row(int group, int context) const;

    int act(const Instance& inst, Rng& rng);
    void feedback(double observed_loss);

    const Dims& dims() const { return dims_; }
    long trials_completed() const { return trials_; }

private:
    Dims dims_;
    double exploration_ = 0.0;
    std::vector<std::unique_ptr<BaseLearner>> learners_;
    bool armed_ = false;
    Instance inst_;
    int action_ = -1;
    double acted_prob_ = 0.0;
    long trials_ = 0;
};

} // namespace few
