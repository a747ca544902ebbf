#pragma once

#include "few/base_learner.hpp"

namespace few {

// Hedge run independently per context: one weight row per context,
// exponentially reweighted on update. Weights live in the log domain with
// max-subtraction at normalization; pseudo-gradient magnitudes can reach
// 1/pi and would underflow plain products.
class TabularHedge : public BaseLearner {
public:
    TabularHedge(int num_contexts, int num_actions, HedgeConfig cfg);
    // Prior is a row-stochastic N x K matrix, strictly positive.
    TabularHedge(int num_contexts, int num_actions, HedgeConfig cfg,
                 std::span<const double> prior);

    ActionDist query(int context) const override;
    void update(int context, std::span<const double> gradient) override;

    int num_actions() const override { return K_; }
    int num_contexts() const { return N_; }
    double learning_rate() const { return eta_; }

    std::unique_ptr<BaseLearner> clone() const override;
    LearnerSnapshot snapshot() const override;
    // Snapshots carry state only; the learning rate comes from config.
    static TabularHedge from_snapshot(const LearnerSnapshot& s, HedgeConfig cfg);

protected:
    void check_context(int x) const;
    ActionDist row_probs(int x) const;
    void normalize_row(int x);

    int N_ = 0;
    int K_ = 0;
    double eta_ = 0.0;
    std::vector<double> logw_; // row-major N x K
};

} // namespace few
