#pragma once

#include "few/tabular_hedge.hpp"

namespace few {

// Per-context Hedge with a share step: after the exponential reweighting
// of a row, mix it toward uniform, w <- (1-alpha) w + alpha/K. The mixing
// keeps a weight floor under every action so the learner can re-adapt
// after the loss sequence shifts.
class FixedShare final : public TabularHedge {
public:
    FixedShare(int num_contexts, int num_actions, HedgeConfig cfg, double share_rate);
    FixedShare(int num_contexts, int num_actions, HedgeConfig cfg, double share_rate,
               std::span<const double> prior);

    void update(int context, std::span<const double> gradient) override;

    double share_rate() const { return alpha_; }

    std::unique_ptr<BaseLearner> clone() const override;
    LearnerSnapshot snapshot() const override;
    static FixedShare from_snapshot(const LearnerSnapshot& s, HedgeConfig cfg,
                                    double share_rate);

private:
    void check_share_rate() const;
    double alpha_ = 0.0;
};

} // namespace few
