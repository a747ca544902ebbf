#pragma once

#include "few/base_learner.hpp"

#include <cstdint>
#include <utility>

namespace few {

// Brute-force Hedge over the full hypothesis space A^X, kept as a test
// oracle: every incremental implementation must produce the marginals this
// one does. Refuses instances with more than kMaxExperts experts.
class ExplicitHedge final : public BaseLearner {
public:
    static constexpr std::uint64_t kMaxExperts = 100000;

    ExplicitHedge(int num_contexts, int num_actions, HedgeConfig cfg);
    // Custom prior over all K^N experts, indexed by base-K encoding:
    // expert e maps context x to digit (e / K^x) mod K.
    ExplicitHedge(int num_contexts, int num_actions, HedgeConfig cfg,
                  std::span<const double> prior);

    static bool feasible(int num_contexts, int num_actions);
    static std::uint64_t expert_count(int num_contexts, int num_actions);

    ActionDist query(int context) const override;
    void update(int context, std::span<const double> gradient) override;

    int num_actions() const override { return K_; }
    int num_contexts() const { return N_; }

    const std::vector<double>& theta() const { return theta_; }
    int expert_action(std::uint64_t expert, int context) const;

    std::unique_ptr<BaseLearner> clone() const override;
    LearnerSnapshot snapshot() const override;

private:
    void check_context(int x) const;

    int N_ = 0;
    int K_ = 0;
    double eta_ = 0.0;
    std::vector<double> theta_;
};

// nu(e) = sum_x lambda(x, e(x)) for one group's sparse gradient rows.
// Off-support rows are zero and may simply be omitted.
double expert_gradient(const std::vector<std::pair<int, std::vector<double>>>& gradient_rows,
                       std::uint64_t expert, int num_actions);

} // namespace few
