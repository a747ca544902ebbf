#include "few/exp4.hpp"

#include <cmath>

namespace few {

Exp4PerGroup::Exp4PerGroup(Dims dims, double exploration_rate,
                           std::vector<std::unique_ptr<BaseLearner>> learners)
    : dims_(dims), exploration_(exploration_rate), learners_(std::move(learners)) {
    dims_.validate();
    if (!(exploration_ >= 0.0 && exploration_ <= 1.0))
        throw std::invalid_argument("Exp4PerGroup: exploration rate must lie in [0,1]");
    if (static_cast<int>(learners_.size()) != dims_.num_groups)
        throw std::invalid_argument("Exp4PerGroup: need one learner per group");
}

double Exp4PerGroup::default_exploration(const Dims& dims) {
    double k = dims.num_actions;
    return std::min(1.0, std::sqrt(k * std::log(k) / static_cast<double>(dims.horizon)));
}

ActionDist Exp4PerGroup::policy_row(int group, int context) const {
    ActionDist q = learners_[group]->query(context);
    for (double& v : q)
        v = (1.0 - exploration_) * v + exploration_ / dims_.num_actions;
    return q;
}

int Exp4PerGroup::act(const Instance& inst, Rng& rng) {
    if (inst.group < 0 || inst.group >= dims_.num_groups || inst.context < 0 ||
        inst.context >= dims_.num_contexts)
        throw std::out_of_range("Exp4PerGroup::act: instance out of range");
    ActionDist row = policy_row(inst.group, inst.context);
    inst_ = inst;
    action_ = rng.sample_discrete(row);
    acted_prob_ = row[action_];
    armed_ = true;
    return action_;
}

void Exp4PerGroup::feedback(double observed_loss) {
    if (!armed_) throw ProtocolViolation("Exp4PerGroup::feedback: act() has not run");
    if (!(observed_loss >= 0.0 && observed_loss <= 1.0))
        throw std::invalid_argument("Exp4PerGroup::feedback: loss outside [0,1]");
    std::vector<double> estimate(dims_.num_actions, 0.0);
    estimate[action_] = observed_loss / acted_prob_;
    learners_[inst_.group]->update(inst_.context, estimate);
    armed_ = false;
    ++trials_;
}

} // namespace few
