#include "few/explicit_hedge.hpp"

#include <cmath>

namespace few {

std::uint64_t ExplicitHedge::expert_count(int num_contexts, int num_actions) {
    std::uint64_t n = 1;
    for (int x = 0; x < num_contexts; ++x) {
        if (n > kMaxExperts) return n;
        n *= static_cast<std::uint64_t>(num_actions);
    }
    return n;
}

bool ExplicitHedge::feasible(int num_contexts, int num_actions) {
    return expert_count(num_contexts, num_actions) <= kMaxExperts;
}

ExplicitHedge::ExplicitHedge(int num_contexts, int num_actions, HedgeConfig cfg)
    : N_(num_contexts), K_(num_actions), eta_(cfg.learning_rate) {
    cfg.validate();
    if (N_ <= 0 || K_ <= 0)
        throw std::invalid_argument("ExplicitHedge: dimensions must be positive");
    if (!feasible(N_, K_))
        throw std::invalid_argument("ExplicitHedge: K^N exceeds the oracle budget");
    theta_.assign(expert_count(N_, K_), 1.0 / static_cast<double>(expert_count(N_, K_)));
}

ExplicitHedge::ExplicitHedge(int num_contexts, int num_actions, HedgeConfig cfg,
                             std::span<const double> prior)
    : ExplicitHedge(num_contexts, num_actions, cfg) {
    if (prior.size() != theta_.size())
        throw std::invalid_argument("ExplicitHedge: prior size mismatch");
    double sum = 0.0;
    for (double p : prior) {
        if (!(p >= 0.0)) throw std::invalid_argument("ExplicitHedge: negative prior entry");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("ExplicitHedge: prior does not sum to 1");
    theta_.assign(prior.begin(), prior.end());
}

void ExplicitHedge::check_context(int x) const {
    if (x < 0 || x >= N_) throw std::out_of_range("ExplicitHedge: context out of range");
}

int ExplicitHedge::expert_action(std::uint64_t expert, int context) const {
    std::uint64_t div = 1;
    for (int x = 0; x < context; ++x) div *= static_cast<std::uint64_t>(K_);
    return static_cast<int>((expert / div) % static_cast<std::uint64_t>(K_));
}

ActionDist ExplicitHedge::query(int context) const {
    check_context(context);
    ActionDist p(K_, 0.0);
    for (std::uint64_t e = 0; e < theta_.size(); ++e)
        p[expert_action(e, context)] += theta_[e];
    return p;
}

void ExplicitHedge::update(int context, std::span<const double> gradient) {
    check_context(context);
    if (static_cast<int>(gradient.size()) != K_)
        throw std::invalid_argument("ExplicitHedge: gradient length mismatch");
    require_finite(gradient, "ExplicitHedge::update");
    double sum = 0.0;
    for (std::uint64_t e = 0; e < theta_.size(); ++e) {
        theta_[e] *= std::exp(-eta_ * gradient[expert_action(e, context)]);
        sum += theta_[e];
    }
    for (double& v : theta_) v /= sum;
}

std::unique_ptr<BaseLearner> ExplicitHedge::clone() const {
    return std::make_unique<ExplicitHedge>(*this);
}

LearnerSnapshot ExplicitHedge::snapshot() const {
    LearnerSnapshot s;
    s.kind = "explicit";
    s.dims = {N_, K_};
    s.weights = theta_;
    return s;
}

double expert_gradient(const std::vector<std::pair<int, std::vector<double>>>& gradient_rows,
                       std::uint64_t expert, int num_actions) {
    double nu = 0.0;
    for (const auto& [x, g] : gradient_rows) {
        std::uint64_t div = 1;
        for (int j = 0; j < x; ++j) div *= static_cast<std::uint64_t>(num_actions);
        nu += g[static_cast<int>((expert / div) % static_cast<std::uint64_t>(num_actions))];
    }
    return nu;
}

} // namespace few
