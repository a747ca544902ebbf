#include "few/tabular_hedge.hpp"

#include <algorithm>
#include <cmath>

namespace few {

TabularHedge::TabularHedge(int num_contexts, int num_actions, HedgeConfig cfg)
    : N_(num_contexts), K_(num_actions), eta_(cfg.learning_rate),
      logw_(static_cast<std::size_t>(num_contexts) * num_actions, 0.0) {
    cfg.validate();
    if (N_ <= 0 || K_ <= 0)
        throw std::invalid_argument("TabularHedge: dimensions must be positive");
}

TabularHedge::TabularHedge(int num_contexts, int num_actions, HedgeConfig cfg,
                           std::span<const double> prior)
    : TabularHedge(num_contexts, num_actions, cfg) {
    if (prior.size() != logw_.size())
        throw std::invalid_argument("TabularHedge: prior shape mismatch");
    for (std::size_t j = 0; j < prior.size(); ++j) {
        if (!(prior[j] > 0.0))
            throw std::invalid_argument("TabularHedge: prior must be strictly positive");
        logw_[j] = std::log(prior[j]);
    }
    for (int x = 0; x < N_; ++x) normalize_row(x);
}

void TabularHedge::check_context(int x) const {
    if (x < 0 || x >= N_) throw std::out_of_range("TabularHedge: context out of range");
}

ActionDist TabularHedge::row_probs(int x) const {
    const double* row = logw_.data() + static_cast<std::size_t>(x) * K_;
    double mx = *std::max_element(row, row + K_);
    ActionDist p(K_);
    double sum = 0.0;
    for (int a = 0; a < K_; ++a) {
        p[a] = std::exp(row[a] - mx);
        sum += p[a];
    }
    for (int a = 0; a < K_; ++a) p[a] /= sum;
    return p;
}

void TabularHedge::normalize_row(int x) {
    double* row = logw_.data() + static_cast<std::size_t>(x) * K_;
    double mx = *std::max_element(row, row + K_);
    for (int a = 0; a < K_; ++a) row[a] -= mx;
}

ActionDist TabularHedge::query(int context) const {
    check_context(context);
    return row_probs(context);
}

void TabularHedge::update(int context, std::span<const double> gradient) {
    check_context(context);
    if (static_cast<int>(gradient.size()) != K_)
        throw std::invalid_argument("TabularHedge: gradient length mismatch");
    require_finite(gradient, "TabularHedge::update");
    double* row = logw_.data() + static_cast<std::size_t>(context) * K_;
    for (int a = 0; a < K_; ++a) row[a] -= eta_ * gradient[a];
    normalize_row(context);
}

std::unique_ptr<BaseLearner> TabularHedge::clone() const {
    return std::make_unique<TabularHedge>(*this);
}

LearnerSnapshot TabularHedge::snapshot() const {
    LearnerSnapshot s;
    s.kind = "tabular";
    s.dims = {N_, K_};
    s.weights.reserve(logw_.size());
    for (int x = 0; x < N_; ++x) {
        ActionDist p = row_probs(x);
        s.weights.insert(s.weights.end(), p.begin(), p.end());
    }
    return s;
}

TabularHedge TabularHedge::from_snapshot(const LearnerSnapshot& s, HedgeConfig cfg) {
    if (s.kind != "tabular" || s.dims.size() != 2)
        throw std::invalid_argument("TabularHedge::from_snapshot: wrong kind");
    return TabularHedge(static_cast<int>(s.dims[0]), static_cast<int>(s.dims[1]), cfg,
                        std::span<const double>(s.weights));
}

} // namespace few
