#include "few/fixed_share.hpp"

#include <cmath>

namespace few {

FixedShare::FixedShare(int num_contexts, int num_actions, HedgeConfig cfg, double share_rate)
    : TabularHedge(num_contexts, num_actions, cfg), alpha_(share_rate) {
    check_share_rate();
}

FixedShare::FixedShare(int num_contexts, int num_actions, HedgeConfig cfg, double share_rate,
                       std::span<const double> prior)
    : TabularHedge(num_contexts, num_actions, cfg, prior), alpha_(share_rate) {
    check_share_rate();
}

void FixedShare::check_share_rate() const {
    if (!(alpha_ >= 0.0 && alpha_ <= 1.0))
        throw std::invalid_argument("FixedShare: share rate must lie in [0,1]");
}

void FixedShare::update(int context, std::span<const double> gradient) {
    TabularHedge::update(context, gradient);
    if (alpha_ == 0.0) return;
    ActionDist p = row_probs(context);
    double* row = logw_.data() + static_cast<std::size_t>(context) * K_;
    for (int a = 0; a < K_; ++a)
        row[a] = std::log((1.0 - alpha_) * p[a] + alpha_ / K_);
    normalize_row(context);
}

std::unique_ptr<BaseLearner> FixedShare::clone() const {
    return std::make_unique<FixedShare>(*this);
}

LearnerSnapshot FixedShare::snapshot() const {
    LearnerSnapshot s = TabularHedge::snapshot();
    s.kind = "fixedshare";
    return s;
}

FixedShare FixedShare::from_snapshot(const LearnerSnapshot& s, HedgeConfig cfg,
                                     double share_rate) {
    if (s.kind != "fixedshare" || s.dims.size() != 2)
        throw std::invalid_argument("FixedShare::from_snapshot: wrong kind");
    return FixedShare(static_cast<int>(s.dims[0]), static_cast<int>(s.dims[1]), cfg, share_rate,
                      std::span<const double>(s.weights));
}

} // namespace few
