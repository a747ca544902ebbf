#include "few/policy.hpp"

#include <cmath>
#include <numeric>

namespace few {

Policy Policy::uniform(int groups, int contexts, int actions) {
    return Policy(groups, contexts, actions, 1.0 / actions);
}

void Policy::set_row(int i, int x, std::span<const double> r) {
    if (static_cast<int>(r.size()) != num_actions)
        throw std::invalid_argument("Policy::set_row: wrong row length");
    std::copy(r.begin(), r.end(), probs.begin() + static_cast<std::ptrdiff_t>(idx(i, x, 0)));
}

bool Policy::valid(double tol) const {
    for (int i = 0; i < num_groups; ++i)
        for (int x = 0; x < num_contexts; ++x) {
            double sum = 0.0;
            for (int a = 0; a < num_actions; ++a) {
                double v = (*this)(i, x, a);
                if (!(v >= -tol && v <= 1.0 + tol)) return false;
                sum += v;
            }
            if (std::abs(sum - 1.0) > tol) return false;
        }
    return true;
}

std::vector<double> group_action_marginal(const Policy& p, const Target& t) {
    if (p.num_groups != t.num_groups || p.num_contexts != t.num_contexts)
        throw std::invalid_argument("group_action_marginal: dimension mismatch");
    std::vector<double> omega(static_cast<std::size_t>(p.num_groups) * p.num_actions, 0.0);
    for (int i = 0; i < p.num_groups; ++i)
        for (int x = 0; x < p.num_contexts; ++x) {
            double m = t(i, x);
            if (m == 0.0) continue;
            for (int a = 0; a < p.num_actions; ++a)
                omega[static_cast<std::size_t>(i) * p.num_actions + a] += m * p(i, x, a);
        }
    return omega;
}

std::vector<double> group_action_marginal(const PolicyRowFn& row, const TrialTarget& t,
                                          int num_actions) {
    const int M = t.num_groups();
    std::vector<double> omega(static_cast<std::size_t>(M) * num_actions, 0.0);
    for (int i = 0; i < M; ++i)
        for (const auto& [x, m] : t.rows[i]) {
            ActionDist r = row(i, x);
            for (int a = 0; a < num_actions; ++a)
                omega[static_cast<std::size_t>(i) * num_actions + a] += m * r[a];
        }
    return omega;
}

double parity_violation_from_marginals(std::span<const double> omega, int num_actions,
                                       std::span<const int> active) {
    double worst = 0.0;
    for (int a = 0; a < num_actions; ++a) {
        double lo = 0.0, hi = 0.0;
        bool first = true;
        for (int i : active) {
            double v = omega[static_cast<std::size_t>(i) * num_actions + a];
            if (first) { lo = hi = v; first = false; }
            else { lo = std::min(lo, v); hi = std::max(hi, v); }
        }
        worst = std::max(worst, hi - lo);
    }
    return worst;
}

double parity_violation(const Policy& p, const Target& t) {
    auto omega = group_action_marginal(p, t);
    std::vector<int> active;
    for (int i = 0; i < t.num_groups; ++i) {
        bool any = false;
        for (int x = 0; x < t.num_contexts; ++x)
            if (t(i, x) != 0.0) { any = true; break; }
        if (any) active.push_back(i);
    }
    return parity_violation_from_marginals(omega, p.num_actions, active);
}

double parity_violation(const PolicyRowFn& row, const TrialTarget& t, int num_actions) {
    auto omega = group_action_marginal(row, t, num_actions);
    std::vector<int> active;
    for (int i = 0; i < t.num_groups(); ++i)
        if (t.active(i)) active.push_back(i);
    return parity_violation_from_marginals(omega, num_actions, active);
}

} // namespace few
