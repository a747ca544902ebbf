#include "few/engine.hpp"

#include <algorithm>
#include <cmath>

namespace few {

double FewConfig::clamped_eta() const {
    double cap = std::sqrt(static_cast<double>(dims.horizon) / dims.num_actions);
    return std::min(eta, cap);
}

bool FewConfig::eta_clamped() const { return eta > clamped_eta(); }

double FewConfig::hedge_rate() const {
    return clamped_eta() / std::sqrt(static_cast<double>(dims.num_actions) * dims.horizon);
}

void FewConfig::validate() const {
    dims.validate();
    if (!(eta > 0.0)) throw std::invalid_argument("FewConfig: eta must be positive");
}

FewEngine::FewEngine(FewConfig cfg, std::vector<std::unique_ptr<BaseLearner>> learners)
    : cfg_(cfg), learners_(std::move(learners)) {
    cfg_.validate();
    if (static_cast<int>(learners_.size()) != cfg_.dims.num_groups)
        throw std::invalid_argument("FewEngine: need one base learner per group");
    for (const auto& l : learners_) {
        if (!l) throw std::invalid_argument("FewEngine: null learner");
        if (l->num_actions() != cfg_.dims.num_actions)
            throw std::invalid_argument("FewEngine: learner action count mismatch");
    }
}

const TrialState& FewEngine::begin_trial(const TrialTarget& target) {
    if (target.num_groups() != cfg_.dims.num_groups)
        throw std::invalid_argument("begin_trial: target group count mismatch");
    target.validate();

    const int M = cfg_.dims.num_groups;
    const int K = cfg_.dims.num_actions;

    state_ = TrialState{};
    state_.trial = trials_completed_ + 1;
    state_.target = target;
    state_.xi.assign(M, {});
    state_.omega.assign(static_cast<std::size_t>(M) * K, 0.0);
    state_.delta.assign(static_cast<std::size_t>(M) * K, 0.0);
    state_.kappa_max.assign(K, -1);
    state_.kappa_min.assign(K, -1);

    for (int i = 0; i < M; ++i) {
        const auto& row = target.rows[i];
        if (row.empty()) continue;
        state_.active.push_back(i);
        auto& xi = state_.xi[i];
        xi.resize(row.size() * K);
        for (std::size_t s = 0; s < row.size(); ++s) {
            ActionDist q = learners_[i]->query(row[s].first);
            require_action_dist(q, "begin_trial: base learner query");
            for (int a = 0; a < K; ++a) {
                xi[s * K + a] = q[a];
                state_.omega[static_cast<std::size_t>(i) * K + a] += row[s].second * q[a];
            }
        }
    }

    state_.beta = 0.0;
    for (int a = 0; a < K; ++a) {
        double hi = 0.0, lo = 0.0;
        int arg_hi = -1, arg_lo = -1;
        for (int i : state_.active) {
            double v = state_.omega[static_cast<std::size_t>(i) * K + a];
            if (arg_hi < 0 || v > hi) { hi = v; arg_hi = i; }
            if (arg_lo < 0 || v < lo) { lo = v; arg_lo = i; }
        }
        state_.kappa_max[a] = arg_hi;
        state_.kappa_min[a] = arg_lo;
        double worst = 0.0;
        for (int i : state_.active) {
            double d = hi - state_.omega[static_cast<std::size_t>(i) * K + a];
            state_.delta[static_cast<std::size_t>(i) * K + a] = d;
            worst = std::max(worst, d);
        }
        state_.beta += worst;
    }

    trial_open_ = true;
    return state_;
}

const TrialState& FewEngine::begin_trial(const Target& target) {
    return begin_trial(TrialTarget(target));
}

int FewEngine::support_pos(int group, int context) const {
    const auto& row = state_.target.rows[group];
    for (std::size_t s = 0; s < row.size(); ++s)
        if (row[s].first == context) return static_cast<int>(s);
    return -1;
}

ActionDist FewEngine::raw_row(int group, int context) const {
    const int K = cfg_.dims.num_actions;
    int pos = support_pos(group, context);
    if (pos >= 0) {
        ActionDist r(K);
        for (int a = 0; a < K; ++a) r[a] = state_.xi_at(group, pos, a, K);
        return r;
    }
    return learners_[group]->query(context);
}

std::vector<double> FewEngine::psi_row(int group, int context) const {
    if (!trial_open_) throw ProtocolViolation("psi_row: no open trial");
    const int K = cfg_.dims.num_actions;
    ActionDist xi = raw_row(group, context);
    std::vector<double> psi(K);
    for (int a = 0; a < K; ++a)
        psi[a] = (xi[a] + state_.delta[static_cast<std::size_t>(group) * K + a]) /
                 (1.0 + state_.beta);
    return psi;
}

ActionDist FewEngine::policy_row(int group, int context) const {
    if (!trial_open_) throw ProtocolViolation("policy_row: no open trial");
    if (group < 0 || group >= cfg_.dims.num_groups)
        throw std::out_of_range("policy_row: group out of range");
    const int K = cfg_.dims.num_actions;
    std::vector<double> psi = psi_row(group, context);
    double mass = 0.0;
    for (double v : psi) mass += v;
    ActionDist pi(K);
    double slack = (1.0 - mass) / K;
    double total = 0.0;
    for (int a = 0; a < K; ++a) {
        pi[a] = std::max(psi[a] + slack, 0.0);
        total += pi[a];
    }
    // drift here stays below 1e-12; renormalizing does not disturb the
    // parity construction beyond that
    for (int a = 0; a < K; ++a) pi[a] /= total;
    return pi;
}

void FewEngine::observe(const Instance& inst) {
    if (!trial_open_) throw ProtocolViolation("observe: no open trial");
    if (inst.group < 0 || inst.group >= cfg_.dims.num_groups)
        throw ProtocolViolation("observe: group out of range");
    if (cfg_.support_policy == SupportPolicy::strict &&
        support_pos(inst.group, inst.context) < 0)
        throw ProtocolViolation("observe: context outside the group support (strict mode)");
    state_.have_instance = true;
    state_.instance = inst;
}

int FewEngine::act(const Instance& inst, Rng& rng) {
    observe(inst);
    state_.acted_row = policy_row(inst.group, inst.context);
    state_.action = rng.sample_discrete(state_.acted_row);
    state_.acted_prob = state_.acted_row[state_.action];
    state_.have_action = true;
    return state_.action;
}

PseudoGradient FewEngine::build_gradient(const double* loss_vector, int action,
                                         double importance_weighted) const {
    const int M = cfg_.dims.num_groups;
    const int K = cfg_.dims.num_actions;
    PseudoGradient g;
    g.per_group.resize(M);
    g.loss_term_active = state_.beta <= 1.0;

    for (int i = 0; i < M; ++i) {
        const auto& row = state_.target.rows[i];
        auto& rows = g.per_group[i];
        rows.reserve(row.size() + 1);
        bool instance_covered = false;
        for (const auto& [x, m] : row) {
            std::vector<double> lam(K, 0.0);
            for (int a = 0; a < K; ++a) {
                if (state_.kappa_max[a] == i) lam[a] += m;
                if (state_.kappa_min[a] == i) lam[a] -= m;
            }
            if (g.loss_term_active && state_.instance.group == i && state_.instance.context == x) {
                instance_covered = true;
                if (loss_vector) {
                    for (int a = 0; a < K; ++a) lam[a] += loss_vector[a];
                } else {
                    lam[action] += importance_weighted;
                }
            }
            rows.emplace_back(x, std::move(lam));
        }
        // lenient mode: a received off-support instance still gets its loss
        // term (its target mass is zero, so no parity terms)
        if (g.loss_term_active && !instance_covered && state_.instance.group == i &&
            support_pos(i, state_.instance.context) < 0) {
            std::vector<double> lam(K, 0.0);
            if (loss_vector) {
                for (int a = 0; a < K; ++a) lam[a] += loss_vector[a];
            } else {
                lam[action] += importance_weighted;
            }
            rows.emplace_back(state_.instance.context, std::move(lam));
        }
    }
    return g;
}

PseudoGradient FewEngine::bandit_gradient(int action, double observed_loss) const {
    if (!trial_open_ || !state_.have_instance)
        throw ProtocolViolation("bandit_gradient: no instance observed this trial");
    if (action < 0 || action >= cfg_.dims.num_actions)
        throw std::out_of_range("bandit_gradient: action out of range");
    if (!(observed_loss >= 0.0 && observed_loss <= 1.0))
        throw std::invalid_argument("bandit_gradient: loss outside [0,1]");
    ActionDist row = policy_row(state_.instance.group, state_.instance.context);
    double denom = std::max(row[action], 1e-300);
    return build_gradient(nullptr, action, observed_loss / denom);
}

PseudoGradient FewEngine::full_gradient(std::span<const double> loss_vector) const {
    if (!trial_open_ || !state_.have_instance)
        throw ProtocolViolation("full_gradient: no instance observed this trial");
    if (static_cast<int>(loss_vector.size()) != cfg_.dims.num_actions)
        throw std::invalid_argument("full_gradient: loss vector length mismatch");
    require_loss_vector(loss_vector, "full_gradient");
    return build_gradient(loss_vector.data(), -1, 0.0);
}

void FewEngine::apply(const PseudoGradient& g) {
    if (!trial_open_) throw ProtocolViolation("apply: no open trial");
    for (int i = 0; i < cfg_.dims.num_groups; ++i)
        for (const auto& [x, lam] : g.per_group[i])
            learners_[i]->update(x, lam);
    trial_open_ = false;
    ++trials_completed_;
}

PseudoGradient FewEngine::feedback_bandit(double observed_loss) {
    if (!trial_open_ || !state_.have_action)
        throw ProtocolViolation("feedback_bandit: act() has not run this trial");
    if (!(observed_loss >= 0.0 && observed_loss <= 1.0))
        throw std::invalid_argument("feedback_bandit: loss outside [0,1]");

    double denom = state_.acted_prob;
    if (denom < 1e-300) {
        denom = 1e-300;
        floor_hit_ = true;
    }
    PseudoGradient g = build_gradient(nullptr, state_.action, observed_loss / denom);
    apply(g);
    return g;
}

PseudoGradient FewEngine::feedback_full(std::span<const double> loss_vector) {
    if (cfg_.mode != FeedbackMode::full_information)
        throw ProtocolViolation("feedback_full: engine is in bandit mode");
    if (!trial_open_ || !state_.have_instance)
        throw ProtocolViolation("feedback_full: no instance observed this trial");
    PseudoGradient g = full_gradient(loss_vector);
    apply(g);
    return g;
}

const TrialState& FewEngine::trial() const { return state_; }

double FewEngine::trial_parity() const {
    if (!trial_open_) throw ProtocolViolation("trial_parity: no open trial");
    const int K = cfg_.dims.num_actions;
    PolicyRowFn rows = [this](int i, int x) { return policy_row(i, x); };
    return parity_violation(rows, state_.target, K);
}

std::vector<std::unique_ptr<BaseLearner>> per_group_learners(const BaseLearner& prototype,
                                                             int num_groups) {
    std::vector<std::unique_ptr<BaseLearner>> out;
    out.reserve(num_groups);
    for (int i = 0; i < num_groups; ++i) out.push_back(prototype.clone());
    return out;
}

} // namespace few
