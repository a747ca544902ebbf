#include "few/ensemble.hpp"

#include <json.hpp>

#include <cmath>

namespace few {

void EnsembleConfig::resolve() {
    dims.validate();
    if (copies <= 0)
        copies = static_cast<int>(std::ceil(std::log2(static_cast<double>(dims.horizon)))) + 1;
    copies = std::max(copies, 1);
    if (!(eta_min > 0.0))
        eta_min = 1.0 / std::sqrt(static_cast<double>(dims.num_actions) * dims.horizon);
    if (master_rate < 0.0)
        master_rate = std::sqrt(8.0 * std::log(static_cast<double>(std::max(copies, 2))) /
                                static_cast<double>(dims.horizon));
    if (initial_master_weights.empty())
        initial_master_weights.assign(copies, 1.0 / copies);
    if (static_cast<int>(initial_master_weights.size()) != copies)
        throw std::invalid_argument("EnsembleConfig: master weight count mismatch");
    require_action_dist(initial_master_weights, "EnsembleConfig: initial master weights");
}

DoublingEnsemble::DoublingEnsemble(EnsembleConfig cfg, const LearnerSetFactory& factory,
                                   SupportPolicy support_policy)
    : cfg_(std::move(cfg)) {
    cfg_.resolve();
    weights_ = cfg_.initial_master_weights;
    engines_.reserve(cfg_.copies);
    for (int j = 0; j < cfg_.copies; ++j) {
        FewConfig fc;
        fc.dims = cfg_.dims;
        fc.eta = cfg_.eta_min * std::pow(2.0, j);
        fc.mode = FeedbackMode::full_information;
        fc.support_policy = support_policy;
        engines_.emplace_back(fc, factory(fc.hedge_rate()));
    }
}

void DoublingEnsemble::begin(const TrialTarget& target) {
    for (auto& e : engines_) e.begin_trial(target);
    open_ = true;
}

ActionDist DoublingEnsemble::combined_row(int group, int context) const {
    if (!open_) throw ProtocolViolation("combined_row: no open ensemble trial");
    const int K = cfg_.dims.num_actions;
    ActionDist out(K, 0.0);
    for (int j = 0; j < copies(); ++j) {
        ActionDist r = engines_[j].policy_row(group, context);
        for (int a = 0; a < K; ++a) out[a] += weights_[j] * r[a];
    }
    return out;
}

void DoublingEnsemble::finish(const Instance& inst, std::span<const double> loss_vector) {
    if (!open_) throw ProtocolViolation("finish: no open ensemble trial");
    if (static_cast<int>(loss_vector.size()) != cfg_.dims.num_actions)
        throw std::invalid_argument("DoublingEnsemble: loss vector length mismatch");
    require_loss_vector(loss_vector, "DoublingEnsemble::finish");

    std::vector<double> copy_losses(copies(), 0.0);
    for (int j = 0; j < copies(); ++j) {
        ActionDist r = engines_[j].policy_row(inst.group, inst.context);
        double c = 0.0;
        for (int a = 0; a < cfg_.dims.num_actions; ++a) c += r[a] * loss_vector[a];
        copy_losses[j] = c;
        engines_[j].observe(inst);
        engines_[j].feedback_full(loss_vector);
    }
    open_ = false;

    if (cfg_.master_rate > 0.0) {
        double sum = 0.0;
        for (int j = 0; j < copies(); ++j) {
            weights_[j] *= std::exp(-cfg_.master_rate * copy_losses[j]);
            sum += weights_[j];
        }
        for (double& w : weights_) w /= sum;
    }
    ++trials_;
}

ActionDist DoublingEnsemble::step(const TrialTarget& target, const Instance& inst,
                                  std::span<const double> loss_vector) {
    begin(target);
    ActionDist combined = combined_row(inst.group, inst.context);
    finish(inst, loss_vector);
    return combined;
}

AveragedPolicy::AveragedPolicy(int num_groups, int num_contexts, int num_actions)
    : sum_(num_groups, num_contexts, num_actions, 0.0),
      touched_(static_cast<std::size_t>(num_groups) * num_contexts, false) {}

void AveragedPolicy::add(const PolicyRowFn& rows, const TrialTarget& support) {
    for (int i = 0; i < support.num_groups(); ++i)
        for (const auto& [x, mass] : support.rows[i]) {
            (void)mass;
            ActionDist r = rows(i, x);
            for (int a = 0; a < sum_.num_actions; ++a) sum_(i, x, a) += r[a];
            touched_[static_cast<std::size_t>(i) * sum_.num_contexts + x] = true;
        }
    ++trials_;
}

Policy AveragedPolicy::average() const {
    if (trials_ == 0) throw std::logic_error("AveragedPolicy: no trials accumulated");
    Policy out = sum_;
    for (int i = 0; i < out.num_groups; ++i)
        for (int x = 0; x < out.num_contexts; ++x) {
            bool t = touched_[static_cast<std::size_t>(i) * out.num_contexts + x];
            for (int a = 0; a < out.num_actions; ++a)
                out(i, x, a) = t ? out(i, x, a) / trials_ : 1.0 / out.num_actions;
        }
    return out;
}

Policy train_fair_classifier(std::span<const LabeledExample> dataset, const Target& target,
                             const EnsembleConfig& cfg, const LearnerSetFactory& factory) {
    if (dataset.empty()) throw std::invalid_argument("train_fair_classifier: empty dataset");
    EnsembleConfig resolved = cfg;
    resolved.dims.horizon = static_cast<long>(dataset.size());

    TrialTarget tt(target);
    DoublingEnsemble ensemble(resolved, factory);
    AveragedPolicy avg(target.num_groups, target.num_contexts, resolved.dims.num_actions);
    PolicyRowFn rows = [&ensemble](int i, int x) { return ensemble.combined_row(i, x); };

    for (const auto& sample : dataset) {
        ensemble.begin(tt);
        avg.add(rows, tt);
        ensemble.finish(sample.inst, sample.loss);
    }
    return avg.average();
}

double generalisation_regret(const Policy& policy, const Policy& comparator,
                             std::span<const WeightedExample> dist) {
    double total = 0.0;
    for (const auto& w : dist) {
        double d = 0.0;
        for (int a = 0; a < policy.num_actions; ++a)
            d += (policy(w.inst.group, w.inst.context, a) -
                  comparator(w.inst.group, w.inst.context, a)) *
                 w.loss[a];
        total += w.prob * d;
    }
    return total;
}

std::string policy_to_json(const Policy& p) {
    nlohmann::json j;
    j["dims"] = {{"groups", p.num_groups},
                 {"contexts", p.num_contexts},
                 {"actions", p.num_actions}};
    j["probs"] = p.probs;
    return j.dump();
}

Policy policy_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    Policy p(j.at("dims").at("groups").get<int>(), j.at("dims").at("contexts").get<int>(),
             j.at("dims").at("actions").get<int>());
    p.probs = j.at("probs").get<std::vector<double>>();
    if (p.probs.size() !=
        static_cast<std::size_t>(p.num_groups) * p.num_contexts * p.num_actions)
        throw std::invalid_argument("policy_from_json: probs length mismatch");
    return p;
}

} // namespace few
