#include "few/runner.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <sstream>

namespace few {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * b[j];
    return s;
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<int> support_sizes_of(const TrialTarget& t) {
    std::vector<int> out;
    out.reserve(t.rows.size());
    for (const auto& r : t.rows) out.push_back(static_cast<int>(r.size()));
    return out;
}

} // namespace

double RunTrace::cum_loss() const {
    double s = 0.0;
    for (const auto& r : rows) s += r.loss;
    return s;
}

double RunTrace::cum_exp_loss() const {
    double s = 0.0;
    for (const auto& r : rows) s += r.exp_loss;
    return s;
}

ParityAudit parity_audit(const RunTrace& trace) {
    ParityAudit a;
    if (trace.rows.empty()) return a;
    double sum = 0.0;
    for (const auto& r : trace.rows) {
        a.max = std::max(a.max, r.parity);
        sum += r.parity;
    }
    a.mean = sum / static_cast<double>(trace.rows.size());
    return a;
}

RunTrace run_few(FewEngine& engine, Environment& env, std::uint64_t seed) {
    Rng root(seed);
    Rng action_rng = root.split(1);
    env.reset(root.split(2));

    const Dims dims = env.dims();
    RunTrace trace;
    trace.rows.reserve(dims.horizon);
    for (long t = 1; t <= dims.horizon; ++t) {
        TrialRecord rec = env.next();
        const TrialState& st = engine.begin_trial(rec.target);

        TraceRow row;
        row.t = t;
        row.beta = st.beta;
        row.parity = engine.trial_parity();
        row.support_sizes = support_sizes_of(rec.target);
        row.instance = rec.instance;
        row.target = rec.target;
        row.loss_vec = rec.loss;

        row.action = engine.act(rec.instance, action_rng);
        row.acted_row = engine.trial().acted_row;
        row.loss = rec.loss[row.action];
        row.exp_loss = dot(row.acted_row, rec.loss);

        if (engine.config().mode == FeedbackMode::bandit)
            engine.feedback_bandit(row.loss);
        else
            engine.feedback_full(rec.loss);

        trace.rows.push_back(std::move(row));
    }
    return trace;
}

RunTrace run_ensemble(DoublingEnsemble& ensemble, Environment& env, std::uint64_t seed) {
    Rng root(seed);
    Rng action_rng = root.split(1);
    env.reset(root.split(2));

    const Dims dims = env.dims();
    RunTrace trace;
    trace.rows.reserve(dims.horizon);
    PolicyRowFn rows = [&ensemble](int i, int x) { return ensemble.combined_row(i, x); };
    for (long t = 1; t <= dims.horizon; ++t) {
        TrialRecord rec = env.next();
        ensemble.begin(rec.target);

        TraceRow row;
        row.t = t;
        // no single budget for the mixture: report the master-weighted mean
        double beta = 0.0;
        for (int j = 0; j < ensemble.copies(); ++j)
            beta += ensemble.master_weights()[j] * ensemble.copy(j).trial().beta;
        row.beta = beta;
        row.parity = parity_violation(rows, rec.target, dims.num_actions);
        row.support_sizes = support_sizes_of(rec.target);
        row.instance = rec.instance;
        row.target = rec.target;
        row.loss_vec = rec.loss;

        row.acted_row = ensemble.combined_row(rec.instance.group, rec.instance.context);
        row.action = action_rng.sample_discrete(row.acted_row);
        row.loss = rec.loss[row.action];
        row.exp_loss = dot(row.acted_row, rec.loss);

        ensemble.finish(rec.instance, rec.loss);
        trace.rows.push_back(std::move(row));
    }
    return trace;
}

RunTrace run_exp4(Exp4PerGroup& baseline, Environment& env, std::uint64_t seed) {
    Rng root(seed);
    Rng action_rng = root.split(1);
    env.reset(root.split(2));

    const Dims dims = env.dims();
    RunTrace trace;
    trace.rows.reserve(dims.horizon);
    PolicyRowFn rows = [&baseline](int i, int x) { return baseline.policy_row(i, x); };
    for (long t = 1; t <= dims.horizon; ++t) {
        TrialRecord rec = env.next();

        TraceRow row;
        row.t = t;
        row.beta = 0.0;
        row.parity = parity_violation(rows, rec.target, dims.num_actions);
        row.support_sizes = support_sizes_of(rec.target);
        row.instance = rec.instance;
        row.target = rec.target;
        row.loss_vec = rec.loss;

        row.action = baseline.act(rec.instance, action_rng);
        row.acted_row = baseline.policy_row(rec.instance.group, rec.instance.context);
        row.loss = rec.loss[row.action];
        row.exp_loss = dot(row.acted_row, rec.loss);

        baseline.feedback(row.loss);
        trace.rows.push_back(std::move(row));
    }
    return trace;
}

RunTrace run_few_tree(FewEngine& engine, TreeReduction& reduction, ContinuousIidEnvironment& env,
                      std::uint64_t seed, bool audit_true_measure) {
    Rng root(seed);
    Rng action_rng = root.split(1);
    env.reset(root.split(2));

    const int M = reduction.num_groups();
    const int K = env.num_actions();
    RunTrace trace;
    trace.rows.reserve(env.horizon());
    for (long t = 1; t <= env.horizon(); ++t) {
        ContinuousTrialRecord rec = env.next();
        TrialTarget target = reduction.trial_target();
        engine.begin_trial(target);

        TraceRow row;
        row.t = t;
        row.beta = engine.trial().beta;
        row.support_sizes = support_sizes_of(target);
        row.target = target;
        row.loss_vec = rec.loss;

        if (audit_true_measure) {
            // violation of the induced true-context policy under the true
            // measure: leaves tile [0,1), the policy is constant on each
            std::vector<double> omega(static_cast<std::size_t>(M) * K, 0.0);
            std::vector<int> all_groups(M);
            for (int i = 0; i < M; ++i) {
                all_groups[i] = i;
                for (int leaf : reduction.subtree(i).leaves()) {
                    auto [lo, hi] = reduction.subtree(i).interval(leaf);
                    double m = env.true_mass(i, lo, hi);
                    if (m == 0.0) continue;
                    ActionDist r = engine.policy_row(i, leaf);
                    for (int a = 0; a < K; ++a)
                        omega[static_cast<std::size_t>(i) * K + a] += m * r[a];
                }
            }
            row.parity = parity_violation_from_marginals(omega, K, all_groups);
        } else {
            row.parity = engine.trial_parity();
        }

        int leaf = reduction.locate(rec.group, rec.x);
        row.instance = {rec.group, leaf};
        row.action = engine.act(row.instance, action_rng);
        row.acted_row = engine.trial().acted_row;
        row.loss = rec.loss[row.action];
        row.exp_loss = dot(row.acted_row, rec.loss);

        engine.feedback_bandit(row.loss);
        reduction.end_trial(rec.group, rec.x);
        trace.rows.push_back(std::move(row));
    }
    return trace;
}

PseudoGradient true_subgradient(const TrialState& state, std::span<const double> loss_vector,
                                int num_actions) {
    const int M = state.target.num_groups();
    const int K = num_actions;
    PseudoGradient g;
    g.loss_term_active = state.beta <= 1.0;
    g.per_group.resize(M);
    for (int i = 0; i < M; ++i) {
        bool covered = false;
        for (const auto& [x, m] : state.target.rows[i]) {
            std::vector<double> row(K, 0.0);
            for (int a = 0; a < K; ++a) {
                if (i == state.kappa_max[a]) row[a] += m;
                if (i == state.kappa_min[a]) row[a] -= m;
                if (g.loss_term_active && i == state.instance.group &&
                    x == state.instance.context)
                    row[a] += loss_vector[a];
            }
            if (i == state.instance.group && x == state.instance.context) covered = true;
            g.per_group[i].emplace_back(x, std::move(row));
        }
        if (g.loss_term_active && !covered && i == state.instance.group) {
            std::vector<double> row(loss_vector.begin(), loss_vector.end());
            g.per_group[i].emplace_back(state.instance.context, std::move(row));
        }
    }
    return g;
}

double regret(const RunTrace& trace, const Comparator& comparator) {
    std::vector<TrialTarget> targets;
    targets.reserve(trace.rows.size());
    for (const auto& r : trace.rows) targets.push_back(r.target);
    comparator.check_fair(targets);

    double total = 0.0;
    for (const auto& r : trace.rows) {
        const Policy& p = comparator.at(r.t);
        double d = 0.0;
        for (int a = 0; a < static_cast<int>(r.acted_row.size()); ++a)
            d += (r.acted_row[a] - p(r.instance.group, r.instance.context, a)) * r.loss_vec[a];
        total += d;
    }
    return total;
}

std::string trace_to_csv(const RunTrace& trace) {
    std::ostringstream out;
    out << "t,beta,parity,loss,exp_loss\n";
    for (const auto& r : trace.rows)
        out << r.t << ',' << fmt_double(r.beta) << ',' << fmt_double(r.parity) << ','
            << fmt_double(r.loss) << ',' << fmt_double(r.exp_loss) << '\n';
    return out.str();
}

std::string trace_to_jsonl(const RunTrace& trace) {
    std::ostringstream out;
    for (const auto& r : trace.rows) {
        nlohmann::json j;
        j["t"] = r.t;
        j["beta"] = r.beta;
        j["parity"] = r.parity;
        j["action"] = r.action;
        j["loss"] = r.loss;
        j["exp_loss"] = r.exp_loss;
        j["support_sizes"] = r.support_sizes;
        j["i"] = r.instance.group;
        j["x"] = r.instance.context;
        j["row"] = r.acted_row;
        j["loss_vec"] = r.loss_vec;
        out << j.dump() << '\n';
    }
    return out.str();
}

std::string summary_to_json(const RunSummary& s) {
    nlohmann::json j;
    j["cum_loss"] = s.cum_loss;
    j["regret"] = s.regret.has_value() ? nlohmann::json(*s.regret) : nlohmann::json();
    j["bound_value"] = s.bound_value.has_value() ? nlohmann::json(*s.bound_value) : nlohmann::json();
    j["parity_max"] = s.parity_max;
    j["parity_mean"] = s.parity_mean;
    j["pass"] = s.pass;
    return j.dump(2);
}

} // namespace few
