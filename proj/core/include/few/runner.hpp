#pragma once

#include "few/comparator.hpp"
#include "few/engine.hpp"
#include "few/ensemble.hpp"
#include "few/environment.hpp"
#include "few/exp4.hpp"
#include "few/tree.hpp"

#include <optional>

namespace few {

struct TraceRow {
    long t = 0;
    double beta = 0.0;
    double parity = 0.0;
    int action = -1;
    double loss = 0.0;     // realized loss of the sampled action
    double exp_loss = 0.0; // expected loss of the played row
    std::vector<int> support_sizes;
    Instance instance;
    ActionDist acted_row;
    LossVector loss_vec;
    TrialTarget target;
};

struct RunTrace {
    std::vector<TraceRow> rows;

    long trials() const { return static_cast<long>(rows.size()); }
    double cum_loss() const;
    double cum_exp_loss() const;
};

struct ParityAudit {
    double max = 0.0;
    double mean = 0.0;
};
ParityAudit parity_audit(const RunTrace& trace);

// The five-step trial loop. Deterministic given (engine config, env, seed).
RunTrace run_few(FewEngine& engine, Environment& env, std::uint64_t seed);
RunTrace run_ensemble(DoublingEnsemble& ensemble, Environment& env, std::uint64_t seed);
RunTrace run_exp4(Exp4PerGroup& baseline, Environment& env, std::uint64_t seed);

// Decomposition-tree run over a continuous-context environment. When
// audit_true_measure is set, the parity column reports the violation of
// the induced true-context policy under the environment's true measure
// rather than under the per-trial leaf target.
RunTrace run_few_tree(FewEngine& engine, TreeReduction& reduction, ContinuousIidEnvironment& env,
                      std::uint64_t seed, bool audit_true_measure);

// In-expectation regret over the trace's recorded rows:
// sum_t <pi_t(i_t,x_t,.) - comparator_t(i_t,x_t,.), ell_t>.
// Verifies the comparator's fairness against every recorded target first.
double regret(const RunTrace& trace, const Comparator& comparator);

// Exact sub-gradient of the trial objective at the raw policy, evaluated
// from first principles off the trial state. Deliberately independent of
// the engine's gradient construction: the unbiasedness check compares the
// two routes.
PseudoGradient true_subgradient(const TrialState& state, std::span<const double> loss_vector,
                                int num_actions);

// CSV with the stable header t,beta,parity,loss,exp_loss.
std::string trace_to_csv(const RunTrace& trace);
// JSONL with the full per-trial records.
std::string trace_to_jsonl(const RunTrace& trace);

struct RunSummary {
    double cum_loss = 0.0;
    std::optional<double> regret;
    std::optional<double> bound_value;
    double parity_max = 0.0;
    double parity_mean = 0.0;
    bool pass = false;
};
std::string summary_to_json(const RunSummary& s);

} // namespace few
