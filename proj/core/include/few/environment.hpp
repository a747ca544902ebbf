#pragma once

#include "few/rng.hpp"
#include "few/target.hpp"

#include <memory>
#include <optional>

namespace few {

// One pre-drawn trial of the discrete-context protocol. Sequences are
// selected up front: nothing here may depend on the learner's actions.
struct TrialRecord {
    TrialTarget target;
    Instance instance;
    LossVector loss;
};

class Environment {
public:
    virtual ~Environment() = default;
    virtual Dims dims() const = 0;
    // Restart from trial 1 with the given stream; scripted environments
    // ignore the stream and replay bit-identically.
    virtual void reset(Rng rng) = 0;
    virtual TrialRecord next() = 0;
    virtual std::unique_ptr<Environment> clone() const = 0;
};

class ScriptedEnvironment final : public Environment {
public:
    ScriptedEnvironment(Dims dims, std::vector<TrialRecord> script);

    Dims dims() const override { return dims_; }
    void reset(Rng) override { cursor_ = 0; }
    TrialRecord next() override;
    std::unique_ptr<Environment> clone() const override;

    const std::vector<TrialRecord>& script() const { return script_; }

private:
    Dims dims_;
    std::vector<TrialRecord> script_;
    std::size_t cursor_ = 0;
};

// JSONL script format, one trial per line:
//   {"mu": [[...] per group], "i": int, "x": int, "loss": [...]}
std::vector<TrialRecord> script_from_jsonl(const std::string& text, const Dims& dims);
std::string script_to_jsonl(const std::vector<TrialRecord>& script, const Dims& dims);

// Fixed target, instances drawn by group marginal then context from the
// target row, losses from a per-(group,context) table with optional
// Bernoulli noise.
class IidEnvironment final : public Environment {
public:
    IidEnvironment(Dims dims, Target target, std::vector<double> group_probs,
                   std::vector<double> mean_loss /* M x N x K */, bool bernoulli);

    Dims dims() const override { return dims_; }
    void reset(Rng rng) override { rng_ = rng; }
    TrialRecord next() override;
    std::unique_ptr<Environment> clone() const override;

private:
    Dims dims_;
    Target target_;
    std::vector<double> group_probs_;
    std::vector<double> mean_loss_;
    bool bernoulli_ = false;
    Rng rng_{0};
};

// Empirical-fairness loop: the trial target is the per-group empirical
// distribution of the instances seen on earlier trials; groups not yet
// seen are inactive. Instance and loss processes may switch distribution
// at fixed trials, which is what the tracking experiments use.
class DynamicEmpiricalEnvironment final : public Environment {
public:
    struct Phase {
        long first_trial = 1;                // phase applies from this trial on
        std::vector<double> instance_probs;  // M x N, sums to 1
        std::vector<double> mean_loss;       // M x N x K
    };

    DynamicEmpiricalEnvironment(Dims dims, std::vector<Phase> phases, bool bernoulli);

    Dims dims() const override { return dims_; }
    void reset(Rng rng) override;
    TrialRecord next() override;
    std::unique_ptr<Environment> clone() const override;

private:
    const Phase& phase_at(long t) const;

    Dims dims_;
    std::vector<Phase> phases_;
    bool bernoulli_ = false;
    Rng rng_{0};
    long t_ = 0;
    std::vector<long> counts_;      // M x N instance counts
    std::vector<long> group_totals_;
};

// Fresh random row-stochastic targets every trial (optionally sparse),
// uniform random losses, instance drawn inside the support.
class AdversarialRandomEnvironment final : public Environment {
public:
    AdversarialRandomEnvironment(Dims dims, double sparsity /* chance an entry is zeroed */);

    Dims dims() const override { return dims_; }
    void reset(Rng rng) override { rng_ = rng; }
    TrialRecord next() override;
    std::unique_ptr<Environment> clone() const override;

private:
    Dims dims_;
    double sparsity_ = 0.0;
    Rng rng_{0};
};

// ---- continuous-context environments (decomposition-tree runs) ---------

struct ContinuousTrialRecord {
    int group = 0;
    double x = 0.0; // true context in [0,1)
    LossVector loss;
};

// Per-group piecewise-constant density on [0,1) over equal-width cells.
class PiecewiseDensity {
public:
    explicit PiecewiseDensity(std::vector<double> cell_mass);

    double mass(double lo, double hi) const; // exact integral
    double sample(Rng& rng) const;
    int cells() const { return static_cast<int>(cell_mass_.size()); }

private:
    std::vector<double> cell_mass_;
};

class ContinuousIidEnvironment {
public:
    ContinuousIidEnvironment(int num_groups, int num_actions, long horizon,
                             std::vector<PiecewiseDensity> densities,
                             std::vector<double> group_probs);

    int num_groups() const { return static_cast<int>(densities_.size()); }
    int num_actions() const { return num_actions_; }
    long horizon() const { return horizon_; }

    void reset(Rng rng) { rng_ = rng; }
    ContinuousTrialRecord next();

    // Exact true measure of [lo,hi) for a group; this is both the known-
    // target oracle and the audit measure in empirical mode.
    double true_mass(int group, double lo, double hi) const;

private:
    int num_actions_ = 0;
    long horizon_ = 0;
    std::vector<PiecewiseDensity> densities_;
    std::vector<double> group_probs_;
    Rng rng_{0};
};

} // namespace few
