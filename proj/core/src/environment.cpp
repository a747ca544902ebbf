#include "few/environment.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace few {

ScriptedEnvironment::ScriptedEnvironment(Dims dims, std::vector<TrialRecord> script)
    : dims_(dims), script_(std::move(script)) {
    dims_.validate();
    if (static_cast<long>(script_.size()) != dims_.horizon)
        throw std::invalid_argument("ScriptedEnvironment: script length != horizon");
    for (const auto& r : script_) {
        r.target.validate();
        require_loss_vector(r.loss, "ScriptedEnvironment");
    }
}

TrialRecord ScriptedEnvironment::next() {
    if (cursor_ >= script_.size())
        throw std::out_of_range("ScriptedEnvironment: script exhausted");
    return script_[cursor_++];
}

std::unique_ptr<Environment> ScriptedEnvironment::clone() const {
    return std::make_unique<ScriptedEnvironment>(*this);
}

std::vector<TrialRecord> script_from_jsonl(const std::string& text, const Dims& dims) {
    std::vector<TrialRecord> script;
    std::istringstream in(text);
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw std::invalid_argument("script line " + std::to_string(line_no) + ": " +
                                        e.what());
        }
        TrialRecord r;
        auto mu = j.at("mu").get<std::vector<std::vector<double>>>();
        if (static_cast<int>(mu.size()) != dims.num_groups)
            throw std::invalid_argument("script line " + std::to_string(line_no) +
                                        ": wrong group count");
        Target t(dims.num_groups, dims.num_contexts);
        for (int i = 0; i < dims.num_groups; ++i) {
            if (static_cast<int>(mu[i].size()) != dims.num_contexts)
                throw std::invalid_argument("script line " + std::to_string(line_no) +
                                            ": wrong context count");
            for (int x = 0; x < dims.num_contexts; ++x) t(i, x) = mu[i][x];
        }
        r.target = TrialTarget(t);
        r.instance = {j.at("i").get<int>(), j.at("x").get<int>()};
        r.loss = j.at("loss").get<std::vector<double>>();
        if (static_cast<int>(r.loss.size()) != dims.num_actions)
            throw std::invalid_argument("script line " + std::to_string(line_no) +
                                        ": wrong loss length");
        script.push_back(std::move(r));
    }
    return script;
}

std::string script_to_jsonl(const std::vector<TrialRecord>& script, const Dims& dims) {
    std::ostringstream out;
    for (const auto& r : script) {
        nlohmann::json j;
        std::vector<std::vector<double>> mu(dims.num_groups,
                                            std::vector<double>(dims.num_contexts, 0.0));
        for (int i = 0; i < dims.num_groups; ++i)
            for (const auto& [x, m] : r.target.rows[i]) mu[i][x] = m;
        j["mu"] = mu;
        j["i"] = r.instance.group;
        j["x"] = r.instance.context;
        j["loss"] = r.loss;
        out << j.dump() << "\n";
    }
    return out.str();
}

IidEnvironment::IidEnvironment(Dims dims, Target target, std::vector<double> group_probs,
                               std::vector<double> mean_loss, bool bernoulli)
    : dims_(dims), target_(std::move(target)), group_probs_(std::move(group_probs)),
      mean_loss_(std::move(mean_loss)), bernoulli_(bernoulli) {
    dims_.validate();
    if (!validate_target(target_, dims_).ok)
        throw std::invalid_argument("IidEnvironment: invalid target");
    require_action_dist(group_probs_, "IidEnvironment: group marginal");
    if (mean_loss_.size() !=
        static_cast<std::size_t>(dims_.num_groups) * dims_.num_contexts * dims_.num_actions)
        throw std::invalid_argument("IidEnvironment: mean loss shape mismatch");
    for (double v : mean_loss_)
        if (!(v >= 0.0 && v <= 1.0))
            throw std::invalid_argument("IidEnvironment: mean loss outside [0,1]");
}

TrialRecord IidEnvironment::next() {
    TrialRecord r;
    r.target = TrialTarget(target_);
    int i = rng_.sample_discrete(group_probs_);
    std::vector<double> row(dims_.num_contexts);
    for (int x = 0; x < dims_.num_contexts; ++x) row[x] = target_(i, x);
    int x = rng_.sample_discrete(row);
    r.instance = {i, x};
    r.loss.resize(dims_.num_actions);
    for (int a = 0; a < dims_.num_actions; ++a) {
        double mean =
            mean_loss_[(static_cast<std::size_t>(i) * dims_.num_contexts + x) * dims_.num_actions +
                       a];
        r.loss[a] = bernoulli_ ? (rng_.next_double() < mean ? 1.0 : 0.0) : mean;
    }
    return r;
}

std::unique_ptr<Environment> IidEnvironment::clone() const {
    return std::make_unique<IidEnvironment>(*this);
}

DynamicEmpiricalEnvironment::DynamicEmpiricalEnvironment(Dims dims, std::vector<Phase> phases,
                                                         bool bernoulli)
    : dims_(dims), phases_(std::move(phases)), bernoulli_(bernoulli) {
    dims_.validate();
    if (phases_.empty() || phases_.front().first_trial != 1)
        throw std::invalid_argument("DynamicEmpiricalEnvironment: phases must start at trial 1");
    for (const auto& p : phases_) {
        if (p.instance_probs.size() !=
            static_cast<std::size_t>(dims_.num_groups) * dims_.num_contexts)
            throw std::invalid_argument("DynamicEmpiricalEnvironment: instance probs shape");
        if (p.mean_loss.size() != static_cast<std::size_t>(dims_.num_groups) * dims_.num_contexts *
                                      dims_.num_actions)
            throw std::invalid_argument("DynamicEmpiricalEnvironment: mean loss shape");
    }
    reset(Rng(0));
}

void DynamicEmpiricalEnvironment::reset(Rng rng) {
    rng_ = rng;
    t_ = 0;
    counts_.assign(static_cast<std::size_t>(dims_.num_groups) * dims_.num_contexts, 0);
    group_totals_.assign(dims_.num_groups, 0);
}

const DynamicEmpiricalEnvironment::Phase& DynamicEmpiricalEnvironment::phase_at(long t) const {
    const Phase* best = &phases_.front();
    for (const auto& p : phases_)
        if (p.first_trial <= t) best = &p;
    return *best;
}

TrialRecord DynamicEmpiricalEnvironment::next() {
    ++t_;
    TrialRecord r;
    // empirical target from earlier trials; unseen groups stay inactive
    r.target = TrialTarget(dims_.num_groups);
    for (int i = 0; i < dims_.num_groups; ++i) {
        if (group_totals_[i] == 0) continue;
        for (int x = 0; x < dims_.num_contexts; ++x) {
            long c = counts_[static_cast<std::size_t>(i) * dims_.num_contexts + x];
            if (c > 0)
                r.target.rows[i].emplace_back(
                    x, static_cast<double>(c) / static_cast<double>(group_totals_[i]));
        }
    }

    const Phase& ph = phase_at(t_);
    int ix = rng_.sample_discrete(ph.instance_probs);
    r.instance = {ix / dims_.num_contexts, ix % dims_.num_contexts};
    r.loss.resize(dims_.num_actions);
    for (int a = 0; a < dims_.num_actions; ++a) {
        double mean = ph.mean_loss[(static_cast<std::size_t>(r.instance.group) * dims_.num_contexts +
                                    r.instance.context) *
                                       dims_.num_actions +
                                   a];
        r.loss[a] = bernoulli_ ? (rng_.next_double() < mean ? 1.0 : 0.0) : mean;
    }

    ++counts_[static_cast<std::size_t>(r.instance.group) * dims_.num_contexts +
              r.instance.context];
    ++group_totals_[r.instance.group];
    return r;
}

std::unique_ptr<Environment> DynamicEmpiricalEnvironment::clone() const {
    return std::make_unique<DynamicEmpiricalEnvironment>(*this);
}

AdversarialRandomEnvironment::AdversarialRandomEnvironment(Dims dims, double sparsity)
    : dims_(dims), sparsity_(sparsity) {
    dims_.validate();
    if (!(sparsity_ >= 0.0 && sparsity_ < 1.0))
        throw std::invalid_argument("AdversarialRandomEnvironment: sparsity must lie in [0,1)");
}

TrialRecord AdversarialRandomEnvironment::next() {
    TrialRecord r;
    Target t(dims_.num_groups, dims_.num_contexts);
    for (int i = 0; i < dims_.num_groups; ++i) {
        double sum = 0.0;
        while (sum == 0.0) {
            for (int x = 0; x < dims_.num_contexts; ++x) {
                bool keep = rng_.next_double() >= sparsity_;
                // exponential draws normalize to a uniform simplex point
                t(i, x) = keep ? -std::log(1.0 - rng_.next_double()) : 0.0;
                sum += t(i, x);
            }
        }
        for (int x = 0; x < dims_.num_contexts; ++x) t(i, x) /= sum;
    }
    r.target = TrialTarget(t);

    int i = static_cast<int>(rng_.next_below(dims_.num_groups));
    std::vector<double> row(dims_.num_contexts);
    for (int x = 0; x < dims_.num_contexts; ++x) row[x] = t(i, x);
    r.instance = {i, rng_.sample_discrete(row)};
    r.loss.resize(dims_.num_actions);
    for (int a = 0; a < dims_.num_actions; ++a) r.loss[a] = rng_.next_double();
    return r;
}

std::unique_ptr<Environment> AdversarialRandomEnvironment::clone() const {
    return std::make_unique<AdversarialRandomEnvironment>(*this);
}

PiecewiseDensity::PiecewiseDensity(std::vector<double> cell_mass)
    : cell_mass_(std::move(cell_mass)) {
    if (cell_mass_.empty())
        throw std::invalid_argument("PiecewiseDensity: need at least one cell");
    double sum = 0.0;
    for (double m : cell_mass_) {
        if (m < 0.0) throw std::invalid_argument("PiecewiseDensity: negative cell mass");
        sum += m;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("PiecewiseDensity: cell masses must sum to 1");
}

double PiecewiseDensity::mass(double lo, double hi) const {
    if (!(lo <= hi)) throw std::invalid_argument("PiecewiseDensity::mass: lo > hi");
    const int C = cells();
    double total = 0.0;
    for (int c = 0; c < C; ++c) {
        double clo = static_cast<double>(c) / C;
        double chi = static_cast<double>(c + 1) / C;
        double olo = std::max(lo, clo);
        double ohi = std::min(hi, chi);
        if (ohi > olo) total += cell_mass_[c] * (ohi - olo) * C;
    }
    return total;
}

double PiecewiseDensity::sample(Rng& rng) const {
    double u = rng.next_double();
    const int C = cells();
    double acc = 0.0;
    for (int c = 0; c < C; ++c) {
        if (u < acc + cell_mass_[c] || c == C - 1) {
            double frac = cell_mass_[c] > 0.0 ? (u - acc) / cell_mass_[c] : 0.0;
            frac = std::clamp(frac, 0.0, 1.0 - 1e-12);
            return (static_cast<double>(c) + frac) / C;
        }
        acc += cell_mass_[c];
    }
    return 0.0;
}

ContinuousIidEnvironment::ContinuousIidEnvironment(int num_groups, int num_actions, long horizon,
                                                   std::vector<PiecewiseDensity> densities,
                                                   std::vector<double> group_probs)
    : num_actions_(num_actions), horizon_(horizon), densities_(std::move(densities)),
      group_probs_(std::move(group_probs)) {
    if (static_cast<int>(densities_.size()) != num_groups)
        throw std::invalid_argument("ContinuousIidEnvironment: density per group required");
    require_action_dist(group_probs_, "ContinuousIidEnvironment: group marginal");
}

ContinuousTrialRecord ContinuousIidEnvironment::next() {
    ContinuousTrialRecord r;
    r.group = rng_.sample_discrete(group_probs_);
    r.x = densities_[r.group].sample(rng_);
    r.loss.resize(num_actions_);
    for (int a = 0; a < num_actions_; ++a) r.loss[a] = rng_.next_double();
    return r;
}

double ContinuousIidEnvironment::true_mass(int group, double lo, double hi) const {
    return densities_[group].mass(lo, hi);
}

} // namespace few
