#include "few/ensemble.hpp"

#include "few/runner.hpp"
#include "few/tabular_hedge.hpp"

#include <doctest.h>

#include <cmath>

using namespace few;

namespace {

LearnerSetFactory factory(const Dims& dims) {
    return [dims](double rate) {
        std::vector<std::unique_ptr<BaseLearner>> out;
        for (int i = 0; i < dims.num_groups; ++i)
            out.push_back(std::make_unique<TabularHedge>(dims.num_contexts, dims.num_actions,
                                                         HedgeConfig{rate}));
        return out;
    };
}

} // namespace

TEST_CASE("ensemble defaults") {
    EnsembleConfig cfg;
    cfg.dims = {2, 2, 2, 1000};
    cfg.resolve();
    CHECK(cfg.copies == 11); // ceil(log2 1000) + 1
    CHECK(cfg.eta_min == doctest::Approx(1.0 / std::sqrt(2000.0)));
    CHECK(cfg.master_rate == doctest::Approx(std::sqrt(8.0 * std::log(11.0) / 1000.0)));
}

TEST_CASE("a single-copy ensemble reproduces the lone engine") {
    Dims dims{2, 2, 2, 50};
    EnsembleConfig cfg;
    cfg.dims = dims;
    cfg.copies = 1;
    cfg.eta_min = 0.5 / std::sqrt(100.0);
    DoublingEnsemble ens(cfg, factory(dims));

    FewConfig fc;
    fc.dims = dims;
    fc.eta = cfg.eta_min;
    fc.mode = FeedbackMode::full_information;
    FewEngine solo(fc, factory(dims)(fc.hedge_rate()));

    Target mu = Target::uniform(2, 2);
    TrialTarget tt(mu);
    Rng rng(77);
    for (int t = 0; t < 50; ++t) {
        Instance inst{static_cast<int>(rng.next_below(2)), static_cast<int>(rng.next_below(2))};
        std::vector<double> loss = {rng.next_double(), rng.next_double()};
        solo.begin_trial(tt);
        ActionDist a = solo.policy_row(inst.group, inst.context);
        ActionDist b = ens.step(tt, inst, loss);
        for (int k = 0; k < 2; ++k) CHECK(a[k] == doctest::Approx(b[k]).epsilon(1e-12));
        solo.observe(inst);
        solo.feedback_full(loss);
    }
}

TEST_CASE("master hedge update arithmetic") {
    // two copies pinned to opposite actions via their priors; loss (0,1)
    // gives copy losses (0,1), so with master rate ln 2 the weights move
    // from (1/2,1/2) to (2/3,1/3)
    Dims dims{1, 1, 2, 16};
    EnsembleConfig cfg;
    cfg.dims = dims;
    cfg.copies = 2;
    cfg.master_rate = std::log(2.0);

    int built = 0;
    LearnerSetFactory pinned = [&built](double rate) {
        std::vector<std::unique_ptr<BaseLearner>> out;
        std::vector<double> prior = built++ == 0 ? std::vector<double>{1.0 - 1e-15, 1e-15}
                                                 : std::vector<double>{1e-15, 1.0 - 1e-15};
        out.push_back(std::make_unique<TabularHedge>(1, 2, HedgeConfig{rate},
                                                     std::span<const double>(prior)));
        return out;
    };
    DoublingEnsemble ens(cfg, pinned);
    Target mu = Target::uniform(1, 1);
    ens.step(TrialTarget(mu), {0, 0}, std::vector<double>{0.0, 1.0});
    CHECK(ens.master_weights()[0] == doctest::Approx(2.0 / 3).epsilon(1e-9));
    CHECK(ens.master_weights()[1] == doctest::Approx(1.0 / 3).epsilon(1e-9));
}

TEST_CASE("mixture of fair policies stays fair") {
    Dims dims{2, 3, 2, 64};
    Target mu = Target::uniform(2, 3);
    TrialTarget tt(mu);
    EnsembleConfig mix_cfg;
    mix_cfg.dims = dims;
    DoublingEnsemble ens(mix_cfg, factory(dims));
    Rng rng(31);
    double worst = 0.0;
    PolicyRowFn rows = [&ens](int i, int x) { return ens.combined_row(i, x); };
    for (int t = 0; t < 64; ++t) {
        ens.begin(tt);
        worst = std::max(worst, parity_violation(rows, tt, dims.num_actions));
        Instance inst{static_cast<int>(rng.next_below(2)), static_cast<int>(rng.next_below(3))};
        std::vector<double> loss = {rng.next_double(), rng.next_double()};
        ens.finish(inst, loss);
    }
    CHECK(worst <= 1e-9);
}

TEST_CASE("single-sample training returns that trial's policy") {
    Dims dims{1, 2, 2, 1};
    Target mu = Target::uniform(1, 2);
    std::vector<LabeledExample> data = {{{0, 0}, {0.2, 0.9}}};
    EnsembleConfig cfg;
    cfg.dims = dims;
    Policy out = train_fair_classifier(data, mu, cfg, factory(dims));
    // one trial: fresh learners, raw rows uniform, beta = 0
    CHECK(out(0, 0, 0) == doctest::Approx(0.5));
    CHECK(out(0, 1, 1) == doctest::Approx(0.5));
}

TEST_CASE("training refuses an empty dataset") {
    Dims dims{1, 2, 2, 4};
    EnsembleConfig cfg;
    cfg.dims = dims;
    CHECK_THROWS_AS(
        train_fair_classifier({}, Target::uniform(1, 2), cfg, factory(dims)),
        std::invalid_argument);
}

TEST_CASE("a dominated action is learned out, M = 1") {
    Dims dims{1, 2, 2, 2000};
    Target mu = Target::uniform(1, 2);
    std::vector<LabeledExample> data;
    Rng rng(5);
    for (int t = 0; t < 2000; ++t)
        data.push_back({{0, static_cast<int>(rng.next_below(2))}, {0.0, 1.0}});
    EnsembleConfig cfg;
    cfg.dims = dims;
    Policy out = train_fair_classifier(data, mu, cfg, factory(dims));
    CHECK(out(0, 0, 0) >= 0.9);
    CHECK(out(0, 1, 0) >= 0.9);
    CHECK(parity_violation(out, mu) <= 1e-9);
}

TEST_CASE("generalisation regret basics") {
    Policy uniform = Policy::uniform(1, 1, 2);
    Policy best(1, 1, 2, 0.0);
    best(0, 0, 0) = 1.0;
    std::vector<WeightedExample> dist = {{{0, 0}, {0.0, 1.0}, 1.0}};
    CHECK(generalisation_regret(uniform, uniform, dist) == doctest::Approx(0.0));
    CHECK(generalisation_regret(uniform, best, dist) == doctest::Approx(0.5));
}

TEST_CASE("policy json export round-trips") {
    Policy p = Policy::uniform(2, 2, 3);
    p(1, 0, 0) = 0.6;
    p(1, 0, 1) = 0.3;
    p(1, 0, 2) = 0.1;
    Policy q = policy_from_json(policy_to_json(p));
    CHECK(q.num_groups == 2);
    for (std::size_t j = 0; j < p.probs.size(); ++j)
        CHECK(q.probs[j] == doctest::Approx(p.probs[j]).epsilon(1e-15));
}
