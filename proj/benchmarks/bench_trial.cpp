#include "few/engine.hpp"
#include "few/environment.hpp"
#include "few/runner.hpp"
#include "few/tabular_hedge.hpp"
#include "few/tree.hpp"

#include <benchmark/benchmark.h>

using namespace few;

namespace {

FewEngine make_engine(const Dims& dims) {
    FewConfig cfg;
    cfg.dims = dims;
    cfg.eta = 1.0;
    std::vector<std::unique_ptr<BaseLearner>> learners;
    for (int i = 0; i < dims.num_groups; ++i)
        learners.push_back(std::make_unique<TabularHedge>(dims.num_contexts, dims.num_actions,
                                                          HedgeConfig{cfg.hedge_rate()}));
    return FewEngine(std::move(cfg), std::move(learners));
}

void BM_TabularTrial(benchmark::State& state) {
    Dims dims{static_cast<int>(state.range(0)), static_cast<int>(state.range(1)),
              static_cast<int>(state.range(2)), 1 << 20};
    FewEngine engine = make_engine(dims);
    AdversarialRandomEnvironment env(dims, 0.2);
    env.reset(Rng(7));
    Rng rng(13);
    for (auto _ : state) {
        TrialRecord rec = env.next();
        engine.begin_trial(rec.target);
        int a = engine.act(rec.instance, rng);
        engine.feedback_bandit(rec.loss[a]);
        benchmark::DoNotOptimize(engine.trial().beta);
    }
}
BENCHMARK(BM_TabularTrial)->Args({2, 4, 2})->Args({4, 8, 5});

void BM_TrialParityAudit(benchmark::State& state) {
    Dims dims{4, 8, 5, 1 << 20};
    FewEngine engine = make_engine(dims);
    AdversarialRandomEnvironment env(dims, 0.0);
    env.reset(Rng(7));
    TrialRecord rec = env.next();
    engine.begin_trial(rec.target);
    for (auto _ : state) benchmark::DoNotOptimize(engine.trial_parity());
}
BENCHMARK(BM_TrialParityAudit);

void BM_TreeQuery(benchmark::State& state) {
    int depth = static_cast<int>(state.range(0));
    MassOracle unif = [](int, double lo, double hi) { return hi - lo; };
    GroupSubtree tree(0, 2, TreePrior{0.1}, HedgeConfig{0.05}, depth, TreeMode::known_target, 0,
                      unif);
    Rng rng(3);
    for (int d = 0; d < depth; ++d) tree.grow(tree.locate_leaf(rng.next_double()));
    std::vector<double> g = {0.4, -0.4};
    for (int leaf : tree.leaves()) tree.bp_update(leaf, g);
    double x = 0.37;
    for (auto _ : state) {
        int leaf = tree.locate_leaf(x);
        benchmark::DoNotOptimize(tree.bp_query(leaf));
    }
}
BENCHMARK(BM_TreeQuery)->Arg(4)->Arg(12)->Arg(20);

void BM_TreeTrial(benchmark::State& state) {
    const int M = 2, K = 2;
    std::vector<PiecewiseDensity> densities(2, PiecewiseDensity({0.3, 0.2, 0.1, 0.4}));
    ContinuousIidEnvironment env(M, K, 1 << 20, densities, {0.5, 0.5});
    env.reset(Rng(11));
    TreeConfig tcfg;
    tcfg.depth_cap = 12;
    tcfg.mode = TreeMode::empirical;
    tcfg.sample_threshold = 64;
    Dims dims{M, 1 << 12, K, 1 << 20};
    FewConfig fc;
    fc.dims = dims;
    fc.support_policy = SupportPolicy::lenient;
    TreeReduction reduction(M, K, tcfg, HedgeConfig{fc.hedge_rate()}, nullptr);
    FewEngine engine(fc, reduction.make_learners());
    Rng rng(5);
    for (auto _ : state) {
        ContinuousTrialRecord rec = env.next();
        engine.begin_trial(reduction.trial_target());
        int leaf = reduction.locate(rec.group, rec.x);
        int a = engine.act({rec.group, leaf}, rng);
        engine.feedback_bandit(rec.loss[a]);
        reduction.end_trial(rec.group, rec.x);
    }
}
BENCHMARK(BM_TreeTrial);

} // namespace
