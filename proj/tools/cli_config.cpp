#include "cli_config.hpp"

#include "few/comparator.hpp"
#include "few/divergence.hpp"
#include "few/ensemble.hpp"
#include "few/exp4.hpp"
#include "few/fixed_share.hpp"
#include "few/runner.hpp"
#include "few/tabular_hedge.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <future>
#include <sstream>
#include <thread>

namespace few::cli {

namespace {

using nlohmann::json;

long line_of_offset(const std::string& text, std::size_t byte) {
    long line = 1;
    for (std::size_t j = 0; j < byte && j < text.size(); ++j)
        if (text[j] == '\n') ++line;
    return line;
}

long line_of_key(const std::string& text, const std::string& key) {
    std::size_t pos = text.find("\"" + key + "\"");
    if (pos == std::string::npos) return 1;
    return line_of_offset(text, pos);
}

[[noreturn]] void fail_at(const std::string& text, const std::string& key,
                          const std::string& message) {
    throw std::invalid_argument("line " + std::to_string(line_of_key(text, key)) + ": " +
                                message);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

} // namespace

RunConfig parse_run_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument("line " + std::to_string(line_of_offset(text, e.byte)) +
                                    ": " + e.what());
    }

    RunConfig cfg;
    try {
        const json& dims = j.at("dims");
        cfg.dims.num_groups = dims.at("groups").get<int>();
        cfg.dims.num_contexts = dims.at("contexts").get<int>();
        cfg.dims.num_actions = dims.at("actions").get<int>();
        cfg.dims.horizon = dims.at("horizon").get<long>();
    } catch (const json::exception& e) {
        fail_at(text, "dims", std::string("bad dims block: ") + e.what());
    }
    try {
        cfg.dims.validate();
    } catch (const std::exception& e) {
        fail_at(text, "dims", e.what());
    }

    cfg.algorithm = j.value("algorithm", cfg.algorithm);
    static const std::vector<std::string> algos = {"few-bandit", "few-full", "few-ensemble",
                                                   "exp4-baseline", "batch-classifier"};
    if (std::find(algos.begin(), algos.end(), cfg.algorithm) == algos.end())
        fail_at(text, "algorithm", "unknown algorithm " + cfg.algorithm);

    if (j.contains("base")) {
        const json& b = j.at("base");
        cfg.base.kind = b.value("kind", cfg.base.kind);
        cfg.base.alpha = b.value("alpha", cfg.base.alpha);
        cfg.base.gamma = b.value("gamma", cfg.base.gamma);
        cfg.base.depth_cap = b.value("depth_cap", cfg.base.depth_cap);
        cfg.base.eps_hat = b.value("eps_hat", cfg.base.eps_hat);
        cfg.base.n = b.value("n", cfg.base.n);
    }
    static const std::vector<std::string> bases = {"tabular", "fixedshare", "tree", "tree-iid"};
    if (std::find(bases.begin(), bases.end(), cfg.base.kind) == bases.end())
        fail_at(text, "base", "unknown base kind " + cfg.base.kind);

    cfg.eta = j.value("eta", cfg.eta);
    if (!(cfg.eta > 0.0)) fail_at(text, "eta", "eta must be positive");
    cfg.support_policy = j.value("support_policy", cfg.support_policy);
    if (cfg.support_policy != "strict" && cfg.support_policy != "lenient")
        fail_at(text, "support_policy", "must be strict or lenient");
    cfg.seed = j.value("seed", cfg.seed);
    cfg.out_dir = j.value("out_dir", cfg.out_dir);

    if (!j.contains("environment")) fail_at(text, "environment", "missing environment block");
    const json& e = j.at("environment");
    cfg.environment.kind = e.value("kind", "");
    const std::string& kind = cfg.environment.kind;
    if (kind == "scripted") {
        cfg.environment.script_path = e.value("script", "");
        if (cfg.environment.script_path.empty())
            fail_at(text, "environment", "scripted environment needs a script path");
    } else if (kind == "iid") {
        if (e.contains("target") && e.at("target").is_array())
            cfg.environment.target = e.at("target").get<std::vector<std::vector<double>>>();
        if (e.contains("group_probs"))
            cfg.environment.group_probs = e.at("group_probs").get<std::vector<double>>();
        if (e.contains("mean_loss"))
            cfg.environment.mean_loss =
                e.at("mean_loss").get<std::vector<std::vector<std::vector<double>>>>();
        cfg.environment.bernoulli = e.value("bernoulli", false);
    } else if (kind == "dynamic") {
        cfg.environment.bernoulli = e.value("bernoulli", false);
        for (const json& p : e.at("phases")) {
            EnvSpec::Phase phase;
            phase.first_trial = p.value("first_trial", 1L);
            phase.instance_probs = p.at("instance_probs").get<std::vector<std::vector<double>>>();
            phase.mean_loss = p.at("mean_loss").get<std::vector<std::vector<std::vector<double>>>>();
            cfg.environment.phases.push_back(std::move(phase));
        }
    } else if (kind == "adversarial-random") {
        cfg.environment.sparsity = e.value("sparsity", 0.0);
    } else if (kind == "continuous-iid") {
        cfg.environment.densities = e.at("densities").get<std::vector<std::vector<double>>>();
        if (e.contains("group_probs"))
            cfg.environment.group_probs = e.at("group_probs").get<std::vector<double>>();
    } else {
        fail_at(text, "environment", "unknown environment kind '" + kind + "'");
    }

    if (cfg.base.kind == "tree" || cfg.base.kind == "tree-iid") {
        if (kind != "continuous-iid")
            fail_at(text, "base", "tree bases need a continuous-iid environment");
        if (cfg.algorithm != "few-bandit")
            fail_at(text, "algorithm", "tree bases run under few-bandit only");
    }
    if (kind == "continuous-iid" && cfg.base.kind != "tree" && cfg.base.kind != "tree-iid")
        fail_at(text, "environment", "continuous-iid environments need a tree base");

    if (j.contains("report")) {
        cfg.report.best_fair_regret = j.at("report").value("best_fair_regret", false);
        if (j.at("report").contains("phi"))
            cfg.report.phi = j.at("report").at("phi").get<double>();
    }
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    RunConfig cfg = parse_run_config(read_file(path));
    if (cfg.environment.kind == "scripted") {
        std::filesystem::path script = cfg.environment.script_path;
        if (script.is_relative()) script = path.parent_path() / script;
        if (!std::filesystem::exists(script))
            throw std::invalid_argument("referenced script does not exist: " + script.string());
        cfg.environment.script_path = script.string();
    }
    return cfg;
}

std::string run_config_to_json(const RunConfig& cfg) {
    json j;
    j["dims"] = {{"groups", cfg.dims.num_groups},
                 {"contexts", cfg.dims.num_contexts},
                 {"actions", cfg.dims.num_actions},
                 {"horizon", cfg.dims.horizon}};
    j["algorithm"] = cfg.algorithm;
    j["base"] = {{"kind", cfg.base.kind},   {"alpha", cfg.base.alpha},
                 {"gamma", cfg.base.gamma}, {"depth_cap", cfg.base.depth_cap},
                 {"eps_hat", cfg.base.eps_hat}, {"n", cfg.base.n}};
    j["eta"] = cfg.eta;
    j["support_policy"] = cfg.support_policy;
    j["seed"] = cfg.seed;
    j["out_dir"] = cfg.out_dir;
    json env;
    env["kind"] = cfg.environment.kind;
    if (cfg.environment.kind == "scripted") env["script"] = cfg.environment.script_path;
    if (cfg.environment.kind == "iid") {
        if (!cfg.environment.target.empty()) env["target"] = cfg.environment.target;
        if (!cfg.environment.group_probs.empty())
            env["group_probs"] = cfg.environment.group_probs;
        if (!cfg.environment.mean_loss.empty()) env["mean_loss"] = cfg.environment.mean_loss;
        env["bernoulli"] = cfg.environment.bernoulli;
    }
    if (cfg.environment.kind == "dynamic") {
        env["bernoulli"] = cfg.environment.bernoulli;
        json phases = json::array();
        for (const auto& p : cfg.environment.phases)
            phases.push_back({{"first_trial", p.first_trial},
                              {"instance_probs", p.instance_probs},
                              {"mean_loss", p.mean_loss}});
        env["phases"] = std::move(phases);
    }
    if (cfg.environment.kind == "adversarial-random") env["sparsity"] = cfg.environment.sparsity;
    if (cfg.environment.kind == "continuous-iid") {
        env["densities"] = cfg.environment.densities;
        if (!cfg.environment.group_probs.empty())
            env["group_probs"] = cfg.environment.group_probs;
    }
    j["environment"] = std::move(env);
    if (cfg.report.best_fair_regret || cfg.report.phi) {
        json rep;
        rep["best_fair_regret"] = cfg.report.best_fair_regret;
        if (cfg.report.phi) rep["phi"] = *cfg.report.phi;
        j["report"] = std::move(rep);
    }
    return j.dump(2);
}

SweepGrid parse_sweep_grid(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument("line " + std::to_string(line_of_offset(text, e.byte)) +
                                    ": " + e.what());
    }
    SweepGrid grid;
    if (j.contains("horizon")) grid.horizons = j.at("horizon").get<std::vector<long>>();
    if (j.contains("eta")) grid.etas = j.at("eta").get<std::vector<double>>();
    if (j.contains("seeds")) grid.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (grid.horizons.empty() && grid.etas.empty() && grid.seeds.empty())
        throw std::invalid_argument("sweep grid lists no axes (horizon, eta, seeds)");
    return grid;
}

namespace {

std::unique_ptr<Environment> build_discrete_env(const RunConfig& cfg) {
    const EnvSpec& e = cfg.environment;
    const Dims& dims = cfg.dims;
    if (e.kind == "scripted") {
        std::vector<TrialRecord> script = script_from_jsonl(read_file(e.script_path), dims);
        return std::make_unique<ScriptedEnvironment>(dims, std::move(script));
    }
    if (e.kind == "iid") {
        Target target = e.target.empty() ? Target::uniform(dims.num_groups, dims.num_contexts)
                                         : Target(dims.num_groups, dims.num_contexts);
        if (!e.target.empty())
            for (int i = 0; i < dims.num_groups; ++i)
                for (int x = 0; x < dims.num_contexts; ++x) target(i, x) = e.target.at(i).at(x);
        std::vector<double> gp = e.group_probs;
        if (gp.empty()) gp.assign(dims.num_groups, 1.0 / dims.num_groups);
        std::vector<double> mean(static_cast<std::size_t>(dims.num_groups) * dims.num_contexts *
                                     dims.num_actions,
                                 0.5);
        if (!e.mean_loss.empty())
            for (int i = 0; i < dims.num_groups; ++i)
                for (int x = 0; x < dims.num_contexts; ++x)
                    for (int a = 0; a < dims.num_actions; ++a)
                        mean[(static_cast<std::size_t>(i) * dims.num_contexts + x) *
                                 dims.num_actions +
                             a] = e.mean_loss.at(i).at(x).at(a);
        return std::make_unique<IidEnvironment>(dims, std::move(target), std::move(gp),
                                                std::move(mean), e.bernoulli);
    }
    if (e.kind == "dynamic") {
        std::vector<DynamicEmpiricalEnvironment::Phase> phases;
        for (const auto& p : e.phases) {
            DynamicEmpiricalEnvironment::Phase phase;
            phase.first_trial = p.first_trial;
            for (const auto& row : p.instance_probs)
                phase.instance_probs.insert(phase.instance_probs.end(), row.begin(), row.end());
            for (const auto& block : p.mean_loss)
                for (const auto& row : block)
                    phase.mean_loss.insert(phase.mean_loss.end(), row.begin(), row.end());
            phases.push_back(std::move(phase));
        }
        return std::make_unique<DynamicEmpiricalEnvironment>(dims, std::move(phases),
                                                             e.bernoulli);
    }
    if (e.kind == "adversarial-random")
        return std::make_unique<AdversarialRandomEnvironment>(dims, e.sparsity);
    throw std::invalid_argument("environment kind not usable here: " + e.kind);
}

std::vector<std::unique_ptr<BaseLearner>> build_learners(const RunConfig& cfg, double rate) {
    std::vector<std::unique_ptr<BaseLearner>> out;
    for (int i = 0; i < cfg.dims.num_groups; ++i) {
        if (cfg.base.kind == "tabular") {
            out.push_back(std::make_unique<TabularHedge>(cfg.dims.num_contexts,
                                                         cfg.dims.num_actions,
                                                         HedgeConfig{rate}));
        } else {
            double alpha =
                cfg.base.alpha >= 0.0 ? cfg.base.alpha : 1.0 / static_cast<double>(cfg.dims.horizon);
            out.push_back(std::make_unique<FixedShare>(cfg.dims.num_contexts,
                                                       cfg.dims.num_actions, HedgeConfig{rate},
                                                       alpha));
        }
    }
    return out;
}

SupportPolicy support_of(const RunConfig& cfg) {
    return cfg.support_policy == "strict" ? SupportPolicy::strict : SupportPolicy::lenient;
}

RunSummary summarize(const RunConfig& cfg, const RunTrace& trace) {
    RunSummary summary;
    summary.cum_loss = trace.cum_loss();
    ParityAudit audit = parity_audit(trace);
    summary.parity_max = audit.max;
    summary.parity_mean = audit.mean;

    bool fair_algorithm = cfg.algorithm != "exp4-baseline";
    if (cfg.report.best_fair_regret) {
        std::vector<TrialRecord> script;
        script.reserve(trace.rows.size());
        for (const auto& r : trace.rows)
            script.push_back({r.target, r.instance, r.loss_vec});
        FairLpOptions opts;
        opts.iterations = 2000;
        opts.cert_samples = 100000;
        FairLpResult best = best_fair_comparator(script, cfg.dims, opts);
        summary.regret = regret(trace, Comparator::single(best.policy));
    }
    if (cfg.report.phi) {
        double eta = FewConfig{cfg.dims, cfg.eta}.clamped_eta();
        summary.bound_value =
            (8.0 * eta + *cfg.report.phi / eta) *
            std::sqrt(static_cast<double>(cfg.dims.num_actions) * cfg.dims.horizon);
    }

    // tree-iid traces record the violation against the true measure, whose
    // guarantee is the 4 h eps approximation bound, not exact parity
    double parity_bar = 1e-9;
    if (cfg.base.kind == "tree-iid")
        parity_bar = 4.0 * cfg.base.depth_cap * cfg.base.eps_hat;
    summary.pass = true;
    if (fair_algorithm && summary.parity_max > parity_bar) summary.pass = false;
    if (summary.regret && summary.bound_value && *summary.regret > *summary.bound_value)
        summary.pass = false;
    return summary;
}

RunTrace run_tree_config(const RunConfig& cfg) {
    const EnvSpec& e = cfg.environment;
    std::vector<PiecewiseDensity> densities;
    for (const auto& cells : e.densities) densities.emplace_back(cells);
    std::vector<double> gp = e.group_probs;
    if (gp.empty()) gp.assign(cfg.dims.num_groups, 1.0 / cfg.dims.num_groups);
    ContinuousIidEnvironment env(cfg.dims.num_groups, cfg.dims.num_actions, cfg.dims.horizon,
                                 densities, gp);

    TreeConfig tcfg;
    tcfg.prior = TreePrior{cfg.base.gamma};
    tcfg.depth_cap = cfg.base.depth_cap;
    bool empirical = cfg.base.kind == "tree-iid";
    tcfg.mode = empirical ? TreeMode::empirical : TreeMode::known_target;
    if (empirical)
        tcfg.sample_threshold = cfg.base.n > 0 ? cfg.base.n
                                               : required_sample_size(cfg.dims.horizon,
                                                                      cfg.base.depth_cap,
                                                                      cfg.base.eps_hat);

    FewConfig fc;
    fc.dims = cfg.dims;
    fc.eta = cfg.eta;
    fc.mode = FeedbackMode::bandit;
    fc.support_policy = empirical ? SupportPolicy::lenient : support_of(cfg);

    MassOracle oracle = [&env](int group, double lo, double hi) {
        return env.true_mass(group, lo, hi);
    };
    TreeReduction reduction(cfg.dims.num_groups, cfg.dims.num_actions, tcfg,
                            HedgeConfig{fc.hedge_rate()}, empirical ? nullptr : oracle);
    FewEngine engine(fc, reduction.make_learners());
    return run_few_tree(engine, reduction, env, cfg.seed, empirical);
}

} // namespace

CliRunResult execute_run(const RunConfig& cfg, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);

    {
        FewConfig probe;
        probe.dims = cfg.dims;
        probe.eta = cfg.eta;
        if (probe.eta_clamped())
            std::fprintf(stderr, "warning: eta %g clamped to %g (sqrt(horizon/actions))\n",
                         cfg.eta, probe.clamped_eta());
    }

    RunTrace trace;
    if (cfg.base.kind == "tree" || cfg.base.kind == "tree-iid") {
        trace = run_tree_config(cfg);
    } else if (cfg.algorithm == "few-bandit" || cfg.algorithm == "few-full") {
        FewConfig fc;
        fc.dims = cfg.dims;
        fc.eta = cfg.eta;
        fc.mode = cfg.algorithm == "few-bandit" ? FeedbackMode::bandit
                                                : FeedbackMode::full_information;
        fc.support_policy = support_of(cfg);
        FewEngine engine(fc, build_learners(cfg, fc.hedge_rate()));
        auto env = build_discrete_env(cfg);
        trace = run_few(engine, *env, cfg.seed);
    } else if (cfg.algorithm == "few-ensemble" || cfg.algorithm == "batch-classifier") {
        EnsembleConfig ecfg;
        ecfg.dims = cfg.dims;
        RunConfig learner_cfg = cfg;
        LearnerSetFactory factory = [&learner_cfg](double rate) {
            return build_learners(learner_cfg, rate);
        };
        DoublingEnsemble ensemble(ecfg, factory, support_of(cfg));
        auto env = build_discrete_env(cfg);
        trace = run_ensemble(ensemble, *env, cfg.seed);
        if (cfg.algorithm == "batch-classifier") {
            // averaged-policy export for downstream parity audits
            auto env2 = build_discrete_env(cfg);
            env2->reset(Rng(cfg.seed).split(2));
            DoublingEnsemble ens2(ecfg, factory, support_of(cfg));
            AveragedPolicy avg(cfg.dims.num_groups, cfg.dims.num_contexts,
                               cfg.dims.num_actions);
            PolicyRowFn rows = [&ens2](int i, int x) { return ens2.combined_row(i, x); };
            for (long t = 0; t < cfg.dims.horizon; ++t) {
                TrialRecord rec = env2->next();
                ens2.begin(rec.target);
                avg.add(rows, rec.target);
                ens2.finish(rec.instance, rec.loss);
            }
            write_file(out_dir / "policy.json", policy_to_json(avg.average()));
        }
    } else if (cfg.algorithm == "exp4-baseline") {
        FewConfig fc;
        fc.dims = cfg.dims;
        fc.eta = cfg.eta;
        Exp4PerGroup baseline(cfg.dims, Exp4PerGroup::default_exploration(cfg.dims),
                              build_learners(cfg, fc.hedge_rate()));
        auto env = build_discrete_env(cfg);
        trace = run_exp4(baseline, *env, cfg.seed);
    } else {
        throw std::invalid_argument("unsupported algorithm: " + cfg.algorithm);
    }

    write_file(out_dir / "trace.csv", trace_to_csv(trace));
    write_file(out_dir / "trace.jsonl", trace_to_jsonl(trace));
    RunSummary summary = summarize(cfg, trace);
    write_file(out_dir / "summary.json", summary_to_json(summary));

    CliRunResult result;
    result.cum_loss = summary.cum_loss;
    result.parity_max = summary.parity_max;
    result.parity_mean = summary.parity_mean;
    result.regret = summary.regret;
    result.bound_value = summary.bound_value;
    result.pass = summary.pass;
    return result;
}

int execute_sweep(const RunConfig& base, const SweepGrid& grid,
                  const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    std::vector<long> horizons = grid.horizons.empty() ? std::vector<long>{base.dims.horizon}
                                                       : grid.horizons;
    std::vector<double> etas = grid.etas.empty() ? std::vector<double>{base.eta} : grid.etas;
    std::vector<std::uint64_t> seeds =
        grid.seeds.empty() ? std::vector<std::uint64_t>{base.seed} : grid.seeds;

    struct Cell {
        RunConfig cfg;
        std::filesystem::path dir;
        long horizon;
        double eta;
        std::uint64_t seed;
        CliRunResult result;
        bool failed = false;
        std::string error;
    };
    std::vector<Cell> cells;
    int index = 0;
    for (long T : horizons)
        for (double eta : etas)
            for (std::uint64_t seed : seeds) {
                Cell c;
                c.cfg = base;
                c.cfg.dims.horizon = T;
                c.cfg.eta = eta;
                c.cfg.seed = seed;
                c.horizon = T;
                c.eta = eta;
                c.seed = seed;
                c.dir = out_dir / ("cell_" + std::to_string(index++));
                cells.push_back(std::move(c));
            }

    unsigned workers = std::max(1u, std::thread::hardware_concurrency());
    std::atomic<std::size_t> cursor{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (;;) {
                std::size_t mine = cursor.fetch_add(1);
                if (mine >= cells.size()) return;
                try {
                    cells[mine].result = execute_run(cells[mine].cfg, cells[mine].dir);
                } catch (const std::exception& e) {
                    cells[mine].failed = true;
                    cells[mine].error = e.what();
                }
            }
        });
    for (auto& t : pool) t.join();

    // aggregate: per-horizon means and a log-log slope over horizons
    nlohmann::json report;
    nlohmann::json cell_list = nlohmann::json::array();
    bool any_failed = false;
    for (const auto& c : cells) {
        nlohmann::json jc;
        jc["dir"] = c.dir.filename().string();
        jc["horizon"] = c.horizon;
        jc["eta"] = c.eta;
        jc["seed"] = c.seed;
        if (c.failed) {
            jc["error"] = c.error;
            any_failed = true;
        } else {
            jc["cum_loss"] = c.result.cum_loss;
            jc["parity_max"] = c.result.parity_max;
            if (c.result.regret) jc["regret"] = *c.result.regret;
            jc["pass"] = c.result.pass;
        }
        cell_list.push_back(std::move(jc));
    }
    report["cells"] = std::move(cell_list);

    if (horizons.size() >= 2) {
        std::vector<double> log_t, log_v;
        for (long T : horizons) {
            double sum = 0.0;
            long count = 0;
            for (const auto& c : cells)
                if (!c.failed && c.horizon == T) {
                    sum += c.result.regret ? *c.result.regret : c.result.cum_loss;
                    ++count;
                }
            if (count == 0) continue;
            log_t.push_back(std::log(static_cast<double>(T)));
            log_v.push_back(std::log(std::max(sum / count, 1e-12)));
        }
        if (log_t.size() >= 2) {
            double mt = 0.0, mv = 0.0;
            for (std::size_t q = 0; q < log_t.size(); ++q) {
                mt += log_t[q];
                mv += log_v[q];
            }
            mt /= log_t.size();
            mv /= log_v.size();
            double num = 0.0, den = 0.0;
            for (std::size_t q = 0; q < log_t.size(); ++q) {
                num += (log_t[q] - mt) * (log_v[q] - mv);
                den += (log_t[q] - mt) * (log_t[q] - mt);
            }
            report["slope_vs_horizon"] = num / den;
        }
    }
    report["all_cells_ok"] = !any_failed;
    write_file(out_dir / "sweep_report.json", report.dump(2));
    return any_failed ? 1 : 0;
}

} // namespace few::cli
