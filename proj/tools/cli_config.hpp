#pragma once

#include "few/engine.hpp"
#include "few/environment.hpp"
#include "few/tree.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace few::cli {

struct BaseSpec {
    std::string kind = "tabular"; // tabular | fixedshare | tree | tree-iid
    double alpha = -1.0;          // fixedshare share rate; default 1/T
    double gamma = 0.1;           // tree edge switch probability
    int depth_cap = 20;
    double eps_hat = 0.25; // tree-iid approximation parameter
    long n = 0;            // tree-iid sample threshold; 0 derives it from eps_hat
};

struct EnvSpec {
    std::string kind; // scripted | iid | dynamic | adversarial-random | continuous-iid
    std::string script_path;
    std::vector<std::vector<double>> target;     // iid
    std::vector<double> group_probs;             // iid / continuous-iid
    std::vector<std::vector<std::vector<double>>> mean_loss; // iid: [i][x][a]
    bool bernoulli = false;
    double sparsity = 0.0; // adversarial-random
    struct Phase {
        long first_trial = 1;
        std::vector<std::vector<double>> instance_probs;       // [i][x]
        std::vector<std::vector<std::vector<double>>> mean_loss; // [i][x][a]
    };
    std::vector<Phase> phases;                    // dynamic
    std::vector<std::vector<double>> densities;   // continuous-iid cell masses per group
};

struct ReportSpec {
    bool best_fair_regret = false; // solve the fair LP on the realized script
    std::optional<double> phi;     // complexity term for the regret bound
};

struct RunConfig {
    Dims dims;
    std::string algorithm = "few-bandit";
    // few-bandit | few-full | few-ensemble | exp4-baseline | batch-classifier
    BaseSpec base;
    EnvSpec environment;
    double eta = 1.0;
    std::string support_policy = "strict";
    std::uint64_t seed = 1;
    std::string out_dir = "out";
    ReportSpec report;
};

// Throws std::invalid_argument with "line N: ..." prefixes on bad input.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);
std::string run_config_to_json(const RunConfig& cfg);

struct SweepGrid {
    std::vector<long> horizons;
    std::vector<double> etas;
    std::vector<std::uint64_t> seeds;
};
SweepGrid parse_sweep_grid(const std::string& text);

struct CliRunResult {
    double cum_loss = 0.0;
    double parity_max = 0.0;
    double parity_mean = 0.0;
    std::optional<double> regret;
    std::optional<double> bound_value;
    bool pass = false;
};

// Executes one configured run, writing trace.csv, trace.jsonl and
// summary.json under out_dir. Returns the summary numbers.
CliRunResult execute_run(const RunConfig& cfg, const std::filesystem::path& out_dir);

// Cross product of the grid over the base config; cells run in a worker
// pool, one directory per cell, plus an aggregate report with the log-log
// slope of mean regret (or loss) against the horizon.
int execute_sweep(const RunConfig& base, const SweepGrid& grid,
                  const std::filesystem::path& out_dir);

} // namespace few::cli
