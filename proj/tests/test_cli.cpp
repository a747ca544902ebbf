#include "cli_config.hpp"

#include "few/ensemble.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace few::cli;

namespace {

const char* kMinimalConfig = R"({
  "dims": {"groups": 2, "contexts": 2, "actions": 2, "horizon": 10},
  "algorithm": "few-bandit",
  "base": {"kind": "tabular"},
  "eta": 1.0,
  "environment": {"kind": "adversarial-random", "sparsity": 0.2},
  "seed": 5,
  "out_dir": "out"
})";

} // namespace

TEST_CASE("config parse and round-trip identity") {
    RunConfig a = parse_run_config(kMinimalConfig);
    RunConfig b = parse_run_config(run_config_to_json(a));
    CHECK(run_config_to_json(a) == run_config_to_json(b));
    CHECK(b.dims.num_groups == 2);
    CHECK(b.environment.kind == "adversarial-random");
    CHECK(b.seed == 5);
}

TEST_CASE("invalid dims report a line number") {
    std::string bad = kMinimalConfig;
    auto pos = bad.find("\"groups\": 2");
    bad.replace(pos, 11, "\"groups\": 0");
    try {
        parse_run_config(bad);
        FAIL("expected a parse failure");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).rfind("line ", 0) == 0);
    }
}

TEST_CASE("malformed json reports the offending line") {
    std::string broken = "{\n  \"dims\": {\n  BROKEN\n}\n}";
    try {
        parse_run_config(broken);
        FAIL("expected a parse failure");
    } catch (const std::invalid_argument& e) {
        std::string msg = e.what();
        CHECK(msg.rfind("line ", 0) == 0);
        CHECK(msg.find("line 3") != std::string::npos);
    }
}

TEST_CASE("unknown algorithm is rejected") {
    std::string bad = kMinimalConfig;
    auto pos = bad.find("few-bandit");
    bad.replace(pos, 10, "mystery");
    CHECK_THROWS_AS(parse_run_config(bad), std::invalid_argument);
}

TEST_CASE("tree bases demand a continuous environment") {
    std::string bad = kMinimalConfig;
    auto pos = bad.find("tabular");
    bad.replace(pos, 7, "tree");
    CHECK_THROWS_AS(parse_run_config(bad), std::invalid_argument);
}

TEST_CASE("sweep grid parsing") {
    SweepGrid g = parse_sweep_grid(R"({"horizon": [256, 1024], "seeds": [1, 2, 3]})");
    CHECK(g.horizons.size() == 2);
    CHECK(g.seeds.size() == 3);
    CHECK_THROWS_AS(parse_sweep_grid("{}"), std::invalid_argument);
}

TEST_CASE("minimal run writes schema-stable outputs") {
    RunConfig cfg = parse_run_config(kMinimalConfig);
    auto dir = std::filesystem::temp_directory_path() / "few_cli_test_run";
    std::filesystem::remove_all(dir);
    CliRunResult result = execute_run(cfg, dir);
    CHECK(result.parity_max <= 1e-9);
    CHECK(result.pass);

    REQUIRE(std::filesystem::exists(dir / "trace.csv"));
    REQUIRE(std::filesystem::exists(dir / "trace.jsonl"));
    REQUIRE(std::filesystem::exists(dir / "summary.json"));

    std::ifstream csv(dir / "trace.csv");
    std::string header;
    std::getline(csv, header);
    CHECK(header == "t,beta,parity,loss,exp_loss");

    std::ifstream sum(dir / "summary.json");
    std::string summary((std::istreambuf_iterator<char>(sum)),
                        std::istreambuf_iterator<char>());
    for (const char* key : {"cum_loss", "regret", "bound_value", "parity_max", "parity_mean",
                            "pass"})
        CHECK(summary.find(key) != std::string::npos);
    std::filesystem::remove_all(dir);
}

TEST_CASE("scripted config round-trips through jsonl on disk") {
    namespace fs = std::filesystem;
    auto dir = fs::temp_directory_path() / "few_cli_script";
    fs::create_directories(dir);

    std::ofstream script(dir / "script.jsonl");
    script << R"({"mu": [[0.5, 0.5], [0.5, 0.5]], "i": 0, "x": 1, "loss": [0.0, 1.0]})" << "\n";
    script << R"({"mu": [[1.0, 0.0], [0.5, 0.5]], "i": 1, "x": 0, "loss": [0.5, 0.5]})" << "\n";
    script.close();

    std::string cfg_text = R"({
      "dims": {"groups": 2, "contexts": 2, "actions": 2, "horizon": 2},
      "algorithm": "few-bandit",
      "environment": {"kind": "scripted", "script": "script.jsonl"},
      "seed": 1, "out_dir": "out"
    })";
    std::ofstream cfg_file(dir / "config.json");
    cfg_file << cfg_text;
    cfg_file.close();

    RunConfig cfg = load_run_config(dir / "config.json");
    CliRunResult result = execute_run(cfg, dir / "out");
    CHECK(result.parity_max <= 1e-9);
    fs::remove_all(dir);
}

TEST_CASE("sweep runs every cell and reports a slope") {
    RunConfig cfg = parse_run_config(kMinimalConfig);
    SweepGrid grid;
    grid.horizons = {64, 256};
    grid.seeds = {1, 2};
    auto dir = std::filesystem::temp_directory_path() / "few_cli_sweep";
    std::filesystem::remove_all(dir);
    int rc = execute_sweep(cfg, grid, dir);
    CHECK(rc == 0);
    for (int c = 0; c < 4; ++c)
        CHECK(std::filesystem::exists(dir / ("cell_" + std::to_string(c)) / "summary.json"));
    std::ifstream in(dir / "sweep_report.json");
    std::string report((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(report.find("slope_vs_horizon") != std::string::npos);
    CHECK(report.find("\"all_cells_ok\": true") != std::string::npos);
    std::filesystem::remove_all(dir);
}

TEST_CASE("batch classifier run exports a fair policy tensor") {
    std::string text = R"({
      "dims": {"groups": 2, "contexts": 2, "actions": 2, "horizon": 60},
      "algorithm": "batch-classifier",
      "environment": {"kind": "iid", "bernoulli": true},
      "seed": 3
    })";
    RunConfig cfg = parse_run_config(text);
    auto dir = std::filesystem::temp_directory_path() / "few_cli_batch";
    std::filesystem::remove_all(dir);
    CliRunResult result = execute_run(cfg, dir);
    CHECK(result.pass);
    REQUIRE(std::filesystem::exists(dir / "policy.json"));
    std::ifstream in(dir / "policy.json");
    std::string text_out((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
    few::Policy exported = few::policy_from_json(text_out);
    CHECK(exported.valid());
    CHECK(few::parity_violation(exported, few::Target::uniform(2, 2)) <= 1e-9);
    std::filesystem::remove_all(dir);
}

TEST_CASE("ensemble algorithm runs through the cli layer") {
    std::string text = R"({
      "dims": {"groups": 2, "contexts": 2, "actions": 2, "horizon": 40},
      "algorithm": "few-ensemble",
      "environment": {"kind": "iid", "bernoulli": true},
      "seed": 4
    })";
    RunConfig cfg = parse_run_config(text);
    auto dir = std::filesystem::temp_directory_path() / "few_cli_ens";
    std::filesystem::remove_all(dir);
    CliRunResult result = execute_run(cfg, dir);
    CHECK(result.parity_max <= 1e-9);
    std::filesystem::remove_all(dir);
}

TEST_CASE("tree-iid run audits against the true measure") {
    std::string text = R"({
      "dims": {"groups": 2, "contexts": 16, "actions": 2, "horizon": 400},
      "algorithm": "few-bandit",
      "base": {"kind": "tree-iid", "gamma": 0.1, "depth_cap": 4, "n": 40},
      "environment": {
        "kind": "continuous-iid",
        "densities": [[0.7, 0.1, 0.1, 0.1], [0.1, 0.2, 0.3, 0.4]]
      },
      "seed": 9
    })";
    RunConfig cfg = parse_run_config(text);
    auto dir = std::filesystem::temp_directory_path() / "few_cli_tree";
    std::filesystem::remove_all(dir);
    CliRunResult result = execute_run(cfg, dir);
    // the parity column holds the true-measure violation: bounded by the
    // approximation guarantee, not by exact parity
    CHECK(result.parity_max <= 4.0 * 4 * 0.25);
    CHECK(result.pass);
    std::filesystem::remove_all(dir);
}

TEST_CASE("missing script file is a config error") {
    namespace fs = std::filesystem;
    auto dir = fs::temp_directory_path() / "few_cli_missing";
    fs::create_directories(dir);
    std::ofstream cfg_file(dir / "config.json");
    cfg_file << R"({
      "dims": {"groups": 1, "contexts": 1, "actions": 2, "horizon": 1},
      "environment": {"kind": "scripted", "script": "nope.jsonl"}
    })";
    cfg_file.close();
    CHECK_THROWS_AS(load_run_config(dir / "config.json"), std::invalid_argument);
    fs::remove_all(dir);
}
