#include "cli_config.hpp"

#include "few/engine.hpp"
#include "few/verify.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

constexpr int kExitConfigError = 2;
constexpr int kExitProtocolError = 3;

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"fair exponential-weights contextual bandit experiments"};
    app.require_subcommand(1);

    std::string config_path;
    std::string grid_path;
    std::string out_dir;
    std::uint64_t seed_override = 0;
    bool seed_given = false;
    std::string scale = "quick";

    CLI::App* run = app.add_subcommand("run", "execute one configured run");
    run->add_option("--config", config_path, "run config JSON")->required();
    run->add_option("--out-dir", out_dir, "output directory (overrides config)");
    run->add_option("--seed", seed_override, "seed (overrides config)")
        ->each([&](const std::string&) { seed_given = true; });

    CLI::App* sweep = app.add_subcommand("sweep", "run a grid of configurations");
    sweep->add_option("--config", config_path, "base run config JSON")->required();
    sweep->add_option("--grid", grid_path, "sweep grid JSON")->required();
    sweep->add_option("--out-dir", out_dir, "output directory (overrides config)");
    sweep->add_option("--seed", seed_override, "base seed (overrides config)")
        ->each([&](const std::string&) { seed_given = true; });

    CLI::App* verify = app.add_subcommand("verify", "run the invariant suite");
    verify->add_option("--scale", scale, "quick or full")
        ->check(CLI::IsMember({"quick", "full"}));
    verify->add_option("--out-dir", out_dir, "where to write verify_report.json");
    verify->add_option("--seed", seed_override, "suite seed")
        ->each([&](const std::string&) { seed_given = true; });

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed() || sweep->parsed()) {
            few::cli::RunConfig cfg;
            try {
                cfg = few::cli::load_run_config(config_path);
            } catch (const std::exception& e) {
                std::cerr << config_path << ": " << e.what() << "\n";
                return kExitConfigError;
            }
            if (seed_given) cfg.seed = seed_override;
            if (!out_dir.empty()) cfg.out_dir = out_dir;

            if (run->parsed()) {
                few::cli::CliRunResult result = few::cli::execute_run(cfg, cfg.out_dir);
                std::cout << "cum_loss=" << result.cum_loss
                          << " parity_max=" << result.parity_max << " pass="
                          << (result.pass ? "true" : "false") << "\n";
                return 0;
            }

            few::cli::SweepGrid grid;
            try {
                std::ifstream in(grid_path);
                if (!in) throw std::invalid_argument("cannot open " + grid_path);
                std::string text((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
                grid = few::cli::parse_sweep_grid(text);
            } catch (const std::exception& e) {
                std::cerr << grid_path << ": " << e.what() << "\n";
                return kExitConfigError;
            }
            return few::cli::execute_sweep(cfg, grid, cfg.out_dir);
        }

        if (verify->parsed()) {
            few::VerifyScale s =
                scale == "full" ? few::VerifyScale::full : few::VerifyScale::quick;
            auto results = few::run_verification(s, seed_given ? seed_override : 2024);
            std::cout << few::verification_report_text(results);
            if (!out_dir.empty()) {
                std::filesystem::create_directories(out_dir);
                std::ofstream out(std::filesystem::path(out_dir) / "verify_report.json");
                out << few::verification_report_json(results);
            }
            return few::all_passed(results) ? 0 : 1;
        }
    } catch (const few::ProtocolViolation& e) {
        std::cerr << "protocol violation: " << e.what() << "\n";
        return kExitProtocolError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
