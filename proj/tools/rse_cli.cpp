// rse: run DoS-game scenarios, verify the model, solve the tabular oracle.
#include <cmath>
#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "rse/checks.hpp"
#include "rse/harness.hpp"

namespace {

void print_report(const rse::RunReport &report) {
    std::cout << "scenario " << rse::to_string(report.scenario) << '\n';
    if (report.oracle) {
        std::printf("oracle: %zu states, %zu sweeps, V(steady) = %.6f, NE %s\n", report.oracle->states.size(),
                    report.oracle->sweep_changes.size(), report.oracle->values.front(),
                    rse::to_string(report.oracle->ne).c_str());
    }
    if (!report.trace.empty()) {
        std::cout << "trace:";
        for (const auto &r : report.trace) std::printf(" %.6g", r.p.trace());
        std::cout << '\n';
    }
    for (const auto &s : report.seeds) {
        std::printf("seed %llu: steps %zu%s, NE", static_cast<unsigned long long>(s.seed), s.steps,
                    s.converged ? " (converged)" : "");
        for (const auto &a : s.ne.actions) std::printf(" %s", rse::to_string(a).c_str());
        std::printf(", device loss %.4g -> %.4g", s.initial_loss_device, s.final_loss_device);
        if (std::isfinite(s.initial_loss_attacker))
            std::printf(", attacker loss %.4g -> %.4g", s.initial_loss_attacker, s.final_loss_attacker);
        std::printf("\n");
    }
    for (const auto &a : report.artifacts) std::cout << "wrote " << a << '\n';
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Remote state estimation under DoS attack: games, oracle and Minimax-DQN learners"};
    app.require_subcommand(1);

    std::string config_path;
    std::size_t seed_count = 0;
    std::string out_dir;
    bool plots = false;
    auto *run = app.add_subcommand("run", "Run the scenario described by a config file");
    run->add_option("--config", config_path, "JSON scenario file")->required();
    run->add_option("--seeds", seed_count, "Use seeds 1..N instead of the config's list")->check(CLI::PositiveNumber);
    run->add_option("--out", out_dir, "Output directory");
    run->add_flag("--plots", plots, "Also render SVG plots");

    std::string verify_config;
    std::string verify_out = "out/verify";
    auto *verify = app.add_subcommand("verify", "Model trace, tabular oracle and the quick invariant suite");
    verify->add_option("--config", verify_config, "JSON file with the system to check (default: built in)");
    verify->add_option("--out", verify_out, "Output directory");

    std::size_t depth = 4;
    double tol = 1e-8;
    std::string oracle_config;
    std::string oracle_out = "out/oracle";
    auto *oracle = app.add_subcommand("oracle", "Solve the truncated open-loop game by value iteration");
    oracle->add_option("--depth", depth, "Loss depth of the reachable state graph")->check(CLI::PositiveNumber);
    oracle->add_option("--tol", tol, "Sweep tolerance");
    oracle->add_option("--config", oracle_config, "JSON file with the system (default: built in)");
    oracle->add_option("--out", oracle_out, "Output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(rse::ErrorCategory::usage);
    }

    try {
        if (*run) {
            rse::ScenarioConfig cfg = rse::load_config(config_path);
            if (seed_count > 0) {
                cfg.seeds.clear();
                for (std::size_t s = 1; s <= seed_count; ++s) cfg.seeds.push_back(s);
            }
            if (!out_dir.empty()) cfg.output_dir = out_dir;
            print_report(rse::run_scenario(cfg, plots));
        } else if (*verify) {
            rse::ScenarioConfig cfg = verify_config.empty() ? rse::ScenarioConfig{} : rse::load_config(verify_config);
            cfg.output_dir = verify_out;
            cfg.scenario = rse::Scenario::verify_model;
            print_report(rse::run_scenario(cfg));
            cfg.scenario = rse::Scenario::oracle;
            print_report(rse::run_scenario(cfg));
            bool all = true;
            for (const auto &c : rse::run_quick_checks(cfg.system_model())) {
                std::printf("%s  %s: %s\n", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.detail.c_str());
                all = all && c.passed;
            }
            return all ? 0 : 1;
        } else if (*oracle) {
            rse::ScenarioConfig cfg = oracle_config.empty() ? rse::ScenarioConfig{} : rse::load_config(oracle_config);
            cfg.scenario = rse::Scenario::oracle;
            cfg.oracle.depth = depth;
            cfg.oracle.tol = tol;
            cfg.output_dir = oracle_out;
            print_report(rse::run_scenario(cfg));
        }
    } catch (const rse::ParseError &e) {
        std::cerr << "error: " << e.what() << " (line " << e.line() << ")\n";
        return static_cast<int>(e.category());
    } catch (const rse::Error &e) {
        std::cerr << "error: " << e.what() << '\n';
        return static_cast<int>(e.category());
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
