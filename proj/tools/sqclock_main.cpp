// sqclock - batch front end for the clock-comparison simulation toolkit
//
// Exit codes: 0 success, 2 schema/configuration error, 3 numerical failure.
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "sqclock/cavity.hpp"
#include "sqclock/quadrature.hpp"
#include "sqclock/scenario.hpp"

namespace {

constexpr int exit_ok = 0;
constexpr int exit_schema = 2;
constexpr int exit_numerical = 3;

struct CommonOptions {
    std::string scenario_path;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
    int threads = 1;
    bool validate_only = false;
};

int run_command(const std::string& command, const CommonOptions& opt) {
    sqclock::Scenario scenario;
    try {
        scenario = sqclock::load_scenario(opt.scenario_path);
    } catch (const sqclock::ScenarioError& e) {
        std::cerr << e.what() << '\n';
        return exit_schema;
    }
    if (scenario.command != command) {
        std::cerr << "command: scenario file declares '" << scenario.command
                  << "' but '" << command << "' was requested\n";
        return exit_schema;
    }
    if (opt.seed) {
        scenario.seed = *opt.seed;
    }

    const auto diagnostics = sqclock::validate_scenario(scenario);
    if (!diagnostics.empty()) {
        for (const auto& d : diagnostics) {
            std::cerr << d.str() << '\n';
        }
        return exit_schema;
    }
    if (opt.validate_only) {
        std::cout << "scenario '" << scenario.name << "' is valid\n";
        return exit_ok;
    }

    try {
        const auto result =
            sqclock::run_scenario(scenario, opt.out_dir, std::nullopt, opt.threads);
        std::cout << result.summary.dump(2) << '\n';
        return exit_ok;
    } catch (const sqclock::ScenarioError& e) {
        std::cerr << e.what() << '\n';
        return exit_schema;
    } catch (const std::exception& e) {
        std::cerr << e.what() << '\n';
        return exit_numerical;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monte Carlo toolkit for cavity-QED clock comparison experiments"};
    app.require_subcommand(1);

    CommonOptions opt;
    std::string picked_command;
    for (const auto& name : sqclock::known_commands()) {
        CLI::App* sub = app.add_subcommand(name, "run the '" + name + "' pipeline");
        sub->add_option("--scenario", opt.scenario_path, "scenario JSON file")->required();
        sub->add_option("--out", opt.out_dir, "output directory");
        sub->add_option("--seed", [&opt](const CLI::results_t& res) {
            opt.seed = std::stoull(res[0]);
            return true;
        }, "override the scenario seed");
        sub->add_option("--threads", opt.threads, "worker threads for Monte Carlo trials");
        sub->add_flag("--validate-only", opt.validate_only,
                      "check the scenario file and exit");
        sub->callback([&picked_command, name]() { picked_command = name; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? exit_ok : exit_schema;
    }
    return run_command(picked_command, opt);
}
