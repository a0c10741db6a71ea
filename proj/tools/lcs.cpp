// lcs: command-line driver for the local causal state pipeline.
//
//   lcs simulate|train|reconstruct|forecast|render|metrics|all --config PATH
//       [--work DIR] [--seed-override N]
//
// Exit codes: 0 success, 2 config error, 3 I/O error, 4 numerical failure.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "lcs/config.hpp"
#include "lcs/pipeline.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Local causal states: spacetime autoencoder and forecaster"};
    std::string command;
    std::string config_path;
    std::optional<std::string> work_dir;
    std::optional<std::uint64_t> seed_override;
    app.add_option("command", command, "Pipeline stage to run")
        ->required()
        ->check(CLI::IsMember(lcs::pipeline::command_names()));
    app.add_option("--config", config_path, "Run configuration (key = value)")->required();
    app.add_option("--work", work_dir, "Work directory (overrides work_dir in the config)");
    app.add_option("--seed-override", seed_override, "Replace every seed in the config with N");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        lcs::RunConfig cfg = lcs::load_config(config_path);
        if (seed_override) cfg.override_seeds(*seed_override);
        if (work_dir) cfg.work_dir = *work_dir;
        lcs::pipeline::run_command(command, cfg, {cfg.work_dir});
    } catch (const std::exception& e) {
        std::cerr << "lcs " << command << ": " << e.what() << '\n';
        return lcs::pipeline::exit_code_for(e);
    }
    return 0;
}
