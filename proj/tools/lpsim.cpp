// lpsim: runs the built-in scenarios from a key = value config file.
//
//   lpsim list
//   lpsim run <config> [--out DIR] [--seed N] [--tolerance-scale X]

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "lpsim/scenarios.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Lax-Phillips resonance and decoherence scenarios"};
    app.require_subcommand(1);

    auto* list = app.add_subcommand("list", "List built-in scenarios");

    auto* run = app.add_subcommand("run", "Run the scenario described by a config file");
    std::string config_path;
    std::optional<std::string> out_dir;
    std::optional<unsigned long long> seed;
    double tolerance_scale = 1.0;
    run->add_option("config", config_path, "Config file (key = value lines)")->required();
    run->add_option("--out", out_dir, "Output directory (overrides output.dir)");
    run->add_option("--seed", seed, "Random seed (overrides seed)");
    run->add_option("--tolerance-scale", tolerance_scale, "Multiplier for tolerance-type bounds")
        ->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    if (list->parsed()) {
        std::cout << lpsim::scenario_listing();
        return 0;
    }
    lpsim::RunOptions opts;
    opts.out_dir = out_dir;
    opts.seed = seed;
    opts.tolerance_scale = tolerance_scale;
    return lpsim::run_config_file(config_path, opts, std::cout, std::cerr);
}
