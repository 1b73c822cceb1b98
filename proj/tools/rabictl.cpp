#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rabies/cli.hpp"

int main(int argc, char** argv)
{
    CLI::App app{"rabictl: rabies transmission model toolkit"};
    app.require_subcommand(1);

    rabies::cli::Invocation inv;
    std::string strategy;

    const std::vector<std::pair<std::string, std::string>> commands{
        {"simulate", "Forward run with constant controls; writes trajectory.csv"},
        {"reff", "Effective reproduction number at a point, or over a two-axis grid"},
        {"optimize", "Optimal control by forward-backward sweep for a strategy"},
        {"prcc", "Latin hypercube sampling and partial rank correlation study"},
        {"fit", "Nelder-Mead fit of parameters to yearly human incidence"},
    };
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("-c,--config", inv.config_path, "JSON configuration file")->check(CLI::ExistingFile);
        sub->add_option("--set", inv.sets, "Override a config key: dotted.key=json_value (repeatable)");
        sub->add_option("-o,--out", inv.out_root, "Output root (default $RABICTL_OUTDIR, then ./runs)");
        sub->add_option("--run-dir", inv.run_dir, "Write artifacts to exactly this directory");
        sub->add_option("-j,--jobs", inv.jobs, "Worker threads (default: number of processors)")
            ->check(CLI::NonNegativeNumber);
        if (name == "optimize") {
            sub->add_option("-s,--strategy", strategy, "A, B, C, D or a 0/1 mask over u1..u4 such as 0011");
        }
        sub->callback([&inv, name = name] { inv.command = name; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        if (rc == 0) return 0;
        // A missing config file is an I/O problem, not a usage problem.
        return std::string(e.what()).find("File does not exist") != std::string::npos ? 4 : 2;
    }
    if (!strategy.empty()) inv.sets.push_back("strategy=\"" + strategy + "\"");
    return rabies::cli::run(inv, std::cout, std::cerr);
}
