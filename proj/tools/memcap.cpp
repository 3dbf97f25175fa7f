#include <CLI11.hpp>
#include <iostream>

#include "memcap/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"memcap: capacity and optimal input PSD of Gaussian MIMO channels with memory"};
    app.require_subcommand(1);

    memcap::RunConfig config;
    std::string log_base = "nats";
    std::string spec_path, out_dir = ".";

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--spec", spec_path, "channel/constraint spec file (JSON)")
            ->required()
            ->check(CLI::ExistingFile);
        sub->add_option("--grid", config.grid_n, "frequency grid size N (default: grid.N from the spec)");
        sub->add_option("--log", log_base, "capacity units: nats or bits")
            ->check(CLI::IsMember({"nats", "bits"}));
        sub->add_option("--out", out_dir, "output directory");
        sub->add_flag("--oracle", config.oracle, "also run the brute-force oracle and write oracle.jsonl");
        sub->add_option("--tol-power", config.tol_power, "water-level power tolerance");
        sub->add_option("--tol-admiss", config.tol_admiss, "relative singularity tolerance");
        sub->add_option("--tol-gap", config.gap_tol, "relative duality-gap tolerance (joint)");
    };

    auto* check = app.add_subcommand("check", "validate admissibility and report singular frequencies");
    auto* capacity = app.add_subcommand("capacity", "closed-form capacity under the total power constraint");
    auto* joint = app.add_subcommand("joint", "capacity under joint TPC/PAC/IPC/EHC constraints");
    auto* sweep = app.add_subcommand("sweep", "capacity vs power table (TPC)");
    auto* converge = app.add_subcommand("converge", "capacity vs grid size (subcarrier refinement)");
    for (auto* sub : {check, capacity, joint, sweep, converge}) add_common(sub);
    sweep->add_option("--powers", config.sweep_powers, "increasing list of power budgets");
    converge->add_option("--sizes", config.converge_sizes, "increasing list of grid sizes");

    check->callback([&] { config.command = memcap::Command::check; });
    capacity->callback([&] { config.command = memcap::Command::capacity; });
    joint->callback([&] { config.command = memcap::Command::joint; });
    sweep->callback([&] { config.command = memcap::Command::sweep; });
    converge->callback([&] { config.command = memcap::Command::converge; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1; // usage errors, distinct from solver exit codes
    }

    config.spec_path = spec_path;
    config.out_dir = out_dir;
    config.bits = (log_base == "bits");

    try {
        const memcap::RunOutcome outcome = memcap::run(config);
        (outcome.exit_code == 0 ? std::cout : std::cerr) << outcome.message << "\n";
        return outcome.exit_code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
