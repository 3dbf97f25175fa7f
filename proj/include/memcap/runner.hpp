#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "memcap/io.hpp"

namespace memcap {

enum class Command { check, capacity, joint, sweep, converge };

struct RunConfig {
    std::filesystem::path spec_path;
    Command command = Command::check;
    int grid_n = 0;                    // 0 = take grid.N from the spec file
    bool bits = false;                 // report capacities in bits instead of nats
    double tol_power = 1e-12;
    double tol_admiss = 1e-10;
    double gap_tol = 1e-5;
    std::filesystem::path out_dir = ".";
    bool oracle = false;
    std::vector<double> sweep_powers = {0.5, 1.0, 2.0, 4.0, 8.0};
    std::vector<int> converge_sizes = {64, 128, 256, 512};
};

// Exit codes: 0 ok, 2 infeasible, 3 inadmissible spec, 4 no convergence.
constexpr int kExitOk = 0;
constexpr int kExitInfeasible = 2;
constexpr int kExitInadmissible = 3;
constexpr int kExitNoConvergence = 4;

struct RunOutcome {
    int exit_code = kExitOk;
    std::string message;
};

/// Execute one CLI command end to end: parse, check admissibility, solve,
/// write output files into config.out_dir.
RunOutcome run(const RunConfig& config);

} // namespace memcap
