#pragma once

#include <filesystem>
#include <json.hpp>
#include <optional>
#include <vector>

#include "memcap/channel_model.hpp"
#include "memcap/joint_solver.hpp"

namespace memcap {

/// IPC/EHC factor channel given as taps; evaluated on the grid through the
/// same DTFT path as the main channel.
struct ConstraintChannel {
    int n_out = 1;
    std::vector<MatrixTap> taps; // n_out x n_tx each
    double limit = 0.0;
};

/// Everything a spec file describes: channel, noise, constraints, grid size.
struct ProblemSpec {
    ChannelSpec channel;
    std::optional<double> tpc;
    std::optional<std::vector<double>> pac;
    std::vector<ConstraintChannel> ipc;
    std::vector<ConstraintChannel> ehc;
    int grid_n = 256;
};

ProblemSpec parse_spec_json(const nlohmann::json& doc);
ProblemSpec parse_spec_file(const std::filesystem::path& path);

/// Inverse of parse_spec_json: parse(emit(s)) reproduces s exactly.
nlohmann::json emit_spec_json(const ProblemSpec& spec);

/// Evaluate the constraint factor channels on the grid.
ConstraintSet evaluate_constraints(const ProblemSpec& spec, const FrequencyGrid& grid);

/// FNV-1a hash of the canonical spec serialization, as fixed-width hex.
std::string config_hash(const ProblemSpec& spec);

/// Write via temp file + rename so readers never observe partial output.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

} // namespace memcap
