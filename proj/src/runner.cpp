#include "memcap/runner.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include "memcap/errors.hpp"
#include "memcap/oracles.hpp"
#include "memcap/waterfill.hpp"

namespace memcap {

namespace {

using nlohmann::json;

constexpr double kLn2 = 0.693147180559945309417232121458;

std::string fmt(double v) {
    std::ostringstream out;
    out << std::setprecision(17) << v;
    return out.str();
}

struct Context {
    const RunConfig& config;
    ProblemSpec spec;
    int grid_n = 0;
    std::string hash;

    double rate(double nats) const { return config.bits ? nats / kLn2 : nats; }
    const char* unit() const { return config.bits ? "bits" : "nats"; }

    json header() const {
        return {{"config_hash", hash},
                {"grid_n", grid_n},
                {"log_base", unit()},
                {"tol_power", config.tol_power},
                {"tol_admiss", config.tol_admiss},
                {"gap_tol", config.gap_tol}};
    }

    std::string csv_header() const {
        std::ostringstream out;
        out << "# config_hash: " << hash << "\n# grid_n: " << grid_n
            << "\n# log_base: " << unit() << "\n# tol_power: " << fmt(config.tol_power)
            << "\n# tol_admiss: " << fmt(config.tol_admiss)
            << "\n# gap_tol: " << fmt(config.gap_tol) << "\n";
        return out.str();
    }

    void write_json(const char* name, const json& doc) const {
        write_file_atomic(config.out_dir / name, doc.dump(2) + "\n");
    }
};

json values_json(const ConstraintValues& v) {
    json out = json::object();
    if (v.tpc) out["tpc"] = *v.tpc;
    if (!v.pac.empty()) out["pac"] = v.pac;
    if (!v.ipc.empty()) out["ipc"] = v.ipc;
    if (!v.ehc.empty()) out["ehc"] = v.ehc;
    return out;
}

void write_psd_csv(const Context& ctx, const FrequencyGrid& grid,
                   const std::vector<Matrix>& psd) {
    std::ostringstream out;
    out << ctx.csv_header();
    const int n = psd.empty() ? 0 : static_cast<int>(psd.front().rows());
    out << "theta";
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) out << ",R" << r << c << "_re,R" << r << c << "_im";
    out << "\n";
    for (std::size_t k = 0; k < psd.size(); ++k) {
        out << fmt(grid.nodes[k]);
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c)
                out << "," << fmt(psd[k](r, c).real()) << "," << fmt(psd[k](r, c).imag());
        out << "\n";
    }
    write_file_atomic(ctx.config.out_dir / "psd.csv", out.str());
}

void append_oracle_reports(const Context& ctx, const std::vector<OracleReport>& reports) {
    std::ostringstream out;
    for (const auto& r : reports) out << to_json_line(r) << "\n";
    write_file_atomic(ctx.config.out_dir / "oracle.jsonl", out.str());
}

double active_mode_fraction(const std::vector<SpectralSample>& samples, double mu) {
    long total = 0, active = 0;
    for (const auto& s : samples)
        for (int i = 0; i < s.eigvals.size(); ++i) {
            ++total;
            if (s.eigvals[i] > 0.0 && mu > 1.0 / s.eigvals[i]) ++active;
        }
    return total > 0 ? static_cast<double>(active) / static_cast<double>(total) : 0.0;
}

RunOutcome run_check(Context& ctx, const AdmissibilityReport& report) {
    json doc = {{"header", ctx.header()},
                {"command", "check"},
                {"causal", report.causal},
                {"summable", report.summable},
                {"witness_b", report.witness_b},
                {"min_channel_sv", report.min_channel_sv},
                {"min_noise_eig", report.min_noise_eig},
                {"singular_frequencies", report.singular_frequencies},
                {"noise_singular", false}};
    ctx.write_json("admissibility.json", doc);
    std::ostringstream msg;
    msg << "admissible; min channel singular value " << report.min_channel_sv
        << ", min noise eigenvalue " << report.min_noise_eig;
    if (!report.singular_frequencies.empty())
        msg << "; channel singular at " << report.singular_frequencies.size()
            << " grid node(s) (zero power is assigned there)";
    return {kExitOk, msg.str()};
}

RunOutcome run_capacity(Context& ctx) {
    if (!ctx.spec.tpc)
        throw SchemaError("'capacity' needs a tpc budget (use 'joint' for pac-only specs)",
                          "constraints.tpc");
    const FrequencyGrid grid = uniform_grid(ctx.grid_n);
    const auto samples = whiten_grid(ctx.spec.channel, grid);
    const TpcResult result = solve_tpc(samples, grid, *ctx.spec.tpc, ctx.config.tol_power);

    json doc = {{"header", ctx.header()},
                {"command", "capacity"},
                {"capacity", ctx.rate(result.capacity_nats)},
                {"units", std::string(ctx.unit()) + " per channel use"},
                {"water_level", result.water_level},
                {"power_used", result.power_used},
                {"status", "optimal"}};
    ctx.write_json("capacity.json", doc);
    write_psd_csv(ctx, grid, result.psd);

    if (ctx.config.oracle) {
        std::vector<OracleReport> reports;
        if (ctx.spec.channel.n_tx == ctx.spec.channel.n_rx && ctx.spec.channel.n_tx <= 4) {
            const double ref = dense_bisection_capacity(ctx.spec.channel, *ctx.spec.tpc);
            reports.push_back(make_oracle_report("dense_bisection_capacity", ref,
                                                 result.capacity_nats, 1e-6));
        }
        append_oracle_reports(ctx, reports);
    }
    std::ostringstream msg;
    msg << "capacity " << ctx.rate(result.capacity_nats) << " " << ctx.unit()
        << " per channel use (water level " << result.water_level << ")";
    return {kExitOk, msg.str()};
}

RunOutcome run_joint(Context& ctx) {
    const FrequencyGrid grid = uniform_grid(ctx.grid_n);
    const auto samples = whiten_grid(ctx.spec.channel, grid);
    const ConstraintSet cs = evaluate_constraints(ctx.spec, grid);
    JointOptions opts;
    opts.gap_tol_rel = ctx.config.gap_tol;
    const JointResult result = solve_joint(cs, samples, grid, opts);

    json doc = {{"header", ctx.header()},
                {"command", "joint"},
                {"capacity", ctx.rate(result.capacity_nats)},
                {"units", std::string(ctx.unit()) + " per channel use"},
                {"multipliers", values_json(result.multipliers)},
                {"slacks", values_json(result.slacks)},
                {"duality_gap", result.duality_gap},
                {"iterations", result.iterations},
                {"status", to_string(result.status)}};
    if (result.status == SolveStatus::infeasible)
        doc["infeasible_witness"] = result.infeasible_witness;
    ctx.write_json("capacity.json", doc);
    write_psd_csv(ctx, grid, result.psd);

    if (ctx.config.oracle) {
        std::vector<OracleReport> reports;
        if (result.status == SolveStatus::optimal && ctx.spec.channel.n_tx <= 2 &&
            grid.size() <= 4) {
            try {
                const double ref = grid_search_joint(cs, samples, grid);
                reports.push_back(
                    make_oracle_report("grid_search_joint", ref, result.capacity_nats, 1e-3));
            } catch (const std::invalid_argument&) {
                // instance exceeds the oracle's point budget; leave no report
            }
        }
        append_oracle_reports(ctx, reports);
    }

    std::ostringstream msg;
    switch (result.status) {
        case SolveStatus::optimal:
            msg << "capacity " << ctx.rate(result.capacity_nats) << " " << ctx.unit()
                << " per channel use (duality gap " << result.duality_gap << ")";
            return {kExitOk, msg.str()};
        case SolveStatus::infeasible:
            msg << "infeasible: " << result.infeasible_witness;
            return {kExitInfeasible, msg.str()};
        case SolveStatus::max_iters:
            msg << "no convergence within the iteration budget (gap " << result.duality_gap
                << ")";
            return {kExitNoConvergence, msg.str()};
    }
    return {kExitNoConvergence, "unknown status"};
}

RunOutcome run_sweep(Context& ctx) {
    if (!ctx.spec.tpc)
        throw SchemaError("'sweep' needs a tpc budget", "constraints.tpc");
    for (std::size_t i = 1; i < ctx.config.sweep_powers.size(); ++i)
        if (ctx.config.sweep_powers[i] <= ctx.config.sweep_powers[i - 1])
            throw Error("sweep powers must be strictly increasing");

    const FrequencyGrid grid = uniform_grid(ctx.grid_n);
    const auto samples = whiten_grid(ctx.spec.channel, grid);

    std::ostringstream out;
    out << ctx.csv_header() << "P,capacity,mu,active_mode_fraction\n";
    std::vector<OracleReport> reports;
    for (double P : ctx.config.sweep_powers) {
        const TpcResult r = solve_tpc(samples, grid, P, ctx.config.tol_power);
        out << fmt(P) << "," << fmt(ctx.rate(r.capacity_nats)) << "," << fmt(r.water_level)
            << "," << fmt(active_mode_fraction(samples, r.water_level)) << "\n";
        if (ctx.config.oracle && ctx.spec.channel.n_tx == ctx.spec.channel.n_rx &&
            ctx.spec.channel.n_tx <= 4)
            reports.push_back(make_oracle_report(
                "dense_bisection_capacity P=" + fmt(P),
                dense_bisection_capacity(ctx.spec.channel, P), r.capacity_nats, 1e-6));
    }
    write_file_atomic(ctx.config.out_dir / "sweep.csv", out.str());
    if (ctx.config.oracle) append_oracle_reports(ctx, reports);
    return {kExitOk, "sweep written for " + std::to_string(ctx.config.sweep_powers.size()) +
                         " power points"};
}

RunOutcome run_converge(Context& ctx) {
    for (std::size_t i = 1; i < ctx.config.converge_sizes.size(); ++i)
        if (ctx.config.converge_sizes[i] <= ctx.config.converge_sizes[i - 1])
            throw Error("converge grid sizes must be strictly increasing");
    const bool tpc_only = ctx.spec.tpc && !ctx.spec.pac && ctx.spec.ipc.empty() &&
                          ctx.spec.ehc.empty();
    std::ostringstream out;
    out << ctx.csv_header() << "N,capacity,diff\n";
    double prev = 0.0;
    bool have_prev = false;
    double last = 0.0;
    for (int n_nodes : ctx.config.converge_sizes) {
        const FrequencyGrid grid = uniform_grid(n_nodes);
        const auto samples = whiten_grid(ctx.spec.channel, grid);
        double capacity = 0.0;
        if (tpc_only) {
            capacity =
                solve_tpc(samples, grid, *ctx.spec.tpc, ctx.config.tol_power).capacity_nats;
        } else {
            const ConstraintSet cs = evaluate_constraints(ctx.spec, grid);
            JointOptions opts;
            opts.gap_tol_rel = ctx.config.gap_tol;
            const JointResult r = solve_joint(cs, samples, grid, opts);
            if (r.status == SolveStatus::infeasible)
                return {kExitInfeasible, "infeasible: " + r.infeasible_witness};
            capacity = r.capacity_nats;
        }
        out << n_nodes << "," << fmt(ctx.rate(capacity)) << ",";
        if (have_prev) out << fmt(std::abs(capacity - prev));
        out << "\n";
        prev = capacity;
        last = capacity;
        have_prev = true;
    }
    write_file_atomic(ctx.config.out_dir / "converge.csv", out.str());

    if (ctx.config.oracle && tpc_only && ctx.spec.channel.n_tx == ctx.spec.channel.n_rx &&
        ctx.spec.channel.n_tx <= 4) {
        append_oracle_reports(
            ctx, {make_oracle_report("dense_bisection_limit",
                                     dense_bisection_capacity(ctx.spec.channel, *ctx.spec.tpc),
                                     last, 1e-6)});
    }
    return {kExitOk,
            "convergence table written for " +
                std::to_string(ctx.config.converge_sizes.size()) + " grid sizes"};
}

} // namespace

RunOutcome run(const RunConfig& config) {
    Context ctx{config};
    try {
        ctx.spec = parse_spec_file(config.spec_path);
        ctx.grid_n = config.grid_n > 0 ? config.grid_n : ctx.spec.grid_n;
        ctx.hash = config_hash(ctx.spec);
        std::filesystem::create_directories(config.out_dir);

        // Admissibility gate on an endpoint-including grid so +-pi is sampled.
        AdmissibilityReport report;
        try {
            report = check_admissibility(ctx.spec.channel, endpoint_grid(ctx.grid_n),
                                         config.tol_admiss);
        } catch (const NoiseSingularError& e) {
            if (config.command == Command::check) {
                json doc = {{"header", ctx.header()},
                            {"command", "check"},
                            {"noise_singular", true},
                            {"singular_frequencies", e.singular_frequencies},
                            {"error", e.what()}};
                ctx.write_json("admissibility.json", doc);
            }
            return {kExitInadmissible, std::string("inadmissible: ") + e.what()};
        } catch (const NoiseIndefiniteError& e) {
            return {kExitInadmissible, std::string("inadmissible: ") + e.what()};
        }

        switch (config.command) {
            case Command::check: return run_check(ctx, report);
            case Command::capacity: return run_capacity(ctx);
            case Command::joint: return run_joint(ctx);
            case Command::sweep: return run_sweep(ctx);
            case Command::converge: return run_converge(ctx);
        }
        return {1, "unknown command"};
    } catch (const SchemaError& e) {
        return {kExitInadmissible, std::string("bad spec: ") + e.what()};
    } catch (const NoiseSingularError& e) {
        return {kExitInadmissible, std::string("inadmissible: ") + e.what()};
    } catch (const NoiseIndefiniteError& e) {
        return {kExitInadmissible, std::string("inadmissible: ") + e.what()};
    } catch (const NoConvergenceError& e) {
        return {kExitNoConvergence, std::string("no convergence: ") + e.what()};
    } catch (const AllModesSingularError& e) {
        return {kExitInadmissible, std::string("inadmissible: ") + e.what()};
    }
}

} // namespace memcap
