#pragma once

#include <optional>
#include <string>
#include <vector>

#include "memcap/spectral.hpp"

namespace memcap {

/// Linear power coupling through a factor channel: the per-node matrices
/// H_k(theta_i) (n_k x n_tx) and a limit. Used for both interference caps
/// (average coupled power <= limit) and energy-harvesting floors
/// (average coupled power >= limit).
struct LinearPowerConstraint {
    std::vector<Matrix> factors;
    double limit = 0.0;
};

struct ConstraintSet {
    std::optional<double> tpc;                 // total power budget
    std::optional<std::vector<double>> pac;    // per-antenna budgets, length n_tx
    std::vector<LinearPowerConstraint> ipc;    // interference caps
    std::vector<LinearPowerConstraint> ehc;    // harvest floors

    /// Throws SchemaError unless at least one of tpc/pac is present, all
    /// limits are finite and nonnegative, and dimensions line up.
    void validate(int n_tx, std::size_t n_nodes) const;
};

/// One value per constraint, in constraint-set order. Holds multipliers or
/// slacks. Slack convention: budget minus attained value for <=-constraints,
/// attained harvest minus floor for EHC, so feasible means slack >= 0.
struct ConstraintValues {
    std::optional<double> tpc;
    std::vector<double> pac;
    std::vector<double> ipc;
    std::vector<double> ehc;
};

enum class SolveStatus { optimal, infeasible, max_iters };

const char* to_string(SolveStatus s);

struct JointResult {
    double capacity_nats = 0.0;
    std::vector<Matrix> psd;
    ConstraintValues multipliers;
    ConstraintValues slacks;
    double duality_gap = 0.0;
    SolveStatus status = SolveStatus::max_iters;
    int iterations = 0;                // full-grid inner water-filling sweeps
    std::string infeasible_witness;    // set when status == infeasible
};

struct JointOptions {
    double step = 1.0;            // subgradient step scale a (schedule a/sqrt(t))
    int subgrad_iters = 400;      // phase-1 subgradient iterations
    int max_iters = 5000;         // total inner-sweep budget across all phases
    double gap_tol_rel = 1e-5;    // optimal when gap <= gap_tol_rel * (1 + |C|)
    double feas_tol = 1e-9;       // slack tolerance, scaled by (1 + |limit|)
    int bisect_iters = 90;        // per-coordinate bisection depth
};

struct FeasibilityReport {
    bool feasible = true;
    std::string witness;          // violated constraint description
    int ehc_index = -1;
    double max_harvest = 0.0;
    double floor = 0.0;
};

/// Check that every harvest floor is reachable under the TPC/PAC budgets.
/// The maximum deliverable harvest is evaluated by concentrating the budget
/// on the dominant eigenmode of the harvest matrix at its best frequency
/// (exact for rank-one factors, a lower bound otherwise).
FeasibilityReport feasibility_check(const ConstraintSet& constraints,
                                    const std::vector<SpectralSample>& samples,
                                    const FrequencyGrid& grid);

/// Per-frequency Lagrangian maximizer of log det(I + W R) - tr(M R) over
/// R >= 0. Throws MNotPositiveError unless M is positive definite.
Matrix inner_waterfill(const Matrix& W, const Matrix& M);

/// Rate objective (1/4pi) int log det(I + W R) dtheta for a PSD field.
double capacity_objective(const std::vector<SpectralSample>& samples,
                          const FrequencyGrid& grid,
                          const std::vector<Matrix>& psd);

/// Capacity under the joint constraint set by dual decomposition:
/// projected-subgradient ascent on the multipliers with per-frequency inner
/// water-filling, then active-set refinement (coordinate bisection plus a
/// damped Newton polish on the zero-slack system) until the duality gap
/// certifies optimality.
JointResult solve_joint(const ConstraintSet& constraints,
                        const std::vector<SpectralSample>& samples,
                        const FrequencyGrid& grid,
                        const JointOptions& opts = {});

struct RankOneExtraction {
    std::vector<Eigen::VectorXcd> beams;   // per node: sqrt(lambda_1) * u_1
    std::vector<double> residuals;         // lambda_2 / lambda_1 (0 when lambda_1 = 0)
    double max_residual = 0.0;
};

/// Dominant eigenpair of the optimal PSD at every node. When `miso_channel`
/// is given (per-node 1 x n_tx rows of H for a MISO-PAC white-noise
/// instance), asserts the rank-one structure: residual <= tol at every node
/// and beam phases matching the channel phases up to one rotation per node;
/// throws NotRankOneError otherwise.
RankOneExtraction extract_rank_one(const JointResult& result, double tol,
                                   const std::vector<Matrix>* miso_channel = nullptr);

} // namespace memcap
