#pragma once

#include <string>
#include <vector>

#include "memcap/channel_model.hpp"
#include "memcap/joint_solver.hpp"

namespace memcap {

// Brute-force reference implementations for tests and acceptance runs.
// These deliberately share no numerical route with the main modules:
// trapezoid quadrature instead of midpoint, a hand-rolled Jacobi
// eigensolver instead of the library one, noise-referred eigenvalues
// instead of whitened ones.

struct OracleReport {
    std::string case_id;
    double oracle_value = 0.0;
    double main_value = 0.0;
    double abs_dev = 0.0;
    double rel_dev = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

OracleReport make_oracle_report(const std::string& case_id, double oracle_value,
                                double main_value, double tolerance);

std::string to_json_line(const OracleReport& report);

/// Eigenvalues of a Hermitian matrix (n <= 4) by cyclic complex Jacobi
/// rotations, ascending.
Eigen::VectorXd jacobi_eigenvalues(const Matrix& hermitian);

/// Reference TPC capacity: trapezoid rule on n_dense cells, eigenvalues of
/// the noise-referred matrix H^-1 R (H^H)^-1 via the Jacobi solver,
/// 200-iteration bisection for the water level. Requires a square channel
/// with n <= 4, nonsingular on the dense grid.
double dense_bisection_capacity(const ChannelSpec& spec, double P, int n_dense = 1 << 16);

struct GridSearchOptions {
    int points_per_dim = 25;
    int refine_levels = 6;
    long long max_points = 100000000; // 1e8
    double p_max = 0.0;               // 0 = derive from budgets
};

/// Exhaustive search over per-node PSD fields parameterized as
/// V(alpha, phi) diag(p) V^H, feasible points filtered by the constraint
/// Riemann sums. Lower bound on the true capacity, tight to resolution.
/// Requires n_tx <= 2 and a small grid; throws when the point budget is
/// exceeded.
double grid_search_joint(const ConstraintSet& constraints,
                         const std::vector<SpectralSample>& samples,
                         const FrequencyGrid& grid,
                         const GridSearchOptions& opts = {});

/// Power-split search for flat MISO channels under per-antenna budgets and
/// white noise: maximizes 0.5*log(1 + |sum_i |h_i| sqrt(r_i)|^2 / sigma2)
/// over an r-grid with r_i <= pac[i].
double miso_pac_split_search(const Eigen::RowVectorXcd& h, double sigma2,
                             const std::vector<double>& pac, int resolution = 200);

} // namespace memcap
