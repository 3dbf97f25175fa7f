#pragma once

#include <vector>

#include "memcap/spectral.hpp"

namespace memcap {

/// Closed-form total-power-constraint solution.
struct TpcResult {
    double capacity_nats = 0.0;
    double water_level = 0.0;        // mu
    std::vector<Matrix> psd;         // per-node optimal input PSD, Hermitian PSD
    double power_used = 0.0;         // power integral evaluated at the returned mu
};

/// Both algebraic routes to the capacity integral; they must agree.
struct CapacityForms {
    double direct = 0.0;   // (1/4pi) sum_i int (log(mu / lambda_i))_+ dtheta, lambda_i = 1/lambda_w,i
    double whitened = 0.0; // (1/4pi) sum_i int_{mu lambda_w,i > 1} log(mu lambda_w,i) dtheta
};

/// Power poured below level mu: (1/2pi) sum_i int (mu - 1/lambda_w,i)_+ dtheta.
/// Modes with lambda_w,i = 0 have infinite noise-referred level and contribute 0.
double total_power_at(double mu, const std::vector<SpectralSample>& samples,
                      const FrequencyGrid& grid);

/// Solve the water-level equation total_power_at(mu) = P by bracketed
/// bisection. P = 0 returns the minimum finite noise-referred level.
/// Throws AllModesSingularError when no mode can carry power and
/// NoConvergenceError on bracket/iteration caps.
double solve_water_level(double P, const std::vector<SpectralSample>& samples,
                         const FrequencyGrid& grid, double tol = 1e-12);

CapacityForms capacity_forms(const std::vector<SpectralSample>& samples,
                             const FrequencyGrid& grid, double mu);

/// Capacity in nats at water level mu. Evaluates both forms and throws
/// FormMismatchError if they disagree beyond 1e-10 relative.
double capacity_tpc(const std::vector<SpectralSample>& samples,
                    const FrequencyGrid& grid, double mu);

/// Per-node optimal input PSD (mu I - W^-1)_+ realized in the eigenbasis
/// of W; zero power lands on zero-eigenvalue modes.
std::vector<Matrix> optimal_psd(const std::vector<SpectralSample>& samples, double mu);

/// Special case H(theta) = I: the optimal PSD is (mu I - R_noise(theta))_+.
/// Throws std::invalid_argument unless the channel is the single-tap identity.
std::vector<Matrix> identity_channel_psd(const ChannelSpec& spec,
                                         const FrequencyGrid& grid, double mu);

/// Full closed-form pipeline: water level, capacity, PSD, power audit.
TpcResult solve_tpc(const std::vector<SpectralSample>& samples,
                    const FrequencyGrid& grid, double P, double tol = 1e-12);

} // namespace memcap
