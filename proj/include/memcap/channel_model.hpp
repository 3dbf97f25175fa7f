#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "memcap/grid.hpp"

namespace memcap {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;

/// One coefficient of a matrix-valued time series: value at a nonnegative
/// delay (channel) or lag (noise covariance).
struct MatrixTap {
    int delay = 0;
    Matrix coeff;
};

/// Time-domain description of the channel: impulse-response taps H(t) and
/// one-sided noise covariance taps R(tau), tau >= 0. Negative lags are
/// implied by R(-tau) = R(tau)^H.
struct ChannelSpec {
    int n_tx = 0;
    int n_rx = 0;
    std::vector<MatrixTap> h_taps;     // n_rx x n_tx each
    std::vector<MatrixTap> noise_taps; // n_rx x n_rx each

    /// Throws SchemaError on dimension mismatches, negative delays,
    /// duplicate delays, or a non-Hermitian lag-0 covariance.
    void validate() const;

    /// True when the channel is the single-tap identity H(theta) = I.
    bool is_identity_channel() const;
};

struct AdmissibilityReport {
    double min_channel_sv = 0.0;  // min over grid of smallest singular value of H(theta)
    double min_noise_eig = 0.0;   // min over grid of smallest eigenvalue of R(theta)
    std::vector<double> singular_frequencies; // grid nodes where H(theta) is singular
    bool causal = false;
    bool summable = false;
    double witness_b = 0.0;       // satisfies |H(t)|_F < b/t for all stored t > 0
};

/// Finite DTFT sum over a tap list: sum_t taps[t] * exp(-j t theta).
Matrix dtft(const std::vector<MatrixTap>& taps, double theta, int rows, int cols);

/// Channel transfer function H(theta).
Matrix transfer_function(const ChannelSpec& spec, double theta);

/// Noise power spectral density R(theta) = R(0) + sum_{tau>0} R(tau) e^{-j tau theta}
/// + R(tau)^H e^{+j tau theta}, symmetrized to exact Hermitian.
Matrix noise_psd(const ChannelSpec& spec, double theta);

/// Scan the grid for channel/noise singularities and populate the report.
/// `tol` is relative to the largest noise eigenvalue (resp. channel singular
/// value) seen over the grid. A singular H(theta) is recorded as a warning;
/// a singular noise PSD throws NoiseSingularError, an indefinite one
/// NoiseIndefiniteError.
AdmissibilityReport check_admissibility(const ChannelSpec& spec,
                                        const FrequencyGrid& grid,
                                        double tol = 1e-10);

} // namespace memcap
