#pragma once

#include <Eigen/Dense>
#include <vector>

#include "memcap/channel_model.hpp"
#include "memcap/grid.hpp"

namespace memcap {

/// Whitened channel at one frequency: W = H^H R^-1 H with its
/// eigendecomposition. Eigenvalues are sorted nonincreasing and clipped to
/// exactly zero below 1e-12 * lambda_max; whiten_grid re-clips against the
/// largest eigenvalue of the whole sweep.
struct SpectralSample {
    double theta = 0.0;
    Matrix W;                     // n_tx x n_tx Hermitian PSD
    Eigen::VectorXd eigvals;      // nonincreasing, >= 0
    Matrix eigvecs;               // unitary, columns match eigvals
};

/// Compute W(theta) via a Cholesky factorization of the noise PSD
/// (never by explicit inversion). Throws NoiseSingularError if the noise
/// PSD is not positive definite at theta.
SpectralSample whiten(const ChannelSpec& spec, double theta);

/// whiten() at every grid node, in node order.
std::vector<SpectralSample> whiten_grid(const ChannelSpec& spec, const FrequencyGrid& grid);

} // namespace memcap
