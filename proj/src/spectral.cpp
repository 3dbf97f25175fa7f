#include "memcap/spectral.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "memcap/errors.hpp"

namespace memcap {

SpectralSample whiten(const ChannelSpec& spec, double theta) {
    const Matrix H = transfer_function(spec, theta);
    const Matrix R = noise_psd(spec, theta);

    Eigen::LLT<Matrix> llt(R);
    if (llt.info() != Eigen::Success)
        throw NoiseSingularError("noise PSD not positive definite at theta = " +
                                     std::to_string(theta),
                                 {theta});

    // W = (L^-1 H)^H (L^-1 H): Hermitian PSD by construction.
    const Matrix G = llt.matrixL().solve(H);
    Matrix W = G.adjoint() * G;
    W = (W + W.adjoint().eval()) / 2.0;

    Eigen::SelfAdjointEigenSolver<Matrix> es(W);
    if (es.info() != Eigen::Success)
        throw Error("eigendecomposition failed at theta = " + std::to_string(theta));

    SpectralSample sample;
    sample.theta = theta;
    sample.W = std::move(W);

    const int n = spec.n_tx;
    sample.eigvals.resize(n);
    sample.eigvecs.resize(n, n);
    // Eigen sorts ascending; store nonincreasing.
    for (int i = 0; i < n; ++i) {
        sample.eigvals[i] = es.eigenvalues()[n - 1 - i];
        sample.eigvecs.col(i) = es.eigenvectors().col(n - 1 - i);
    }
    const double clip = 1e-12 * std::max(sample.eigvals[0], 0.0);
    for (int i = 0; i < n; ++i)
        if (sample.eigvals[i] <= clip) sample.eigvals[i] = 0.0;
    return sample;
}

std::vector<SpectralSample> whiten_grid(const ChannelSpec& spec, const FrequencyGrid& grid) {
    std::vector<SpectralSample> samples;
    samples.reserve(grid.size());
    for (double theta : grid.nodes) samples.push_back(whiten(spec, theta));

    // Clip against the sweep-wide scale: a node where the channel vanishes
    // keeps exact zeros rather than roundoff dust.
    double max_eig = 0.0;
    for (const auto& s : samples)
        if (s.eigvals.size() > 0) max_eig = std::max(max_eig, s.eigvals[0]);
    const double clip = 1e-12 * max_eig;
    for (auto& s : samples)
        for (int i = 0; i < s.eigvals.size(); ++i)
            if (s.eigvals[i] <= clip) s.eigvals[i] = 0.0;
    return samples;
}

} // namespace memcap
