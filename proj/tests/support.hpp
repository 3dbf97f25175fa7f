#pragma once

#include <complex>
#include <random>
#include <vector>

#include "memcap/channel_model.hpp"
#include "memcap/spectral.hpp"

namespace memcap::test {

// scalar channel from real tap lists, white or correlated noise
inline ChannelSpec scalar_spec(std::vector<double> h, std::vector<double> noise) {
    ChannelSpec spec;
    spec.n_tx = spec.n_rx = 1;
    for (std::size_t t = 0; t < h.size(); ++t)
        spec.h_taps.push_back({static_cast<int>(t), Matrix::Constant(1, 1, Complex(h[t], 0.0))});
    for (std::size_t t = 0; t < noise.size(); ++t)
        spec.noise_taps.push_back(
            {static_cast<int>(t), Matrix::Constant(1, 1, Complex(noise[t], 0.0))});
    return spec;
}

inline ChannelSpec identity_spec(int n, double sigma2 = 1.0) {
    ChannelSpec spec;
    spec.n_tx = spec.n_rx = n;
    spec.h_taps.push_back({0, Matrix::Identity(n, n)});
    spec.noise_taps.push_back({0, sigma2 * Matrix::Identity(n, n)});
    return spec;
}

inline Matrix random_complex(int rows, int cols, std::mt19937& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix out(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) out(r, c) = Complex(gauss(rng), gauss(rng));
    return out;
}

// Random admissible channel: H(theta) nonsingular on all of [-pi, pi]
// (dominant tap-0), noise PSD positive definite by construction.
inline ChannelSpec random_channel(int n, int n_h_taps, int n_noise_taps, std::mt19937& rng) {
    ChannelSpec spec;
    spec.n_tx = spec.n_rx = n;

    Matrix h0 = random_complex(n, n, rng);
    h0 = h0 * h0.adjoint() + Matrix::Identity(n, n); // smallest singular value >= 1
    spec.h_taps.push_back({0, h0});
    for (int t = 1; t < n_h_taps; ++t) {
        Matrix tail = random_complex(n, n, rng);
        tail *= 0.3 / std::max(tail.operatorNorm(), 1e-12); // keep H(theta) nonsingular
        spec.h_taps.push_back({t, tail});
    }

    Matrix r0 = random_complex(n, n, rng);
    r0 = r0 * r0.adjoint() + static_cast<double>(n) * Matrix::Identity(n, n);
    r0 = ((r0 + r0.adjoint()) / 2.0).eval();
    spec.noise_taps.push_back({0, r0});
    Eigen::SelfAdjointEigenSolver<Matrix> es(r0, Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues().minCoeff();
    for (int t = 1; t < n_noise_taps; ++t) {
        Matrix tail = random_complex(n, n, rng);
        // sum of all tail spectral norms stays below lmin/2, keeping R(theta) PD
        tail *= lmin / (4.0 * std::max(1, n_noise_taps - 1)) /
                std::max(tail.operatorNorm(), 1e-12);
        spec.noise_taps.push_back({t, tail});
    }
    return spec;
}

// Sorted (ascending) eigenvalues of the noise-referred matrix
// H^-1 R (H^H)^-1 at one frequency; valid for square nonsingular H.
inline Eigen::VectorXd noise_referred_eigs(const ChannelSpec& spec, double theta) {
    const Matrix h = transfer_function(spec, theta);
    const Matrix r = noise_psd(spec, theta);
    const Matrix hinv = h.inverse();
    const Matrix m = hinv * r * hinv.adjoint();
    Eigen::SelfAdjointEigenSolver<Matrix> es((m + m.adjoint()) / 2.0, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

// Random PSD field scaled so the power integral equals P exactly.
inline std::vector<Matrix> random_feasible_field(int n, const FrequencyGrid& grid, double P,
                                                 std::mt19937& rng) {
    std::vector<Matrix> field;
    field.reserve(grid.size());
    double power = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        Matrix a = random_complex(n, n, rng);
        Matrix r = a * a.adjoint();
        field.push_back((r + r.adjoint().eval()) / 2.0);
        power += field.back().trace().real() * grid.weights[k];
    }
    power /= 2.0 * std::numbers::pi;
    const double scale = power > 0.0 ? P / power : 0.0;
    for (auto& r : field) r *= scale;
    return field;
}

} // namespace memcap::test
