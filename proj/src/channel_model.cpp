#include "memcap/channel_model.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "memcap/errors.hpp"

namespace memcap {

void ChannelSpec::validate() const {
    if (n_tx < 1 || n_rx < 1)
        throw SchemaError("antenna counts must be positive", "channel");
    if (h_taps.empty())
        throw SchemaError("channel needs at least one tap", "channel.taps");
    if (noise_taps.empty())
        throw SchemaError("noise needs at least the lag-0 covariance", "noise.taps");

    std::set<int> seen;
    for (const auto& tap : h_taps) {
        if (tap.delay < 0)
            throw SchemaError("channel tap with negative delay (channel must be causal)",
                              "channel.taps");
        if (!seen.insert(tap.delay).second)
            throw SchemaError("duplicate channel tap delay " + std::to_string(tap.delay),
                              "channel.taps");
        if (tap.coeff.rows() != n_rx || tap.coeff.cols() != n_tx)
            throw SchemaError("channel tap matrix is not n_rx x n_tx", "channel.taps");
    }
    seen.clear();
    bool has_lag0 = false;
    for (const auto& tap : noise_taps) {
        if (tap.delay < 0)
            throw SchemaError("noise lag must be nonnegative (negative lags are implied)",
                              "noise.taps");
        if (!seen.insert(tap.delay).second)
            throw SchemaError("duplicate noise lag " + std::to_string(tap.delay), "noise.taps");
        if (tap.coeff.rows() != n_rx || tap.coeff.cols() != n_rx)
            throw SchemaError("noise tap matrix is not n_rx x n_rx", "noise.taps");
        if (tap.delay == 0) {
            has_lag0 = true;
            const double scale = std::max(1.0, tap.coeff.norm());
            if ((tap.coeff - tap.coeff.adjoint()).norm() > 1e-12 * scale)
                throw SchemaError("lag-0 noise covariance must be Hermitian", "noise.taps");
            Eigen::SelfAdjointEigenSolver<Matrix> es(
                (tap.coeff + tap.coeff.adjoint()) / 2.0, Eigen::EigenvaluesOnly);
            if (es.eigenvalues().minCoeff() < -1e-12 * scale)
                throw SchemaError("lag-0 noise covariance must be positive semi-definite",
                                  "noise.taps");
        }
    }
    if (!has_lag0)
        throw SchemaError("noise taps must include lag 0", "noise.taps");
}

bool ChannelSpec::is_identity_channel() const {
    if (n_tx != n_rx || h_taps.size() != 1) return false;
    const auto& tap = h_taps.front();
    if (tap.delay != 0) return false;
    return (tap.coeff - Matrix::Identity(n_rx, n_tx)).norm() <= 1e-14 * n_tx;
}

Matrix dtft(const std::vector<MatrixTap>& taps, double theta, int rows, int cols) {
    Matrix out = Matrix::Zero(rows, cols);
    for (const auto& tap : taps)
        out += tap.coeff * std::exp(Complex(0.0, -tap.delay * theta));
    return out;
}

Matrix transfer_function(const ChannelSpec& spec, double theta) {
    return dtft(spec.h_taps, theta, spec.n_rx, spec.n_tx);
}

Matrix noise_psd(const ChannelSpec& spec, double theta) {
    Matrix out = Matrix::Zero(spec.n_rx, spec.n_rx);
    for (const auto& tap : spec.noise_taps) {
        if (tap.delay == 0) {
            out += tap.coeff;
        } else {
            const Complex phase = std::exp(Complex(0.0, -tap.delay * theta));
            out += tap.coeff * phase + tap.coeff.adjoint() * std::conj(phase);
        }
    }
    return (out + out.adjoint().eval()) / 2.0; // exact Hermitian
}

AdmissibilityReport check_admissibility(const ChannelSpec& spec, const FrequencyGrid& grid,
                                        double tol) {
    if (grid.size() == 0) throw std::invalid_argument("check_admissibility: empty grid");
    spec.validate();

    AdmissibilityReport report;
    report.causal = true;   // validated: all delays >= 0
    report.summable = true; // finite tap lists, so the tail sums are finite

    double tail_max = 0.0;
    for (const auto& tap : spec.h_taps)
        if (tap.delay > 0) tail_max = std::max(tail_max, tap.delay * tap.coeff.norm());
    report.witness_b = std::max(1.0, 2.0 * tail_max);

    std::vector<double> min_sv(grid.size()), min_eig(grid.size());
    double max_sv = 0.0, max_eig = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double theta = grid.nodes[i];
        Eigen::JacobiSVD<Matrix> svd(transfer_function(spec, theta));
        min_sv[i] = svd.singularValues().minCoeff();
        max_sv = std::max(max_sv, svd.singularValues().maxCoeff());

        Eigen::SelfAdjointEigenSolver<Matrix> es(noise_psd(spec, theta), Eigen::EigenvaluesOnly);
        min_eig[i] = es.eigenvalues().minCoeff();
        max_eig = std::max(max_eig, es.eigenvalues().maxCoeff());
    }

    report.min_channel_sv = *std::min_element(min_sv.begin(), min_sv.end());
    report.min_noise_eig = *std::min_element(min_eig.begin(), min_eig.end());

    const double sv_floor = tol * std::max(max_sv, 1e-300);
    const double eig_floor = tol * std::max(max_eig, 1e-300);

    std::vector<double> noise_singular_at;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (min_sv[i] <= sv_floor) report.singular_frequencies.push_back(grid.nodes[i]);
        if (min_eig[i] <= eig_floor) noise_singular_at.push_back(grid.nodes[i]);
    }

    if (report.min_noise_eig < -eig_floor)
        throw NoiseIndefiniteError("noise PSD has a negative eigenvalue (" +
                                   std::to_string(report.min_noise_eig) +
                                   "): covariance taps are inconsistent");
    if (!noise_singular_at.empty()) {
        std::ostringstream msg;
        msg << "noise PSD is singular at " << noise_singular_at.size()
            << " grid node(s), first at theta = " << noise_singular_at.front();
        throw NoiseSingularError(msg.str(), std::move(noise_singular_at));
    }
    return report;
}

} // namespace memcap
