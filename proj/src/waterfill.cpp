#include "memcap/waterfill.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <numbers>

#include "memcap/errors.hpp"

namespace memcap {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kFourPi = 4.0 * std::numbers::pi;

double max_whitened_eig(const std::vector<SpectralSample>& samples) {
    double max_w = 0.0;
    for (const auto& s : samples)
        if (s.eigvals.size() > 0) max_w = std::max(max_w, s.eigvals[0]);
    return max_w;
}
} // namespace

double total_power_at(double mu, const std::vector<SpectralSample>& samples,
                      const FrequencyGrid& grid) {
    if (mu <= 0.0) throw std::invalid_argument("total_power_at: mu must be positive");
    if (samples.size() != grid.size())
        throw std::invalid_argument("total_power_at: samples/grid length mismatch");
    double acc = 0.0;
    for (std::size_t k = 0; k < samples.size(); ++k) {
        double node = 0.0;
        const auto& ev = samples[k].eigvals;
        for (int i = 0; i < ev.size(); ++i) {
            if (ev[i] <= 0.0) continue; // infinite noise-referred level, never filled
            node += std::max(mu - 1.0 / ev[i], 0.0);
        }
        acc += node * grid.weights[k];
    }
    return acc / kTwoPi;
}

double solve_water_level(double P, const std::vector<SpectralSample>& samples,
                         const FrequencyGrid& grid, double tol) {
    if (P < 0.0) throw std::invalid_argument("solve_water_level: P must be >= 0");
    const double max_w = max_whitened_eig(samples);
    if (max_w <= 0.0)
        throw AllModesSingularError("every whitened eigenvalue is zero on the grid");

    const double lo0 = 1.0 / max_w; // minimum finite noise-referred level
    if (P == 0.0) return lo0;

    double offset = P + 1.0;
    int doublings = 0;
    while (total_power_at(lo0 + offset, samples, grid) < P) {
        offset *= 2.0;
        if (++doublings > 200)
            throw NoConvergenceError("water-level bracket expansion exceeded 200 doublings");
    }

    double lo = lo0, hi = lo0 + offset;
    for (int it = 0; it < 500; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double total = total_power_at(mid, samples, grid);
        if (std::abs(total - P) <= tol) return mid;
        (total < P ? lo : hi) = mid;
    }
    const double mid = 0.5 * (lo + hi);
    if (std::abs(total_power_at(mid, samples, grid) - P) <= tol) return mid;
    throw NoConvergenceError("water-level bisection did not reach the power tolerance");
}

CapacityForms capacity_forms(const std::vector<SpectralSample>& samples,
                             const FrequencyGrid& grid, double mu) {
    if (mu <= 0.0) throw std::invalid_argument("capacity_forms: mu must be positive");
    CapacityForms forms;
    double direct = 0.0, whitened = 0.0;
    for (std::size_t k = 0; k < samples.size(); ++k) {
        const auto& ev = samples[k].eigvals;
        double node_direct = 0.0, node_whitened = 0.0;
        for (int i = 0; i < ev.size(); ++i) {
            if (ev[i] <= 0.0) continue;
            const double noise_level = 1.0 / ev[i];
            node_direct += std::max(std::log(mu / noise_level), 0.0);
            if (mu * ev[i] > 1.0) node_whitened += std::log(mu * ev[i]);
        }
        direct += node_direct * grid.weights[k];
        whitened += node_whitened * grid.weights[k];
    }
    forms.direct = direct / kFourPi;
    forms.whitened = whitened / kFourPi;
    return forms;
}

double capacity_tpc(const std::vector<SpectralSample>& samples, const FrequencyGrid& grid,
                    double mu) {
    const CapacityForms forms = capacity_forms(samples, grid, mu);
    const double scale = std::max({std::abs(forms.direct), std::abs(forms.whitened), 1e-300});
    if (std::abs(forms.direct - forms.whitened) > 1e-10 * scale)
        throw FormMismatchError("capacity forms disagree: " + std::to_string(forms.direct) +
                                " vs " + std::to_string(forms.whitened));
    return forms.direct;
}

std::vector<Matrix> optimal_psd(const std::vector<SpectralSample>& samples, double mu) {
    std::vector<Matrix> psd;
    psd.reserve(samples.size());
    for (const auto& s : samples) {
        const int n = static_cast<int>(s.eigvals.size());
        Eigen::VectorXd d(n);
        for (int i = 0; i < n; ++i)
            d[i] = s.eigvals[i] > 0.0 ? std::max(mu - 1.0 / s.eigvals[i], 0.0) : 0.0;
        Matrix R = s.eigvecs * d.asDiagonal() * s.eigvecs.adjoint();
        psd.push_back((R + R.adjoint().eval()) / 2.0);
    }
    return psd;
}

std::vector<Matrix> identity_channel_psd(const ChannelSpec& spec, const FrequencyGrid& grid,
                                         double mu) {
    if (!spec.is_identity_channel())
        throw std::invalid_argument(
            "identity_channel_psd: channel is not the single-tap identity");
    std::vector<Matrix> psd;
    psd.reserve(grid.size());
    for (double theta : grid.nodes) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(noise_psd(spec, theta));
        Eigen::VectorXd d = (mu - es.eigenvalues().array()).cwiseMax(0.0).matrix();
        Matrix R = es.eigenvectors() * d.asDiagonal() * es.eigenvectors().adjoint();
        psd.push_back((R + R.adjoint().eval()) / 2.0);
    }
    return psd;
}

TpcResult solve_tpc(const std::vector<SpectralSample>& samples, const FrequencyGrid& grid,
                    double P, double tol) {
    TpcResult result;
    result.water_level = solve_water_level(P, samples, grid, tol);
    result.capacity_nats = capacity_tpc(samples, grid, result.water_level);
    result.psd = optimal_psd(samples, result.water_level);
    result.power_used = total_power_at(result.water_level, samples, grid);
    return result;
}

} // namespace memcap
