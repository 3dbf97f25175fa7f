#include "memcap/grid.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace memcap {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
} // namespace

FrequencyGrid::FrequencyGrid(std::vector<double> nodes_, std::vector<double> weights_)
    : nodes(std::move(nodes_)), weights(std::move(weights_)) {
    if (nodes.empty() || nodes.size() != weights.size())
        throw std::invalid_argument("FrequencyGrid: nodes/weights size mismatch");
    double sum = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (nodes[i] < -kPi - 1e-12 || nodes[i] > kPi + 1e-12)
            throw std::invalid_argument("FrequencyGrid: node outside [-pi, pi]");
        if (i > 0 && nodes[i] <= nodes[i - 1])
            throw std::invalid_argument("FrequencyGrid: nodes not strictly increasing");
        if (weights[i] <= 0.0)
            throw std::invalid_argument("FrequencyGrid: nonpositive weight");
        sum += weights[i];
    }
    if (std::abs(sum - kTwoPi) > 1e-12)
        throw std::invalid_argument("FrequencyGrid: weights do not sum to 2*pi");
}

FrequencyGrid uniform_grid(int n_nodes) {
    if (n_nodes < 1) throw std::invalid_argument("uniform_grid: N must be >= 1");
    std::vector<double> nodes(n_nodes), weights(n_nodes, kTwoPi / n_nodes);
    for (int i = 0; i < n_nodes; ++i)
        nodes[i] = -kPi + (i + 0.5) * kTwoPi / n_nodes;
    // exact weight sum, independent of rounding in the division
    double acc = 0.0;
    for (int i = 0; i + 1 < n_nodes; ++i) acc += weights[i];
    weights[n_nodes - 1] = kTwoPi - acc;
    return FrequencyGrid(std::move(nodes), std::move(weights));
}

FrequencyGrid endpoint_grid(int n_cells) {
    if (n_cells < 1) throw std::invalid_argument("endpoint_grid: N must be >= 1");
    const int n = n_cells + 1;
    const double h = kTwoPi / n_cells;
    std::vector<double> nodes(n), weights(n, h);
    for (int i = 0; i < n; ++i) nodes[i] = -kPi + i * h;
    nodes.front() = -kPi;
    nodes.back() = kPi;
    weights.front() = 0.5 * h;
    weights.back() = 0.5 * h;
    double acc = 0.0;
    for (int i = 0; i + 2 < n; ++i) acc += weights[i];
    weights[n - 2] = kTwoPi - acc - weights[n - 1];
    return FrequencyGrid(std::move(nodes), std::move(weights));
}

double integrate(const FrequencyGrid& grid, const std::vector<double>& values) {
    if (values.size() != grid.size())
        throw std::invalid_argument("integrate: values/grid length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) acc += values[i] * grid.weights[i];
    return acc;
}

} // namespace memcap
