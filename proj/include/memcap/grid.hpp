#pragma once

#include <vector>

namespace memcap {

/// Quadrature grid on [-pi, pi]: strictly increasing nodes with positive
/// weights summing to 2*pi.
struct FrequencyGrid {
    std::vector<double> nodes;
    std::vector<double> weights;

    FrequencyGrid() = default;
    FrequencyGrid(std::vector<double> nodes_, std::vector<double> weights_);

    std::size_t size() const { return nodes.size(); }
};

/// Midpoint rule with N equal cells: theta_i = -pi + (i + 1/2) * 2pi/N.
/// Avoids the endpoints +-pi, where example channels are often singular.
FrequencyGrid uniform_grid(int n_nodes);

/// Trapezoid-style grid with N cells and N+1 nodes including both
/// endpoints +-pi. Used for admissibility scans so that endpoint
/// singularities are actually sampled.
FrequencyGrid endpoint_grid(int n_cells);

/// Riemann sum: sum_i values[i] * weights[i].
double integrate(const FrequencyGrid& grid, const std::vector<double>& values);

} // namespace memcap
