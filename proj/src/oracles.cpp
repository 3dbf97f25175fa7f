#include "memcap/oracles.hpp"

#include <cmath>
#include <json.hpp>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace memcap {

namespace {

constexpr double kPi = std::numbers::pi;

// Independent DTFT evaluation (kept separate from the main module on purpose).
Matrix oracle_dtft(const std::vector<MatrixTap>& taps, double theta, int rows, int cols) {
    Matrix out = Matrix::Zero(rows, cols);
    for (const auto& tap : taps) {
        const double angle = -tap.delay * theta;
        out += tap.coeff * Complex(std::cos(angle), std::sin(angle));
    }
    return out;
}

Matrix oracle_noise_psd(const ChannelSpec& spec, double theta) {
    Matrix out = Matrix::Zero(spec.n_rx, spec.n_rx);
    for (const auto& tap : spec.noise_taps) {
        if (tap.delay == 0) {
            out += tap.coeff;
        } else {
            const double angle = -tap.delay * theta;
            const Complex phase(std::cos(angle), std::sin(angle));
            out += tap.coeff * phase + tap.coeff.adjoint() * std::conj(phase);
        }
    }
    return (out + out.adjoint().eval()) / 2.0;
}

} // namespace

OracleReport make_oracle_report(const std::string& case_id, double oracle_value,
                                double main_value, double tolerance) {
    OracleReport report;
    report.case_id = case_id;
    report.oracle_value = oracle_value;
    report.main_value = main_value;
    report.abs_dev = std::abs(oracle_value - main_value);
    report.rel_dev = report.abs_dev / std::max(std::abs(oracle_value), 1e-300);
    report.tolerance = tolerance;
    report.pass = report.abs_dev <= tolerance * std::max(std::abs(oracle_value), 1e-12);
    return report;
}

std::string to_json_line(const OracleReport& report) {
    nlohmann::json doc = {{"case", report.case_id},     {"oracle", report.oracle_value},
                          {"main", report.main_value},  {"abs_dev", report.abs_dev},
                          {"rel_dev", report.rel_dev},  {"tol", report.tolerance},
                          {"pass", report.pass}};
    return doc.dump();
}

Eigen::VectorXd jacobi_eigenvalues(const Matrix& hermitian) {
    const int n = static_cast<int>(hermitian.rows());
    Matrix a = hermitian;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0, diag_scale = 0.0;
        for (int p = 0; p < n; ++p) {
            diag_scale = std::max(diag_scale, std::abs(a(p, p).real()));
            for (int q = p + 1; q < n; ++q) off += std::norm(a(p, q));
        }
        if (std::sqrt(off) <= 1e-15 * std::max(diag_scale, 1e-300)) break;

        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const Complex apq = a(p, q);
                const double mag = std::abs(apq);
                if (mag < 1e-300) continue;
                const Complex beta = apq / mag;
                const double tau = (a(q, q).real() - a(p, p).real()) / (2.0 * mag);
                const double sgn = tau >= 0.0 ? 1.0 : -1.0;
                const double t = -sgn / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;

                // plane rotation J: J(p,p)=c, J(p,q)=-s*beta, J(q,p)=s*conj(beta), J(q,q)=c
                Matrix j = Matrix::Identity(n, n);
                j(p, p) = c;
                j(p, q) = -s * beta;
                j(q, p) = s * std::conj(beta);
                j(q, q) = c;
                a = (j.adjoint() * a * j).eval();
            }
        }
    }
    Eigen::VectorXd eigs(n);
    for (int i = 0; i < n; ++i) eigs[i] = a(i, i).real();
    std::sort(eigs.data(), eigs.data() + n);
    return eigs;
}

double dense_bisection_capacity(const ChannelSpec& spec, double P, int n_dense) {
    if (spec.n_tx != spec.n_rx)
        throw std::invalid_argument("dense_bisection_capacity: needs a square channel");
    if (spec.n_tx > 4)
        throw std::invalid_argument("dense_bisection_capacity: dimension too large (n <= 4)");
    if (P < 0.0) throw std::invalid_argument("dense_bisection_capacity: P must be >= 0");
    const int n = spec.n_tx;

    // trapezoid rule: n_dense cells, endpoints included at half weight
    const double h = 2.0 * kPi / n_dense;
    std::vector<double> weights(n_dense + 1, h);
    weights.front() = 0.5 * h;
    weights.back() = 0.5 * h;

    std::vector<double> levels;   // noise-referred eigenvalues, all nodes
    std::vector<double> level_w;  // matching quadrature weights
    levels.reserve(static_cast<std::size_t>(n) * (n_dense + 1));
    level_w.reserve(levels.capacity());
    for (int k = 0; k <= n_dense; ++k) {
        const double theta = -kPi + k * h;
        const Matrix H = oracle_dtft(spec.h_taps, theta, n, n);
        const Matrix R = oracle_noise_psd(spec, theta);
        const Matrix Hinv = H.inverse();
        const Matrix noise_ref = Hinv * R * Hinv.adjoint();
        const Eigen::VectorXd eigs = jacobi_eigenvalues((noise_ref + noise_ref.adjoint()) / 2.0);
        for (int i = 0; i < n; ++i) {
            levels.push_back(eigs[i]);
            level_w.push_back(weights[k]);
        }
    }

    auto total_power = [&](double mu) {
        double acc = 0.0;
        for (std::size_t i = 0; i < levels.size(); ++i)
            acc += std::max(mu - levels[i], 0.0) * level_w[i];
        return acc / (2.0 * kPi);
    };

    double lo = levels.front();
    for (double v : levels) lo = std::min(lo, v);
    if (P == 0.0) return 0.0;
    double offset = P + 1.0;
    while (total_power(lo + offset) < P) offset *= 2.0;
    double hi = lo + offset;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (total_power(mid) < P ? lo : hi) = mid;
    }
    const double mu = 0.5 * (lo + hi);

    double acc = 0.0;
    for (std::size_t i = 0; i < levels.size(); ++i)
        acc += std::max(std::log(mu / levels[i]), 0.0) * level_w[i];
    return acc / (4.0 * kPi);
}

namespace {

// One node's parameterization window for the exhaustive search.
struct NodeWindow {
    // n = 1: {p}; n = 2: {p1, p2, alpha, phi}
    std::vector<double> lo, hi;
};

struct NodePoint {
    Matrix R;
    double logdet = 0.0;        // log det(I + W R)
    std::vector<double> params; // parameter values per dimension
};

double logdet_small(const Matrix& W, const Matrix& R) {
    const int n = static_cast<int>(W.rows());
    const Matrix B = Matrix::Identity(n, n) + W * R;
    if (n == 1) return std::log(std::max(B(0, 0).real(), 1e-300));
    const Complex det = B(0, 0) * B(1, 1) - B(0, 1) * B(1, 0);
    return std::log(std::max(det.real(), 1e-300));
}

} // namespace

double grid_search_joint(const ConstraintSet& constraints,
                         const std::vector<SpectralSample>& samples, const FrequencyGrid& grid,
                         const GridSearchOptions& opts) {
    const std::size_t n_nodes = grid.size();
    if (n_nodes == 0 || n_nodes > 4)
        throw std::invalid_argument("grid_search_joint: needs 1..4 grid nodes");
    const int n = static_cast<int>(samples.front().W.rows());
    if (n > 2) throw std::invalid_argument("grid_search_joint: n_tx <= 2 only");
    const int dims = n == 1 ? 1 : 4;
    const int pts = opts.points_per_dim;

    double total_points = 1.0;
    for (std::size_t k = 0; k < n_nodes; ++k) total_points *= std::pow(pts, dims);
    if (total_points > static_cast<double>(opts.max_points))
        throw std::invalid_argument("grid_search_joint: point budget exceeded");

    double budget = 0.0;
    if (constraints.tpc) budget = *constraints.tpc;
    if (constraints.pac) {
        double s = 0.0;
        for (double p : *constraints.pac) s += p;
        budget = constraints.tpc ? std::min(budget, s) : s;
    }
    double min_wbar = 1.0;
    for (double w : grid.weights)
        min_wbar = std::min(min_wbar, w / (2.0 * kPi));
    const double p_max = opts.p_max > 0.0 ? opts.p_max : budget / std::max(min_wbar, 1e-12);

    std::vector<std::vector<Matrix>> ipc_grams(constraints.ipc.size());
    std::vector<std::vector<Matrix>> ehc_grams(constraints.ehc.size());
    for (std::size_t c = 0; c < constraints.ipc.size(); ++c)
        for (const auto& f : constraints.ipc[c].factors)
            ipc_grams[c].push_back((f.adjoint() * f).eval());
    for (std::size_t c = 0; c < constraints.ehc.size(); ++c)
        for (const auto& f : constraints.ehc[c].factors)
            ehc_grams[c].push_back((f.adjoint() * f).eval());

    std::vector<NodeWindow> windows(n_nodes);
    for (auto& w : windows) {
        if (n == 1) {
            w.lo = {0.0};
            w.hi = {p_max};
        } else {
            w.lo = {0.0, 0.0, 0.0, 0.0};
            w.hi = {p_max, p_max, kPi / 2.0, 2.0 * kPi};
        }
    }

    double best = -1.0;
    std::vector<std::vector<double>> best_params(n_nodes);

    for (int level = 0; level < opts.refine_levels; ++level) {
        // per-node candidate tables
        std::vector<std::vector<NodePoint>> tables(n_nodes);
        for (std::size_t k = 0; k < n_nodes; ++k) {
            const NodeWindow& w = windows[k];
            auto coord = [&](int dim, int tick) {
                return pts == 1 ? w.lo[dim]
                                : w.lo[dim] + (w.hi[dim] - w.lo[dim]) * tick / (pts - 1);
            };
            if (n == 1) {
                for (int t0 = 0; t0 < pts; ++t0) {
                    NodePoint pt;
                    pt.R = Matrix::Constant(1, 1, Complex(coord(0, t0), 0.0));
                    pt.logdet = logdet_small(samples[k].W, pt.R);
                    pt.params = {coord(0, t0)};
                    tables[k].push_back(std::move(pt));
                }
            } else {
                for (int t0 = 0; t0 < pts; ++t0)
                    for (int t1 = 0; t1 < pts; ++t1)
                        for (int t2 = 0; t2 < pts; ++t2)
                            for (int t3 = 0; t3 < pts; ++t3) {
                                const double p1 = coord(0, t0), p2 = coord(1, t1);
                                const double alpha = coord(2, t2), phi = coord(3, t3);
                                Eigen::Vector2cd u, v;
                                const double ca = std::cos(alpha), sa = std::sin(alpha);
                                const Complex e(std::cos(phi), std::sin(phi));
                                u << Complex(ca, 0.0), sa * e;
                                v << -sa * std::conj(e), Complex(ca, 0.0);
                                NodePoint pt;
                                pt.R = p1 * (u * u.adjoint()) + p2 * (v * v.adjoint());
                                pt.logdet = logdet_small(samples[k].W, pt.R);
                                pt.params = {p1, p2, alpha, phi};
                                tables[k].push_back(std::move(pt));
                            }
            }
        }

        // depth-first combination over nodes with running constraint sums
        std::vector<double> tpc_sum(n_nodes + 1, 0.0);
        std::vector<std::vector<double>> pac_sum(n_nodes + 1),
            ipc_sum(n_nodes + 1), ehc_sum(n_nodes + 1);
        std::vector<double> logdet_sum(n_nodes + 1, 0.0);
        for (auto& v : pac_sum) v.assign(n, 0.0);
        for (auto& v : ipc_sum) v.assign(constraints.ipc.size(), 0.0);
        for (auto& v : ehc_sum) v.assign(constraints.ehc.size(), 0.0);
        std::vector<const NodePoint*> chosen(n_nodes, nullptr);

        const double slop = 1e-9;
        auto recurse = [&](auto&& self, std::size_t k) -> void {
            if (k == n_nodes) {
                for (std::size_t c = 0; c < constraints.ehc.size(); ++c)
                    if (ehc_sum[k][c] < constraints.ehc[c].limit * (1.0 - 1e-12) - 1e-15)
                        return;
                const double objective = 0.5 * logdet_sum[k];
                if (objective > best) {
                    best = objective;
                    for (std::size_t i = 0; i < n_nodes; ++i) best_params[i] = chosen[i]->params;
                }
                return;
            }
            const double wbar = grid.weights[k] / (2.0 * kPi);
            for (const NodePoint& pt : tables[k]) {
                const double tr = pt.R.trace().real();
                tpc_sum[k + 1] = tpc_sum[k] + tr * wbar;
                if (constraints.tpc && tpc_sum[k + 1] > *constraints.tpc * (1.0 + 1e-12) + slop)
                    continue;
                bool ok = true;
                for (int i = 0; i < n && ok; ++i) {
                    pac_sum[k + 1][i] = pac_sum[k][i] + pt.R(i, i).real() * wbar;
                    if (constraints.pac &&
                        pac_sum[k + 1][i] > (*constraints.pac)[i] * (1.0 + 1e-12) + slop)
                        ok = false;
                }
                if (!ok) continue;
                for (std::size_t c = 0; c < constraints.ipc.size() && ok; ++c) {
                    ipc_sum[k + 1][c] =
                        ipc_sum[k][c] + (ipc_grams[c][k] * pt.R).trace().real() * wbar;
                    if (ipc_sum[k + 1][c] > constraints.ipc[c].limit * (1.0 + 1e-12) + slop)
                        ok = false;
                }
                if (!ok) continue;
                for (std::size_t c = 0; c < constraints.ehc.size(); ++c)
                    ehc_sum[k + 1][c] =
                        ehc_sum[k][c] + (ehc_grams[c][k] * pt.R).trace().real() * wbar;
                logdet_sum[k + 1] = logdet_sum[k] + pt.logdet * wbar;
                chosen[k] = &pt;
                self(self, k + 1);
            }
        };
        recurse(recurse, 0);

        if (best < 0.0) break; // nothing feasible at this resolution

        // zoom each node's window around the incumbent
        for (std::size_t k = 0; k < n_nodes; ++k) {
            NodeWindow& w = windows[k];
            for (int d = 0; d < dims; ++d) {
                const double span = w.hi[d] - w.lo[d];
                const double center = best_params[k][d];
                double half = span / 4.0;
                double lo = center - half, hi = center + half;
                if (d <= (n == 1 ? 0 : 1)) { // power dims clamp at 0
                    lo = std::max(lo, 0.0);
                    hi = std::max(hi, lo + 1e-12);
                } else if (d == 2) { // alpha in [0, pi/2]
                    lo = std::max(lo, 0.0);
                    hi = std::min(hi, kPi / 2.0);
                }
                // phi stays unclamped: only enters through cos/sin
                w.lo[d] = lo;
                w.hi[d] = hi;
            }
        }
    }
    if (best < 0.0) throw std::runtime_error("grid_search_joint: no feasible point found");
    return best;
}

double miso_pac_split_search(const Eigen::RowVectorXcd& h, double sigma2,
                             const std::vector<double>& pac, int resolution) {
    const int n = static_cast<int>(h.size());
    if (n < 1 || n > 3)
        throw std::invalid_argument("miso_pac_split_search: 1..3 antennas only");
    if (static_cast<int>(pac.size()) != n)
        throw std::invalid_argument("miso_pac_split_search: pac size mismatch");

    std::vector<double> gains(n);
    for (int i = 0; i < n; ++i) gains[i] = std::abs(h[i]);

    std::vector<int> tick(n, 0);
    double best = 0.0;
    while (true) {
        double amp = 0.0;
        for (int i = 0; i < n; ++i) {
            const double r = pac[i] * tick[i] / (resolution - 1);
            amp += gains[i] * std::sqrt(r);
        }
        best = std::max(best, 0.5 * std::log(1.0 + amp * amp / sigma2));
        int d = 0;
        while (d < n && ++tick[d] == resolution) tick[d++] = 0;
        if (d == n) break;
    }
    return best;
}

} // namespace memcap
