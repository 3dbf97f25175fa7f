#include "memcap/joint_solver.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "memcap/errors.hpp"

namespace memcap {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Matrix hermitize(const Matrix& a) { return (a + a.adjoint().eval()) / 2.0; }

Matrix gram_of(const Matrix& factor) { return hermitize(factor.adjoint() * factor); }

Matrix psd_sqrt(const Matrix& a) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(a);
    Eigen::VectorXd d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return hermitize(es.eigenvectors() * d.asDiagonal() * es.eigenvectors().adjoint());
}

// log det(I + W R) for Hermitian PSD W, R via det(I + S W S), S = R^(1/2).
double log_det_identity_plus(const Matrix& W, const Matrix& R) {
    const Matrix S = psd_sqrt(R);
    const Matrix B = hermitize(Matrix::Identity(W.rows(), W.cols()) + S * W * S);
    Eigen::SelfAdjointEigenSolver<Matrix> es(B, Eigen::EigenvaluesOnly);
    double acc = 0.0;
    for (int i = 0; i < es.eigenvalues().size(); ++i)
        acc += std::log(std::max(es.eigenvalues()[i], 1e-300));
    return acc;
}

// R* and the inner optimum value log det(I + W R*) - tr(M R*).
std::pair<Matrix, double> inner_waterfill_full(const Matrix& W, const Matrix& M) {
    Eigen::SelfAdjointEigenSolver<Matrix> es_m(M);
    if (es_m.info() != Eigen::Success || es_m.eigenvalues().minCoeff() <= 0.0)
        throw MNotPositiveError("inner_waterfill: M is not positive definite");
    const Matrix m_isqrt = es_m.operatorInverseSqrt();

    const Matrix Wt = hermitize(m_isqrt * W * m_isqrt);
    Eigen::SelfAdjointEigenSolver<Matrix> es_w(Wt);
    const int n = static_cast<int>(W.rows());
    Eigen::VectorXd d(n);
    double value = 0.0;
    for (int i = 0; i < n; ++i) {
        const double lw = es_w.eigenvalues()[i];
        if (lw > 1.0) {
            d[i] = 1.0 - 1.0 / lw;
            value += std::log(lw) - d[i];
        } else {
            d[i] = 0.0;
        }
    }
    Matrix R = m_isqrt * (es_w.eigenvectors() * d.asDiagonal() * es_w.eigenvectors().adjoint()) *
               m_isqrt;
    return {hermitize(R), value};
}

enum class Kind { tpc, pac, ipc, ehc };

struct View {
    Kind kind;
    int index = 0;   // position within its group
    double bound = 0.0;
    const std::vector<Matrix>* grams = nullptr; // ipc/ehc only
};

struct Sweep {
    std::vector<Matrix> psd;
    std::vector<double> slacks;   // report convention, >= 0 feasible
    std::vector<double> attained; // physical LHS values
    double dual = 0.0;            // upper bound on capacity in nats
};

struct Candidate {
    bool valid = false;
    double objective = -kInf;
    std::vector<Matrix> psd;
    std::vector<double> slacks;
};

class DualSolver {
public:
    DualSolver(const ConstraintSet& cs, const std::vector<SpectralSample>& samples,
               const FrequencyGrid& grid, const JointOptions& opts)
        : cs_(cs), samples_(samples), grid_(grid), opts_(opts),
          n_(static_cast<int>(samples.empty() ? 0 : samples.front().W.rows())) {
        wbar_.resize(grid.size());
        for (std::size_t k = 0; k < grid.size(); ++k)
            wbar_[k] = grid.weights[k] / (2.0 * std::numbers::pi);

        if (cs.tpc) views_.push_back({Kind::tpc, 0, *cs.tpc, nullptr});
        if (cs.pac)
            for (int i = 0; i < n_; ++i) views_.push_back({Kind::pac, i, (*cs.pac)[i], nullptr});
        grams_.reserve(cs.ipc.size() + cs.ehc.size());
        for (std::size_t k = 0; k < cs.ipc.size(); ++k) {
            grams_.push_back(gram_field(cs.ipc[k]));
            views_.push_back({Kind::ipc, static_cast<int>(k), cs.ipc[k].limit, &grams_.back()});
        }
        for (std::size_t m = 0; m < cs.ehc.size(); ++m) {
            grams_.push_back(gram_field(cs.ehc[m]));
            views_.push_back({Kind::ehc, static_cast<int>(m), cs.ehc[m].limit, &grams_.back()});
        }
    }

    JointResult solve() {
        std::vector<double> y = initial_multipliers();
        subgradient_phase(y);
        refine_phase(y);
        return assemble(y);
    }

private:
    std::vector<Matrix> gram_field(const LinearPowerConstraint& c) const {
        std::vector<Matrix> g;
        g.reserve(c.factors.size());
        for (const auto& f : c.factors) g.push_back(gram_of(f));
        return g;
    }

    std::vector<double> initial_multipliers() const {
        std::vector<double> y(views_.size(), 0.0);
        for (std::size_t c = 0; c < views_.size(); ++c) {
            if (views_[c].kind == Kind::tpc)
                y[c] = 1.0 / (1.0 + views_[c].bound);
            else if (views_[c].kind == Kind::pac && !cs_.tpc)
                y[c] = 1.0 / (1.0 + views_[c].bound);
        }
        return y;
    }

    Matrix assemble_m(const std::vector<double>& y, std::size_t node) const {
        Matrix M = Matrix::Zero(n_, n_);
        for (std::size_t c = 0; c < views_.size(); ++c) {
            const View& v = views_[c];
            switch (v.kind) {
                case Kind::tpc: M += y[c] * Matrix::Identity(n_, n_); break;
                case Kind::pac: M(v.index, v.index) += y[c]; break;
                case Kind::ipc: M += y[c] * (*v.grams)[node]; break;
                case Kind::ehc: M -= y[c] * (*v.grams)[node]; break;
            }
        }
        return hermitize(M);
    }

    bool pd_ok(const std::vector<double>& y) const {
        if (cs_.ehc.empty()) {
            // M = diag terms + PSD terms; positive diagonal base suffices
            double tpc_part = 0.0;
            std::vector<double> diag(n_, 0.0);
            for (std::size_t c = 0; c < views_.size(); ++c) {
                if (views_[c].kind == Kind::tpc) tpc_part = y[c];
                if (views_[c].kind == Kind::pac) diag[views_[c].index] = y[c];
            }
            double base = kInf, top = 0.0;
            for (int i = 0; i < n_; ++i) {
                base = std::min(base, tpc_part + diag[i]);
                top = std::max(top, tpc_part + diag[i]);
            }
            return base > 1e-18 * (1.0 + top);
        }
        for (std::size_t k = 0; k < samples_.size(); ++k) {
            const Matrix M = assemble_m(y, k);
            Eigen::SelfAdjointEigenSolver<Matrix> es(M, Eigen::EigenvaluesOnly);
            const double lmax = std::max(std::abs(es.eigenvalues().maxCoeff()),
                                         std::abs(es.eigenvalues().minCoeff()));
            if (es.eigenvalues().minCoeff() <= 1e-13 * std::max(1.0, lmax)) return false;
        }
        return true;
    }

    Sweep sweep(const std::vector<double>& y) {
        ++iterations_;
        Sweep out;
        out.psd.resize(samples_.size());
        double inner_mean = 0.0;
        for (std::size_t k = 0; k < samples_.size(); ++k) {
            auto [R, val] = inner_waterfill_full(samples_[k].W, assemble_m(y, k));
            inner_mean += val * wbar_[k];
            out.psd[k] = std::move(R);
        }
        out.attained = attained_values(out.psd);
        out.slacks = slacks_from(out.attained);
        double bias = 0.0;
        for (std::size_t c = 0; c < views_.size(); ++c)
            bias += y[c] * (views_[c].kind == Kind::ehc ? -views_[c].bound : views_[c].bound);
        out.dual = 0.5 * (inner_mean + bias);
        best_dual_ = std::min(best_dual_, out.dual);
        return out;
    }

    std::vector<double> attained_values(const std::vector<Matrix>& psd) const {
        std::vector<double> a(views_.size(), 0.0);
        for (std::size_t k = 0; k < psd.size(); ++k) {
            for (std::size_t c = 0; c < views_.size(); ++c) {
                const View& v = views_[c];
                double term = 0.0;
                switch (v.kind) {
                    case Kind::tpc: term = psd[k].trace().real(); break;
                    case Kind::pac: term = psd[k](v.index, v.index).real(); break;
                    case Kind::ipc:
                    case Kind::ehc: term = ((*v.grams)[k] * psd[k]).trace().real(); break;
                }
                a[c] += term * wbar_[k];
            }
        }
        return a;
    }

    std::vector<double> slacks_from(const std::vector<double>& attained) const {
        std::vector<double> s(views_.size());
        for (std::size_t c = 0; c < views_.size(); ++c)
            s[c] = views_[c].kind == Kind::ehc ? attained[c] - views_[c].bound
                                               : views_[c].bound - attained[c];
        return s;
    }

    double objective(const std::vector<Matrix>& psd) const {
        double acc = 0.0;
        for (std::size_t k = 0; k < psd.size(); ++k)
            acc += log_det_identity_plus(samples_[k].W, psd[k]) * wbar_[k];
        return 0.5 * acc;
    }

    bool slacks_feasible(const std::vector<double>& s) const {
        for (std::size_t c = 0; c < views_.size(); ++c)
            if (s[c] < -opts_.feas_tol * (1.0 + std::abs(views_[c].bound))) return false;
        return true;
    }

    // Scale a dual iterate's PSD field onto the feasible set and keep it if
    // it beats the incumbent primal.
    void offer_candidate(const std::vector<Matrix>& psd) {
        const std::vector<double> attained = attained_values(psd);
        double s_hi = 1.0, s_lo = 0.0;
        for (std::size_t c = 0; c < views_.size(); ++c) {
            const View& v = views_[c];
            if (v.kind == Kind::ehc) {
                if (attained[c] > 0.0)
                    s_lo = std::max(s_lo, v.bound / attained[c]);
                else if (v.bound > 0.0)
                    return;
            } else if (attained[c] > v.bound) {
                s_hi = std::min(s_hi, v.bound / attained[c]);
            }
        }
        if (s_lo > s_hi * (1.0 + 10.0 * opts_.feas_tol)) return;
        std::vector<Matrix> scaled = psd;
        for (auto& R : scaled) R *= s_hi;
        std::vector<double> s = slacks_from(attained_values(scaled));
        if (!slacks_feasible(s)) return;
        const double obj = objective(scaled);
        if (obj > best_.objective) {
            best_.valid = true;
            best_.objective = obj;
            best_.psd = std::move(scaled);
            best_.slacks = std::move(s);
        }
    }

    bool budget_left() const { return iterations_ < opts_.max_iters; }

    double gap() const {
        if (!best_.valid) return kInf;
        return std::max(best_dual_ - best_.objective, 0.0);
    }

    bool converged() const {
        return best_.valid && gap() <= opts_.gap_tol_rel * (1.0 + std::abs(best_.objective));
    }

    // Phase 1: projected subgradient with diminishing step a/sqrt(t).
    void subgradient_phase(std::vector<double>& y) {
        std::vector<Matrix> avg;
        int averaged = 0;
        for (int t = 1; t <= opts_.subgrad_iters && budget_left(); ++t) {
            const Sweep sw = sweep(y);
            if (avg.empty()) {
                avg = sw.psd;
            } else {
                for (std::size_t k = 0; k < avg.size(); ++k) avg[k] += sw.psd[k];
            }
            ++averaged;

            std::vector<double> delta(views_.size());
            for (std::size_t c = 0; c < views_.size(); ++c) {
                const double scale = opts_.step / (1.0 + std::abs(views_[c].bound));
                delta[c] = -scale / std::sqrt(static_cast<double>(t)) * sw.slacks[c];
            }
            std::vector<double> y_next(views_.size());
            for (int shrink = 0; shrink <= 60; ++shrink) {
                for (std::size_t c = 0; c < views_.size(); ++c)
                    y_next[c] = std::max(y[c] + delta[c], 0.0);
                if (pd_ok(y_next)) break;
                // domain safeguard: shrink the EHC step first, then everything
                for (std::size_t c = 0; c < views_.size(); ++c)
                    if (views_[c].kind == Kind::ehc || shrink >= 30) delta[c] *= 0.5;
                if (shrink == 60)
                    for (std::size_t c = 0; c < views_.size(); ++c) y_next[c] = y[c];
            }
            y = y_next;
        }
        if (averaged > 0) {
            for (auto& R : avg) R /= static_cast<double>(averaged);
            offer_candidate(avg);
        }
    }

    // Slack of constraint c at a trial value of its own multiplier, given the
    // rest of y. Probes outside the positive-definite dual domain map to
    // -inf for budget-side coordinates (need a larger multiplier) and +inf
    // for harvest-side ones (need a smaller one).
    double coord_slack(std::vector<double>& y, std::size_t c, double v) {
        const double saved = y[c];
        y[c] = v;
        double out;
        if (!pd_ok(y)) {
            out = views_[c].kind == Kind::ehc ? kInf : -kInf;
        } else {
            out = sweep(y).slacks[c];
        }
        y[c] = saved;
        return out;
    }

    void coordinate_pass(std::vector<double>& y) {
        for (std::size_t c = 0; c < views_.size() && budget_left(); ++c) {
            const double at_zero = coord_slack(y, c, 0.0);
            if (at_zero >= 0.0) {
                y[c] = 0.0;
                continue;
            }
            double hi = std::max(2.0 * y[c], 1e-9);
            bool bracketed = false;
            for (int d = 0; d < 200 && budget_left(); ++d) {
                if (coord_slack(y, c, hi) >= 0.0) {
                    bracketed = true;
                    break;
                }
                hi *= 2.0;
            }
            if (!bracketed) continue;
            double lo = 0.0;
            for (int it = 0; it < opts_.bisect_iters && budget_left(); ++it) {
                const double mid = 0.5 * (lo + hi);
                (coord_slack(y, c, mid) >= 0.0 ? hi : lo) = mid;
            }
            y[c] = hi;
        }
    }

    bool newton_polish(std::vector<double>& y) {
        const double y_top = *std::max_element(y.begin(), y.end());
        std::vector<std::size_t> active;
        for (std::size_t c = 0; c < views_.size(); ++c)
            if (y[c] > 1e-11 * (1.0 + y_top)) active.push_back(c);
        if (active.empty()) return false;
        const int k = static_cast<int>(active.size());

        auto residual = [&](std::vector<double>& yy) {
            const Sweep sw = sweep(yy);
            Eigen::VectorXd f(k);
            for (int i = 0; i < k; ++i) f[i] = sw.slacks[active[i]];
            return f;
        };

        Eigen::VectorXd f = residual(y);
        bool improved = false;
        for (int round = 0; round < 12 && budget_left(); ++round) {
            double fscale = 0.0;
            for (int i = 0; i < k; ++i)
                fscale = std::max(fscale, std::abs(f[i]) / (1.0 + std::abs(views_[active[i]].bound)));
            if (fscale <= 1e-14) break;

            Eigen::MatrixXd jac(k, k);
            bool jac_ok = true;
            for (int j = 0; j < k && jac_ok; ++j) {
                const std::size_t cj = active[j];
                const double h = std::max(1e-7 * y[cj], 1e-9 * (1.0 + y_top));
                std::vector<double> yp = y;
                yp[cj] += h;
                double sign = 1.0;
                if (!pd_ok(yp)) { // EHC coordinate near the domain boundary
                    yp[cj] = y[cj] - h;
                    sign = -1.0;
                    if (yp[cj] < 0.0 || !pd_ok(yp)) {
                        jac_ok = false;
                        break;
                    }
                }
                if (!budget_left()) { jac_ok = false; break; }
                jac.col(j) = sign * (residual(yp) - f) / h;
            }
            if (!jac_ok) break;

            Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
            if (!lu.isInvertible()) break;
            const Eigen::VectorXd step = lu.solve(-f);

            double alpha = 1.0;
            bool accepted = false;
            bool active_set_changed = false;
            for (int bt = 0; bt < 25 && budget_left(); ++bt, alpha *= 0.5) {
                std::vector<double> yn = y;
                bool clamped_negative = false;
                for (int i = 0; i < k; ++i) {
                    yn[active[i]] = y[active[i]] + alpha * step[i];
                    if (yn[active[i]] < 0.0) {
                        yn[active[i]] = 0.0;
                        clamped_negative = true;
                    }
                }
                if (!pd_ok(yn)) continue;
                const Eigen::VectorXd fn = residual(yn);
                if (fn.norm() <= (1.0 - 1e-4 * alpha) * f.norm() || clamped_negative) {
                    y = yn;
                    f = fn;
                    accepted = true;
                    improved = true;
                    active_set_changed = clamped_negative;
                    break;
                }
            }
            if (!accepted) break;
            // a multiplier hit zero: hand back to the coordinate passes, which
            // re-derive the active set
            if (active_set_changed) break;
        }
        return improved;
    }

    void refine_phase(std::vector<double>& y) {
        while (budget_left() && !converged()) {
            coordinate_pass(y);
            if (!pd_ok(y)) continue;
            offer_candidate(sweep(y).psd);
            if (converged() || !budget_left()) break;
            newton_polish(y);
            if (pd_ok(y)) offer_candidate(sweep(y).psd);
        }
    }

    JointResult assemble(const std::vector<double>& y) {
        JointResult result;
        result.iterations = iterations_;
        result.multipliers = to_values(y);
        if (!best_.valid) {
            result.status = SolveStatus::max_iters;
            result.duality_gap = kInf;
            result.psd.assign(samples_.size(), Matrix::Zero(n_, n_));
            result.slacks = to_values(slacks_from(attained_values(result.psd)));
            return result;
        }
        result.capacity_nats = best_.objective;
        result.psd = best_.psd;
        result.slacks = to_values(best_.slacks);
        result.duality_gap = gap();

        // multiplier * slack products are on the order of the gap itself
        const double gap_tol_abs =
            opts_.gap_tol_rel * (1.0 + std::abs(result.capacity_nats));
        bool comp_ok = true;
        for (std::size_t c = 0; c < views_.size(); ++c) {
            const double product = y[c] * std::abs(best_.slacks[c]);
            if (product > 10.0 * gap_tol_abs * (1.0 + std::abs(views_[c].bound)))
                comp_ok = false;
        }
        const bool gap_ok = result.duality_gap <= gap_tol_abs;
        result.status = (gap_ok && comp_ok && slacks_feasible(best_.slacks))
                            ? SolveStatus::optimal
                            : SolveStatus::max_iters;
        return result;
    }

    ConstraintValues to_values(const std::vector<double>& flat) const {
        ConstraintValues values;
        values.pac.assign(cs_.pac ? n_ : 0, 0.0);
        values.ipc.assign(cs_.ipc.size(), 0.0);
        values.ehc.assign(cs_.ehc.size(), 0.0);
        for (std::size_t c = 0; c < views_.size(); ++c) {
            switch (views_[c].kind) {
                case Kind::tpc: values.tpc = flat[c]; break;
                case Kind::pac: values.pac[views_[c].index] = flat[c]; break;
                case Kind::ipc: values.ipc[views_[c].index] = flat[c]; break;
                case Kind::ehc: values.ehc[views_[c].index] = flat[c]; break;
            }
        }
        return values;
    }

    const ConstraintSet& cs_;
    const std::vector<SpectralSample>& samples_;
    const FrequencyGrid& grid_;
    JointOptions opts_;
    int n_;
    std::vector<double> wbar_;
    std::vector<View> views_;
    std::vector<std::vector<Matrix>> grams_;
    int iterations_ = 0;
    double best_dual_ = kInf;
    Candidate best_;
};

} // namespace

const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::optimal: return "optimal";
        case SolveStatus::infeasible: return "infeasible";
        case SolveStatus::max_iters: return "max_iters";
    }
    return "unknown";
}

void ConstraintSet::validate(int n_tx, std::size_t n_nodes) const {
    if (!tpc && !pac)
        throw SchemaError("unbounded problem: need at least one of tpc/pac", "constraints");
    if (tpc && (!std::isfinite(*tpc) || *tpc < 0.0))
        throw SchemaError("tpc budget must be finite and nonnegative", "constraints.tpc");
    if (pac) {
        if (static_cast<int>(pac->size()) != n_tx)
            throw SchemaError("pac needs one budget per transmit antenna", "constraints.pac");
        for (double p : *pac)
            if (!std::isfinite(p) || p < 0.0)
                throw SchemaError("pac budgets must be finite and nonnegative",
                                  "constraints.pac");
    }
    auto check_coupled = [&](const std::vector<LinearPowerConstraint>& list, const char* name) {
        for (const auto& c : list) {
            if (!std::isfinite(c.limit) || c.limit < 0.0)
                throw SchemaError("limit must be finite and nonnegative",
                                  std::string("constraints.") + name);
            if (c.factors.size() != n_nodes)
                throw SchemaError("factor field must have one matrix per grid node",
                                  std::string("constraints.") + name);
            for (const auto& f : c.factors)
                if (f.cols() != n_tx || f.rows() < 1)
                    throw SchemaError("factor matrices must be n_k x n_tx",
                                      std::string("constraints.") + name);
        }
    };
    check_coupled(ipc, "ipc");
    check_coupled(ehc, "ehc");
}

Matrix inner_waterfill(const Matrix& W, const Matrix& M) {
    return inner_waterfill_full(W, M).first;
}

double capacity_objective(const std::vector<SpectralSample>& samples, const FrequencyGrid& grid,
                          const std::vector<Matrix>& psd) {
    if (samples.size() != grid.size() || psd.size() != grid.size())
        throw std::invalid_argument("capacity_objective: field/grid length mismatch");
    double acc = 0.0;
    for (std::size_t k = 0; k < samples.size(); ++k)
        acc += log_det_identity_plus(samples[k].W, psd[k]) * grid.weights[k];
    return acc / (4.0 * std::numbers::pi);
}

FeasibilityReport feasibility_check(const ConstraintSet& constraints,
                                    const std::vector<SpectralSample>& samples,
                                    const FrequencyGrid& grid) {
    FeasibilityReport report;
    if (constraints.ehc.empty()) return report;

    const int n = static_cast<int>(samples.empty() ? 0 : samples.front().W.rows());
    for (std::size_t m = 0; m < constraints.ehc.size(); ++m) {
        const auto& ehc = constraints.ehc[m];
        if (ehc.limit <= 0.0) continue;

        double best = 0.0;
        for (std::size_t k = 0; k < grid.size(); ++k) {
            const Matrix G = gram_of(ehc.factors[k]);
            Eigen::SelfAdjointEigenSolver<Matrix> es(G);
            const int top = n - 1;
            const double lmax = es.eigenvalues()[top];
            if (lmax <= 0.0) continue;
            const Eigen::VectorXcd v = es.eigenvectors().col(top);

            double harvest = 0.0;
            if (!constraints.pac) {
                harvest = *constraints.tpc * lmax; // concentrate the budget on the eigenmode
            } else {
                // split budgets along the dominant eigenmode: maximize
                // sum_i |v_i| sqrt(s_i) subject to s_i <= P_i (and total <= P)
                std::vector<double> caps = *constraints.pac;
                double total = 0.0;
                for (double p : caps) total += p;
                if (constraints.tpc) total = std::min(total, *constraints.tpc);
                std::vector<double> split(n, 0.0);
                std::vector<bool> capped(n, false);
                for (int pass = 0; pass < n + 1; ++pass) {
                    double weight = 0.0, used = 0.0;
                    for (int i = 0; i < n; ++i) {
                        if (capped[i]) used += caps[i];
                        else weight += std::norm(v[i]);
                    }
                    bool changed = false;
                    const double free_budget = std::max(total - used, 0.0);
                    for (int i = 0; i < n; ++i) {
                        if (capped[i]) { split[i] = caps[i]; continue; }
                        split[i] = weight > 0.0 ? free_budget * std::norm(v[i]) / weight : 0.0;
                        if (split[i] > caps[i]) { capped[i] = true; changed = true; }
                    }
                    if (!changed) break;
                }
                Eigen::VectorXcd w(n);
                for (int i = 0; i < n; ++i) {
                    const Complex phase =
                        std::abs(v[i]) > 0.0 ? v[i] / std::abs(v[i]) : Complex(1.0, 0.0);
                    w[i] = std::sqrt(std::max(split[i], 0.0)) * phase;
                }
                harvest = (w.adjoint() * G * w)(0, 0).real();
            }
            best = std::max(best, harvest);
        }
        if (best < ehc.limit * (1.0 - 1e-12)) {
            report.feasible = false;
            report.ehc_index = static_cast<int>(m);
            report.max_harvest = best;
            report.floor = ehc.limit;
            std::ostringstream msg;
            msg << "ehc[" << m << "]: floor " << ehc.limit
                << " exceeds maximum deliverable harvest " << best;
            report.witness = msg.str();
            return report;
        }
    }
    return report;
}

JointResult solve_joint(const ConstraintSet& constraints,
                        const std::vector<SpectralSample>& samples, const FrequencyGrid& grid,
                        const JointOptions& opts) {
    if (samples.size() != grid.size())
        throw std::invalid_argument("solve_joint: samples/grid length mismatch");
    const int n = static_cast<int>(samples.empty() ? 0 : samples.front().W.rows());
    constraints.validate(n, grid.size());

    const FeasibilityReport feas = feasibility_check(constraints, samples, grid);
    if (!feas.feasible) {
        JointResult result;
        result.status = SolveStatus::infeasible;
        result.infeasible_witness = feas.witness;
        result.psd.assign(samples.size(), Matrix::Zero(n, n));
        return result;
    }
    return DualSolver(constraints, samples, grid, opts).solve();
}

RankOneExtraction extract_rank_one(const JointResult& result, double tol,
                                   const std::vector<Matrix>* miso_channel) {
    RankOneExtraction out;
    out.beams.reserve(result.psd.size());
    out.residuals.reserve(result.psd.size());
    for (std::size_t k = 0; k < result.psd.size(); ++k) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(result.psd[k]);
        const int n = static_cast<int>(result.psd[k].rows());
        const double l1 = std::max(es.eigenvalues()[n - 1], 0.0);
        const double l2 = n > 1 ? std::max(es.eigenvalues()[n - 2], 0.0) : 0.0;
        const double residual = l1 > 0.0 ? l2 / l1 : 0.0;
        out.residuals.push_back(residual);
        out.max_residual = std::max(out.max_residual, residual);
        out.beams.push_back(std::sqrt(l1) * es.eigenvectors().col(n - 1));

        if (miso_channel) {
            if (residual > tol)
                throw NotRankOneError("node " + std::to_string(k) + ": residual " +
                                      std::to_string(residual) + " exceeds tolerance");
            const Matrix& H = (*miso_channel)[k];
            if (H.rows() != 1)
                throw std::invalid_argument("extract_rank_one: MISO check needs 1 x n_tx rows");
            // w_i must carry the phase that aligns H w to a common rotation
            const Eigen::VectorXcd& w = out.beams.back();
            Complex ref(0.0, 0.0);
            double ref_mag = 0.0;
            std::vector<Complex> z(w.size());
            double z_top = 0.0;
            for (int i = 0; i < w.size(); ++i) {
                z[i] = w[i] * H(0, i);
                z_top = std::max(z_top, std::abs(z[i]));
                if (std::abs(z[i]) > ref_mag) { ref_mag = std::abs(z[i]); ref = z[i]; }
            }
            for (int i = 0; i < w.size(); ++i) {
                if (std::abs(z[i]) <= 1e-9 * z_top) continue;
                const double dev = std::abs(std::arg(z[i] * std::conj(ref)));
                if (dev > 1e-6)
                    throw NotRankOneError("node " + std::to_string(k) +
                                          ": beam phase deviates from channel phase by " +
                                          std::to_string(dev) + " rad");
            }
        }
    }
    return out;
}

} // namespace memcap
