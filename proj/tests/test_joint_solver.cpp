#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "memcap/errors.hpp"
#include "memcap/joint_solver.hpp"
#include "memcap/oracles.hpp"
#include "memcap/waterfill.hpp"
#include "support.hpp"

using namespace memcap;
using namespace memcap::test;

namespace {

constexpr double kPi = std::numbers::pi;

JointOptions tight_opts() {
    JointOptions opts;
    opts.gap_tol_rel = 1e-9;
    opts.subgrad_iters = 60;
    return opts;
}

// scalar two-tap channel with a factor channel favoring the opposite band
struct ScalarCoupledInstance {
    ChannelSpec spec = scalar_spec({1.0, 0.5}, {1.0});
    FrequencyGrid grid = uniform_grid(3);
    std::vector<SpectralSample> samples = whiten_grid(spec, grid);

    LinearPowerConstraint coupled(double limit) const {
        LinearPowerConstraint c;
        c.limit = limit;
        for (double theta : grid.nodes) {
            const Complex h = 1.0 - 0.5 * std::exp(Complex(0.0, -theta));
            c.factors.push_back(Matrix::Constant(1, 1, h));
        }
        return c;
    }
};

double brute_force_inner(const Matrix& W, const Matrix& M, int restarts, std::mt19937& rng) {
    const int n = static_cast<int>(W.rows());
    auto objective = [&](const Matrix& a) {
        const Matrix r = a * a.adjoint();
        // logdet via Hermitian similarity: det(I + W r) = det(I + sqrt(r) W sqrt(r))
        Eigen::SelfAdjointEigenSolver<Matrix> esr(r);
        const Matrix s = esr.eigenvectors() *
                         esr.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                         esr.eigenvectors().adjoint();
        Eigen::SelfAdjointEigenSolver<Matrix> esb(
            Matrix(Matrix::Identity(n, n) + s * W * s));
        double logdet = 0.0;
        for (int i = 0; i < n; ++i) logdet += std::log(std::max(esb.eigenvalues()[i], 1e-300));
        return logdet - (M * r).trace().real();
    };

    double best = 0.0; // A = 0 is feasible
    std::normal_distribution<double> gauss(0.0, 0.3);
    for (int attempt = 0; attempt < restarts; ++attempt) {
        Matrix a = Matrix::Zero(n, n);
        if (attempt > 0)
            for (int r = 0; r < n; ++r)
                for (int c = 0; c < n; ++c) a(r, c) = Complex(gauss(rng), gauss(rng));
        double value = objective(a);
        double step = 0.5;
        while (step > 1e-6) {
            bool improved = false;
            for (int r = 0; r < n; ++r)
                for (int c = 0; c < n; ++c)
                    for (int part = 0; part < 2; ++part)
                        for (double sign : {1.0, -1.0}) {
                            Matrix trial = a;
                            trial(r, c) += part == 0 ? Complex(sign * step, 0.0)
                                                     : Complex(0.0, sign * step);
                            const double v = objective(trial);
                            if (v > value + 1e-14) {
                                a = trial;
                                value = v;
                                improved = true;
                            }
                        }
            if (!improved) step *= 0.5;
        }
        best = std::max(best, value);
    }
    return best;
}

} // namespace

TEST_CASE("inner_waterfill: scalar closed form") {
    const Matrix W = Matrix::Constant(1, 1, Complex(1.0, 0.0));
    const Matrix M = Matrix::Constant(1, 1, Complex(0.5, 0.0));
    const Matrix R = inner_waterfill(W, M);
    CHECK(R(0, 0).real() == doctest::Approx(1.0).epsilon(1e-13)); // (1/mu - sigma^2)+
}

TEST_CASE("inner_waterfill: matches the waterfill example") {
    Matrix W = Matrix::Zero(2, 2);
    W(0, 0) = 1.0;
    W(1, 1) = 1.0 / 3.0;
    const Matrix R = inner_waterfill(W, 0.5 * Matrix::Identity(2, 2));
    Matrix expected = Matrix::Zero(2, 2);
    expected(0, 0) = 1.0;
    CHECK((R - expected).norm() <= 1e-12);
}

TEST_CASE("inner_waterfill: M = y I reproduces optimal_psd with mu = 1/y") {
    std::mt19937 rng(41);
    const ChannelSpec spec = random_channel(3, 2, 2, rng);
    const FrequencyGrid grid = uniform_grid(7);
    const auto samples = whiten_grid(spec, grid);
    const double mu = 1.7;
    const auto psd = optimal_psd(samples, mu);
    for (std::size_t k = 0; k < samples.size(); ++k) {
        const Matrix R = inner_waterfill(samples[k].W, (1.0 / mu) * Matrix::Identity(3, 3));
        CHECK((R - psd[k]).norm() <= 1e-9 * std::max(1.0, psd[k].norm()));
    }
}

TEST_CASE("inner_waterfill rejects indefinite M") {
    Matrix M = Matrix::Identity(2, 2);
    M(1, 1) = -0.1;
    CHECK_THROWS_AS(inner_waterfill(Matrix::Identity(2, 2), M), MNotPositiveError);
    CHECK_THROWS_AS(inner_waterfill(Matrix::Identity(2, 2), Matrix::Zero(2, 2)),
                    MNotPositiveError);
}

TEST_CASE("inner_waterfill beats a gradient-free search") {
    std::mt19937 rng(42);
    for (int trial = 0; trial < 2; ++trial) {
        Matrix a = random_complex(3, 3, rng);
        const Matrix W = (a * a.adjoint() + Matrix::Identity(3, 3)).eval();
        Matrix b = random_complex(3, 3, rng);
        const Matrix M = (0.25 * (b * b.adjoint()) + 0.5 * Matrix::Identity(3, 3)).eval();

        const Matrix R = inner_waterfill(W, M);
        Eigen::SelfAdjointEigenSolver<Matrix> esr(R);
        const Matrix s = esr.eigenvectors() *
                         esr.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                         esr.eigenvectors().adjoint();
        Eigen::SelfAdjointEigenSolver<Matrix> esb(Matrix(Matrix::Identity(3, 3) + s * W * s));
        double inner_value = -(M * R).trace().real();
        for (int i = 0; i < 3; ++i)
            inner_value += std::log(std::max(esb.eigenvalues()[i], 1e-300));

        const double brute = brute_force_inner(W, M, 3, rng);
        CHECK(brute <= inner_value + 1e-9);       // closed form is the true max
        CHECK(inner_value - brute <= 1e-4);       // search gets within tolerance
    }
}

TEST_CASE("feasibility_check basics") {
    const ChannelSpec spec = scalar_spec({1.0}, {1.0});
    const FrequencyGrid grid = uniform_grid(4);
    const auto samples = whiten_grid(spec, grid);

    ConstraintSet none;
    none.tpc = 1.0;
    CHECK(feasibility_check(none, samples, grid).feasible);

    ConstraintSet zero_floor = none;
    LinearPowerConstraint ehc;
    ehc.limit = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k)
        ehc.factors.push_back(Matrix::Identity(1, 1));
    zero_floor.ehc.push_back(ehc);
    CHECK(feasibility_check(zero_floor, samples, grid).feasible);

    ConstraintSet too_high = zero_floor;
    too_high.ehc[0].limit = 2.0; // max harvest = P * |H_m|^2 = 1
    const FeasibilityReport report = feasibility_check(too_high, samples, grid);
    CHECK_FALSE(report.feasible);
    CHECK(report.ehc_index == 0);
    CHECK(report.max_harvest == doctest::Approx(1.0));
}

TEST_CASE("solve_joint: TPC-only reproduces the closed form") {
    std::mt19937 rng(43);
    const std::vector<ChannelSpec> anchors = {
        scalar_spec({1.0}, {1.0}), scalar_spec({1.0, 0.5}, {1.0}),
        scalar_spec({1.0}, {1.0, 0.25}), random_channel(2, 2, 2, rng)};
    for (const ChannelSpec& spec : anchors) {
        const FrequencyGrid grid = uniform_grid(32);
        const auto samples = whiten_grid(spec, grid);
        const double P = 1.0;
        const TpcResult closed = solve_tpc(samples, grid, P);

        ConstraintSet cs;
        cs.tpc = P;
        const JointResult joint = solve_joint(cs, samples, grid, tight_opts());
        REQUIRE(joint.status == SolveStatus::optimal);
        CHECK(std::abs(joint.capacity_nats - closed.capacity_nats) <=
              1e-6 * std::max(1.0, closed.capacity_nats));
        CHECK(joint.duality_gap <= 1e-5 * (1.0 + std::abs(joint.capacity_nats)));
        for (std::size_t k = 0; k < grid.size(); ++k)
            CHECK((joint.psd[k] - closed.psd[k]).norm() <= 1e-4);
    }
}

TEST_CASE("solve_joint: symmetric PAC equals TPC on a flat channel") {
    const ChannelSpec spec = identity_spec(2);
    const FrequencyGrid grid = uniform_grid(8);
    const auto samples = whiten_grid(spec, grid);
    const double P = 2.0;

    ConstraintSet tpc_only;
    tpc_only.tpc = P;
    const JointResult via_tpc = solve_joint(tpc_only, samples, grid, tight_opts());

    ConstraintSet pac_only;
    pac_only.pac = std::vector<double>{P / 2.0, P / 2.0};
    const JointResult via_pac = solve_joint(pac_only, samples, grid, tight_opts());

    REQUIRE(via_tpc.status == SolveStatus::optimal);
    REQUIRE(via_pac.status == SolveStatus::optimal);
    CHECK(std::abs(via_tpc.capacity_nats - via_pac.capacity_nats) <= 1e-7);
    CHECK(via_pac.capacity_nats == doctest::Approx(std::log(2.0)).epsilon(1e-7));
}

TEST_CASE("solve_joint: TPC and PAC together, one antenna capped") {
    // flat H = I, noise I; pac caps antenna 1 at 0.2, TPC supplies the rest:
    // optimum r = diag(0.2, 0.8), C = (ln 1.2 + ln 1.8) / 2
    const ChannelSpec spec = identity_spec(2);
    const FrequencyGrid grid = uniform_grid(4);
    const auto samples = whiten_grid(spec, grid);
    ConstraintSet cs;
    cs.tpc = 1.0;
    cs.pac = std::vector<double>{0.2, 0.9};
    const JointResult r = solve_joint(cs, samples, grid, tight_opts());
    REQUIRE(r.status == SolveStatus::optimal);
    CHECK(r.capacity_nats ==
          doctest::Approx(0.5 * (std::log(1.2) + std::log(1.8))).epsilon(1e-7));
    for (const Matrix& R : r.psd) {
        CHECK(R(0, 0).real() == doctest::Approx(0.2).epsilon(1e-5));
        CHECK(R(1, 1).real() == doctest::Approx(0.8).epsilon(1e-5));
    }
    // antenna 2's own cap is slack, its multiplier vanishes
    REQUIRE(r.multipliers.pac.size() == 2);
    CHECK(r.multipliers.pac[1] <= 1e-8);
    CHECK(r.slacks.pac[1] == doctest::Approx(0.1).epsilon(1e-4));
}

TEST_CASE("solve_joint: loose IPC stays inactive") {
    const ChannelSpec spec = scalar_spec({1.0, 0.5}, {1.0});
    const FrequencyGrid grid = uniform_grid(16);
    const auto samples = whiten_grid(spec, grid);

    ConstraintSet tpc_only;
    tpc_only.tpc = 1.0;
    const JointResult base = solve_joint(tpc_only, samples, grid, tight_opts());

    ConstraintSet with_ipc = tpc_only;
    LinearPowerConstraint ipc;
    ipc.limit = 1e6;
    for (std::size_t k = 0; k < grid.size(); ++k) ipc.factors.push_back(Matrix::Identity(1, 1));
    with_ipc.ipc.push_back(ipc);
    const JointResult loose = solve_joint(with_ipc, samples, grid, tight_opts());

    REQUIRE(loose.status == SolveStatus::optimal);
    CHECK(std::abs(loose.capacity_nats - base.capacity_nats) < 1e-8);
    REQUIRE(loose.multipliers.ipc.size() == 1);
    CHECK(loose.multipliers.ipc[0] < 1e-8);
}

TEST_CASE("solve_joint: active EHC matches the grid-search oracle") {
    const ScalarCoupledInstance inst;
    ConstraintSet cs;
    cs.tpc = 1.0;
    cs.ehc.push_back(inst.coupled(1.2)); // above the TPC-only harvest, below the max
    const JointResult r = solve_joint(cs, inst.samples, inst.grid, tight_opts());
    REQUIRE(r.status == SolveStatus::optimal);

    GridSearchOptions gopts;
    gopts.points_per_dim = 41;
    gopts.refine_levels = 8;
    const double oracle = grid_search_joint(cs, inst.samples, inst.grid, gopts);
    CHECK(std::abs(r.capacity_nats - oracle) <= 1e-3);
    CHECK(r.capacity_nats == doctest::Approx(0.3869171768).epsilon(5e-4));

    // harvest floor is tight, and complementary slackness holds
    REQUIRE(r.slacks.ehc.size() == 1);
    CHECK(std::abs(r.slacks.ehc[0]) <= 1e-7);
    CHECK(r.multipliers.ehc[0] * std::abs(r.slacks.ehc[0]) <= 1e-6 * (1.0 + 1.2));
}

TEST_CASE("solve_joint: active IPC matches the grid-search oracle") {
    const ScalarCoupledInstance inst;
    ConstraintSet cs;
    cs.tpc = 1.0;
    cs.ipc.push_back(inst.coupled(0.7)); // below the unconstrained coupled power
    const JointResult r = solve_joint(cs, inst.samples, inst.grid, tight_opts());
    REQUIRE(r.status == SolveStatus::optimal);

    GridSearchOptions gopts;
    gopts.points_per_dim = 41;
    gopts.refine_levels = 8;
    const double oracle = grid_search_joint(cs, inst.samples, inst.grid, gopts);
    CHECK(std::abs(r.capacity_nats - oracle) <= 1e-3);
    CHECK(r.multipliers.ipc[0] > 0.0);
    CHECK(std::abs(r.slacks.ipc[0]) <= 1e-7);
}

TEST_CASE("solve_joint: asymmetric PAC on a 2x2 channel matches the oracle") {
    ChannelSpec spec;
    spec.n_tx = spec.n_rx = 2;
    Matrix h(2, 2);
    h << Complex(1.0, 0.0), Complex(0.3, 0.0), Complex(0.0, 0.0), Complex(0.8, 0.0);
    spec.h_taps.push_back({0, h});
    spec.noise_taps.push_back({0, Matrix::Identity(2, 2)});
    const FrequencyGrid grid = uniform_grid(1);
    const auto samples = whiten_grid(spec, grid);

    ConstraintSet cs;
    cs.pac = std::vector<double>{0.7, 0.4};
    const JointResult r = solve_joint(cs, samples, grid, tight_opts());
    REQUIRE(r.status == SolveStatus::optimal);

    GridSearchOptions gopts;
    gopts.points_per_dim = 21;
    gopts.refine_levels = 9;
    const double oracle = grid_search_joint(cs, samples, grid, gopts);
    CHECK(std::abs(r.capacity_nats - oracle) <= 1e-3);
}

TEST_CASE("solve_joint: infeasible harvest floor reported as a status") {
    const ChannelSpec spec = scalar_spec({1.0}, {1.0});
    const FrequencyGrid grid = uniform_grid(4);
    const auto samples = whiten_grid(spec, grid);
    ConstraintSet cs;
    cs.tpc = 1.0;
    LinearPowerConstraint ehc;
    ehc.limit = 2.0;
    for (std::size_t k = 0; k < grid.size(); ++k) ehc.factors.push_back(Matrix::Identity(1, 1));
    cs.ehc.push_back(ehc);
    const JointResult r = solve_joint(cs, samples, grid);
    CHECK(r.status == SolveStatus::infeasible);
    CHECK(!r.infeasible_witness.empty());
}

TEST_CASE("solve_joint: monotone in every budget direction") {
    const ScalarCoupledInstance inst;
    double prev = -1.0;
    for (double P : {0.5, 1.0, 2.0}) { // TPC ladder
        ConstraintSet cs;
        cs.tpc = P;
        const JointResult r = solve_joint(cs, inst.samples, inst.grid, tight_opts());
        REQUIRE(r.status == SolveStatus::optimal);
        CHECK(r.capacity_nats >= prev - 1e-9);
        prev = r.capacity_nats;
    }
    prev = -1.0;
    for (double limit : {0.3, 0.7, 10.0}) { // IPC ladder
        ConstraintSet cs;
        cs.tpc = 1.0;
        cs.ipc.push_back(inst.coupled(limit));
        const JointResult r = solve_joint(cs, inst.samples, inst.grid, tight_opts());
        REQUIRE(r.status == SolveStatus::optimal);
        CHECK(r.capacity_nats >= prev - 1e-9);
        prev = r.capacity_nats;
    }
    prev = -1.0;
    for (double floor : {1.5, 1.2, 0.5}) { // relaxing EHC floor
        ConstraintSet cs;
        cs.tpc = 1.0;
        cs.ehc.push_back(inst.coupled(floor));
        const JointResult r = solve_joint(cs, inst.samples, inst.grid, tight_opts());
        REQUIRE(r.status == SolveStatus::optimal);
        CHECK(r.capacity_nats >= prev - 1e-9);
        prev = r.capacity_nats;
    }
}

TEST_CASE("solve_joint: weak duality and feasible slacks across instances") {
    const ScalarCoupledInstance inst;
    std::vector<ConstraintSet> sets;
    {
        ConstraintSet cs;
        cs.tpc = 1.0;
        sets.push_back(cs);
        cs.ipc.push_back(inst.coupled(0.7));
        sets.push_back(cs);
        cs.ipc.clear();
        cs.ehc.push_back(inst.coupled(1.2));
        sets.push_back(cs);
    }
    for (const auto& cs : sets) {
        const JointResult r = solve_joint(cs, inst.samples, inst.grid, tight_opts());
        REQUIRE(r.status == SolveStatus::optimal);
        CHECK(r.duality_gap >= 0.0);
        if (r.slacks.tpc) CHECK(*r.slacks.tpc >= -1e-9 * 2.0);
        for (double s : r.slacks.ipc) CHECK(s >= -1e-9 * (1.0 + 0.7));
        for (double s : r.slacks.ehc) CHECK(s >= -1e-9 * (1.0 + 1.2));
        // complementary slackness
        if (r.multipliers.tpc && r.slacks.tpc)
            CHECK(*r.multipliers.tpc * std::abs(*r.slacks.tpc) <= 1e-6 * 2.0);
    }
}

TEST_CASE("solve_joint rejects an empty budget set") {
    const ChannelSpec spec = scalar_spec({1.0}, {1.0});
    const FrequencyGrid grid = uniform_grid(4);
    const auto samples = whiten_grid(spec, grid);
    ConstraintSet cs; // neither tpc nor pac
    CHECK_THROWS_AS(solve_joint(cs, samples, grid), SchemaError);
}

TEST_CASE("MISO-PAC: rank-one beamforming with aligned phases") {
    ChannelSpec spec;
    spec.n_tx = 2;
    spec.n_rx = 1;
    Matrix h(1, 2);
    h << Complex(1.0, 0.0), Complex(1.0, 0.0);
    spec.h_taps.push_back({0, h});
    spec.noise_taps.push_back({0, Matrix::Identity(1, 1)});
    const FrequencyGrid grid = uniform_grid(8);
    const auto samples = whiten_grid(spec, grid);

    ConstraintSet cs;
    cs.pac = std::vector<double>{1.0, 1.0};
    const JointResult r = solve_joint(cs, samples, grid, tight_opts());
    REQUIRE(r.status == SolveStatus::optimal);
    CHECK(r.capacity_nats == doctest::Approx(0.5 * std::log(5.0)).epsilon(1e-7));

    std::vector<Matrix> h_field;
    for (double theta : grid.nodes) h_field.push_back(transfer_function(spec, theta));
    const RankOneExtraction extraction = extract_rank_one(r, 1e-6, &h_field);
    CHECK(extraction.max_residual <= 1e-6);
    for (const auto& w : extraction.beams) {
        CHECK(std::abs(w[0]) == doctest::Approx(1.0).epsilon(1e-5));
        CHECK(std::abs(w[1]) == doctest::Approx(1.0).epsilon(1e-5));
    }
}

TEST_CASE("MISO-PAC: zero-gain antenna gets zero power") {
    ChannelSpec spec;
    spec.n_tx = 2;
    spec.n_rx = 1;
    Matrix h(1, 2);
    h << Complex(1.0, 0.0), Complex(0.0, 0.0);
    spec.h_taps.push_back({0, h});
    spec.noise_taps.push_back({0, Matrix::Identity(1, 1)});
    const FrequencyGrid grid = uniform_grid(4);
    const auto samples = whiten_grid(spec, grid);

    ConstraintSet cs;
    cs.pac = std::vector<double>{1.0, 1.0};
    const JointResult r = solve_joint(cs, samples, grid, tight_opts());
    REQUIRE(r.status == SolveStatus::optimal);
    CHECK(r.capacity_nats == doctest::Approx(0.5 * std::log(2.0)).epsilon(1e-7));
    for (const Matrix& R : r.psd) {
        CHECK(R(0, 0).real() == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(std::abs(R(1, 1).real()) <= 1e-9);
    }
    const RankOneExtraction extraction = extract_rank_one(r, 1e-6);
    CHECK(extraction.max_residual <= 1e-6);
}

TEST_CASE("SISO is trivially rank one") {
    const ChannelSpec spec = scalar_spec({1.0, 0.5}, {1.0});
    const FrequencyGrid grid = uniform_grid(8);
    const auto samples = whiten_grid(spec, grid);
    ConstraintSet cs;
    cs.tpc = 1.0;
    const JointResult r = solve_joint(cs, samples, grid, tight_opts());
    const RankOneExtraction extraction = extract_rank_one(r, 1e-6);
    CHECK(extraction.max_residual == 0.0);
}
