#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "memcap/errors.hpp"
#include "support.hpp"

using namespace memcap;
using namespace memcap::test;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("transfer function of a delta impulse is flat") {
    const ChannelSpec spec = identity_spec(3);
    for (double theta : {-kPi, -1.0, 0.0, 2.5, kPi}) {
        const Matrix h = transfer_function(spec, theta);
        CHECK((h - Matrix::Identity(3, 3)).norm() <= 1e-15);
    }
}

TEST_CASE("transfer function two-term sum") {
    const ChannelSpec spec = scalar_spec({1.0, 0.5}, {1.0});
    CHECK(transfer_function(spec, 0.0)(0, 0).real() == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(transfer_function(spec, kPi)(0, 0).real() == doctest::Approx(0.5).epsilon(1e-12));
    const Complex at_half = transfer_function(spec, kPi / 2.0)(0, 0);
    CHECK(at_half.real() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(at_half.imag() == doctest::Approx(-0.5).epsilon(1e-12));
}

TEST_CASE("noise psd: white, and scalar correlated") {
    const ChannelSpec white = identity_spec(2, 0.7);
    CHECK((noise_psd(white, 1.3) - 0.7 * Matrix::Identity(2, 2)).norm() <= 1e-15);

    const ChannelSpec corr = scalar_spec({1.0}, {1.0, 0.25});
    CHECK(noise_psd(corr, 0.0)(0, 0).real() == doctest::Approx(1.5).epsilon(1e-14));
    CHECK(noise_psd(corr, kPi)(0, 0).real() == doctest::Approx(0.5).epsilon(1e-12));

    const ChannelSpec border = scalar_spec({1.0}, {1.0, 0.5});
    CHECK(noise_psd(border, 0.0)(0, 0).real() == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(std::abs(noise_psd(border, kPi)(0, 0).real()) <= 1e-12);
}

TEST_CASE("noise psd is exactly Hermitian and conjugate-symmetric for real taps") {
    std::mt19937 rng(11);
    const ChannelSpec spec = random_channel(3, 3, 3, rng);
    for (double theta : uniform_grid(17).nodes) {
        const Matrix r = noise_psd(spec, theta);
        CHECK((r - r.adjoint()).norm() == 0.0);
    }
    // real-valued taps: H(-theta) = conj(H(theta)), R(-theta) = conj(R(theta))^T
    const ChannelSpec real_spec = scalar_spec({1.0, 0.5, 0.25}, {1.0, 0.2});
    for (double theta : {0.3, 1.1, 2.9}) {
        CHECK((transfer_function(real_spec, -theta) -
               transfer_function(real_spec, theta).conjugate())
                  .norm() <= 1e-14);
        CHECK((noise_psd(real_spec, -theta) -
               noise_psd(real_spec, theta).conjugate().transpose())
                  .norm() <= 1e-14);
    }
}

TEST_CASE("parseval: mean of trace R(theta) equals trace R(0)") {
    std::mt19937 rng(12);
    const ChannelSpec spec = random_channel(2, 2, 3, rng);
    const FrequencyGrid grid = uniform_grid(64);
    std::vector<double> traces(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
        traces[i] = noise_psd(spec, grid.nodes[i]).trace().real();
    const double mean = integrate(grid, traces) / (2.0 * kPi);
    double r0_trace = 0.0;
    for (const auto& tap : spec.noise_taps)
        if (tap.delay == 0) r0_trace = tap.coeff.trace().real();
    CHECK(mean == doctest::Approx(r0_trace).epsilon(1e-12));
}

TEST_CASE("admissibility: clean channel") {
    const AdmissibilityReport report =
        check_admissibility(identity_spec(2), endpoint_grid(32), 1e-10);
    CHECK(report.causal);
    CHECK(report.summable);
    CHECK(report.singular_frequencies.empty());
    CHECK(report.min_noise_eig == doctest::Approx(1.0));
    CHECK(report.min_channel_sv == doctest::Approx(1.0));
}

TEST_CASE("admissibility: channel zero at +-pi is a warning") {
    const ChannelSpec spec = scalar_spec({1.0, 1.0}, {1.0});
    const AdmissibilityReport report = check_admissibility(spec, endpoint_grid(16), 1e-10);
    REQUIRE(report.singular_frequencies.size() == 2);
    CHECK(report.singular_frequencies.front() == doctest::Approx(-kPi));
    CHECK(report.singular_frequencies.back() == doctest::Approx(kPi));
}

TEST_CASE("admissibility: singular noise is fatal with frequency diagnostics") {
    const ChannelSpec spec = scalar_spec({1.0}, {1.0, 0.5});
    try {
        check_admissibility(spec, endpoint_grid(16), 1e-10);
        FAIL("expected NoiseSingularError");
    } catch (const NoiseSingularError& e) {
        REQUIRE(e.singular_frequencies.size() == 2);
        CHECK(e.singular_frequencies.front() == doctest::Approx(-kPi));
        CHECK(e.singular_frequencies.back() == doctest::Approx(kPi));
    }
}

TEST_CASE("admissibility: indefinite noise taps rejected") {
    // lag-0 too small against the lag-1 coupling: PSD dips negative
    ChannelSpec spec = scalar_spec({1.0}, {1.0, 0.8});
    CHECK_THROWS_AS(check_admissibility(spec, endpoint_grid(16), 1e-10),
                    NoiseIndefiniteError);
}

TEST_CASE("witness b satisfies the decay bound strictly") {
    const ChannelSpec spec = scalar_spec({1.0, 0.5, 0.0, 0.125}, {1.0});
    const AdmissibilityReport report = check_admissibility(spec, endpoint_grid(8), 1e-10);
    for (const auto& tap : spec.h_taps)
        if (tap.delay > 0) CHECK(tap.coeff.norm() < report.witness_b / tap.delay);
}

TEST_CASE("spec validation errors") {
    ChannelSpec bad = scalar_spec({1.0}, {1.0});
    bad.h_taps.push_back({0, Matrix::Identity(1, 1)});
    CHECK_THROWS_AS(bad.validate(), SchemaError); // duplicate delay

    ChannelSpec negative = scalar_spec({1.0}, {1.0});
    negative.h_taps[0].delay = -1;
    CHECK_THROWS_AS(negative.validate(), SchemaError);

    ChannelSpec non_hermitian;
    non_hermitian.n_tx = non_hermitian.n_rx = 2;
    non_hermitian.h_taps.push_back({0, Matrix::Identity(2, 2)});
    Matrix r0(2, 2);
    r0 << Complex(1, 0), Complex(0.5, 0.1), Complex(0.1, 0.3), Complex(1, 0);
    non_hermitian.noise_taps.push_back({0, r0});
    CHECK_THROWS_AS(non_hermitian.validate(), SchemaError);
}
