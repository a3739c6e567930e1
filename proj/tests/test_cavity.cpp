#include <doctest.h>

#include <cmath>
#include <utility>
#include <vector>

#include "sqclock/cavity.hpp"
#include "sqclock/rng.hpp"
#include "test_helpers.hpp"

using namespace sqclock;

namespace {

// Summed shift of an equal superposition of n_total atoms.
AngularFrequency sum_shift(double n_total, const CavityParams& p) {
    return dressed_shift(0.5 * n_total, Spin::down, p) +
           dressed_shift(0.5 * n_total, Spin::up, p);
}

}  // namespace

TEST_CASE("dressed shift: empty cavity, monotonicity, domain") {
    const auto p = testing::reference_cavity();
    CHECK(dressed_shift(0.0, Spin::down, p).rad() == 0.0);
    CHECK_THROWS_AS(dressed_shift(-1.0, Spin::down, p), std::domain_error);

    RandomStream rng = RandomStream::derive(11, 0);
    for (int i = 0; i < 200; ++i) {
        const double n1 = 1e5 * rng.uniform();
        const double n2 = n1 + 1e4 * rng.uniform_pos();
        CHECK(dressed_shift(n2, Spin::down, p).rad() >
              dressed_shift(n1, Spin::down, p).rad());
    }
}

TEST_CASE("dressed shift approaches the dispersive limit for weak coupling") {
    const auto p = testing::reference_cavity();
    const double g = p.g_eff.rad();
    const double dc = p.delta_c.rad();
    // Omega/delta_c < 0.2 keeps the shift within 1% of g^2 n / delta_c.
    const double n_max = 0.04 * dc * dc / (4.0 * g * g);
    for (double frac : {0.01, 0.1, 0.5, 1.0}) {
        const double n = frac * n_max;
        const double exact = dressed_shift(n, Spin::down, p).rad();
        const double dispersive = g * g * n / dc;
        CHECK(exact == doctest::Approx(dispersive).epsilon(0.01));
    }
}

TEST_CASE("atom number inversion is exact for equal superpositions") {
    const auto p = testing::reference_cavity();
    CHECK(atom_number_from_sum_shift(AngularFrequency{0.0}, p) == 0.0);
    CHECK_THROWS_AS(atom_number_from_sum_shift(AngularFrequency{-1.0}, p),
                    std::domain_error);

    RandomStream rng = RandomStream::derive(12, 0);
    for (int i = 0; i < 300; ++i) {
        const double n = std::pow(10.0, 2.0 + 3.0 * rng.uniform());
        const double recovered = atom_number_from_sum_shift(sum_shift(n, p), p);
        CHECK(recovered == doctest::Approx(n).epsilon(1e-9));
    }
}

TEST_CASE("215 kHz summed shift corresponds to 8.8e3 atoms") {
    const auto p = testing::reference_cavity();
    const auto shift = AngularFrequency::from_hz(215e3);
    const double n = atom_number_from_sum_shift(shift, p);
    // Direct evaluation: 215e3 * (1e6 / 5.2e3^2) * (1 + 0.215/2) = 8805.9.
    CHECK(n == doctest::Approx(8805.9).epsilon(1e-4));
    CHECK(sum_shift(n, p).hz() == doctest::Approx(215e3).epsilon(1e-9));
}

TEST_CASE("single-state population inversion") {
    const auto p = testing::reference_cavity();
    RandomStream rng = RandomStream::derive(13, 0);
    for (int i = 0; i < 100; ++i) {
        const double n = std::pow(10.0, 2.0 + 3.0 * rng.uniform());
        const auto shift = dressed_shift(n, Spin::down, p);
        CHECK(atom_number_from_state_shift(shift, p) == doctest::Approx(n).epsilon(1e-9));
    }
    CHECK_THROWS_AS(atom_number_from_state_shift(AngularFrequency{-1.0}, p),
                    std::domain_error);
}

TEST_CASE("QPN noise formula agrees with the derivative form exactly") {
    const auto p = testing::reference_cavity();
    const double g = p.g_eff.rad();
    const double dc = p.delta_c.rad();
    CHECK(qpn_shift_noise(AngularFrequency{0.0}, p).rad() == 0.0);
    RandomStream rng = RandomStream::derive(14, 0);
    for (int i = 0; i < 200; ++i) {
        const double n = std::pow(10.0, 2.0 + 3.0 * rng.uniform());
        const double s = sum_shift(n, p).rad();
        const double fitted = qpn_shift_noise(AngularFrequency{s}, p).rad();
        // Derivative form: g^2 sqrt(N) / sqrt(delta_c^2 + Omega_down^2).
        const double omega_down_sq = 4.0 * g * g * (0.5 * n);
        const double derivative = g * g * std::sqrt(n) / std::sqrt(dc * dc + omega_down_sq);
        CHECK(fitted == doctest::Approx(derivative).epsilon(1e-9));
    }
}

TEST_CASE("QPN noise approaches g^2 sqrt(N)/delta_c for small atom number") {
    const auto p = testing::reference_cavity();
    const double g = p.g_eff.rad();
    const double dc = p.delta_c.rad();
    const double n = 100.0;
    const double s = sum_shift(n, p).rad();
    const double noise = qpn_shift_noise(AngularFrequency{s}, p).rad();
    CHECK(noise == doctest::Approx(g * g * std::sqrt(n) / dc).epsilon(0.01));
}

TEST_CASE("binomial Monte Carlo reproduces the QPN noise model") {
    const auto p = testing::reference_cavity();
    const double n_total = 1e4;
    const std::size_t trials = 100000;
    RandomStream rng = RandomStream::derive(15, 0);
    std::vector<double> diffs(trials);
    for (auto& d : diffs) {
        const double n_down = rng.binomial_half(n_total);
        const double n_up = n_total - n_down;
        d = dressed_shift(n_up, Spin::up, p).rad() -
            dressed_shift(n_down, Spin::down, p).rad();
    }
    const double empirical = std::sqrt(testing::variance(diffs));
    const double model = qpn_shift_noise(sum_shift(n_total, p), p).rad();
    CHECK(empirical == doctest::Approx(model).epsilon(0.02));
}

namespace {

std::vector<QpnFitPoint> synthesize_fit_data(double g_hz, double offset_hz, double slope,
                                             const CavityParams& base, double scatter,
                                             std::uint64_t seed) {
    CavityParams gen = base;
    gen.g_eff = AngularFrequency::from_hz(g_hz);
    RandomStream rng = RandomStream::derive(seed, 0);
    std::vector<QpnFitPoint> data;
    for (int i = 1; i <= 12; ++i) {
        const auto s = AngularFrequency::from_hz(520e3 * i / 12.0);
        const double qpn = qpn_shift_noise(s, gen).rad();
        const double off = offset_hz * two_pi;
        const double lin = slope * s.rad();
        double y = std::sqrt(qpn * qpn + off * off + lin * lin);
        if (scatter > 0.0) {
            y *= 1.0 + scatter * rng.gaussian();
        }
        data.push_back({s, AngularFrequency{y}, 1.0});
    }
    return data;
}

}  // namespace

TEST_CASE("coupling fit recovers synthetic parameters without noise") {
    const auto p = testing::reference_cavity();
    const auto data = synthesize_fit_data(5.2e3, 760.0, 0.0, p, 0.0, 1);
    const QpnFitResult fit = fit_coupling(data, p, false);
    CHECK(fit.g_fit.hz() == doctest::Approx(5.2e3).epsilon(0.02));
    CHECK(fit.noise_offset.hz() == doctest::Approx(760.0).epsilon(0.02));
    CHECK(fit.residual_rms.hz() < 1.0);
}

TEST_CASE("coupling fit recovers parameters for several couplings") {
    const auto p = testing::reference_cavity();
    for (double g_khz : {2.0, 5.0, 10.0}) {
        const auto data = synthesize_fit_data(g_khz * 1e3, 760.0, 0.0, p, 0.0, 2);
        const QpnFitResult fit = fit_coupling(data, p, false);
        CHECK(fit.g_fit.hz() == doctest::Approx(g_khz * 1e3).epsilon(0.02));
    }
}

TEST_CASE("coupling fit on offset-only data returns g consistent with zero") {
    const auto p = testing::reference_cavity();
    std::vector<QpnFitPoint> data;
    for (int i = 1; i <= 8; ++i) {
        data.push_back({AngularFrequency::from_hz(60e3 * i),
                        AngularFrequency::from_hz(500.0), 1.0});
    }
    const QpnFitResult fit = fit_coupling(data, p, false);
    CHECK(fit.noise_offset.hz() == doctest::Approx(500.0).epsilon(1e-6));
    CHECK(fit.g_fit.hz() < 2.0 * fit.g_err_rad / two_pi + 1.0);
}

TEST_CASE("coupling fit recovers an injected rotation-noise slope") {
    const auto p = testing::reference_cavity();
    const double injected = 0.01;
    const auto data = synthesize_fit_data(5.2e3, 760.0, injected, p, 0.0, 3);
    const QpnFitResult fit = fit_coupling(data, p, true);
    CHECK(std::abs(fit.rotation_noise_slope - injected) < 2e-3);
    CHECK(std::abs(fit.rotation_noise_slope - injected) < 2.0 * fit.slope_err + 1e-4);
}

TEST_CASE("coupling fit with measurement scatter recovers within confidence") {
    const auto p = testing::reference_cavity();
    const auto data = synthesize_fit_data(5.2e3, 760.0, 0.0, p, 0.05, 4);
    const QpnFitResult fit = fit_coupling(data, p, false);
    CHECK(std::abs(fit.g_fit.hz() - 5.2e3) < 2.0 * fit.g_err_rad / two_pi);
    CHECK(std::abs(fit.noise_offset.hz() - 760.0) < 2.0 * fit.offset_err_rad / two_pi);
}

TEST_CASE("coupling fit rejects degenerate inputs") {
    const auto p = testing::reference_cavity();
    std::vector<QpnFitPoint> two = {{AngularFrequency::from_hz(1e5),
                                     AngularFrequency::from_hz(1e3), 1.0},
                                    {AngularFrequency::from_hz(2e5),
                                     AngularFrequency::from_hz(2e3), 1.0}};
    CHECK_THROWS_AS(fit_coupling(two, p, false), std::invalid_argument);

    std::vector<QpnFitPoint> same;
    for (int i = 0; i < 5; ++i) {
        same.push_back({AngularFrequency::from_hz(1e5),
                        AngularFrequency::from_hz(1e3 + 10.0 * i), 1.0});
    }
    CHECK_THROWS_AS(fit_coupling(same, p, false), FitError);

    std::vector<QpnFitPoint> negative = {{AngularFrequency::from_hz(1e5),
                                          AngularFrequency::from_hz(-1e3), 1.0},
                                         {AngularFrequency::from_hz(2e5),
                                          AngularFrequency::from_hz(1e3), 1.0},
                                         {AngularFrequency::from_hz(3e5),
                                          AngularFrequency::from_hz(1e3), 1.0}};
    CHECK_THROWS_AS(fit_coupling(negative, p, false), std::invalid_argument);
}

TEST_CASE("shift measurement sum is exact") {
    const ShiftMeasurement m{AngularFrequency::from_hz(110e3),
                             AngularFrequency::from_hz(105e3)};
    CHECK(m.omega_sum().rad() == m.omega_down.rad() + m.omega_up.rad());
}
