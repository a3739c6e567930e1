#include <doctest.h>

#include <cmath>

#include "sqclock/geometry.hpp"
#include "sqclock/rng.hpp"
#include "test_helpers.hpp"

using namespace sqclock;

namespace {

const double paper_w0 = 71e-6;
const double paper_sigma_z = 130e-6;

ModeGeometry reference_mode() {
    return ModeGeometry{paper_w0, AngularFrequency::from_hz(8.6e3)};
}

double reference_sigma_y() {
    return sigma_from_radial_temperature(290e-9, AngularFrequency::from_hz(34.0),
                                         constants::mass_sr87);
}

// Independent closed form for centered Gaussian clouds:
// g_eff^2 = (g0^2/2) prod_a sqrt((1 + 4 s_a^2/w0^2) / (1 + 8 s_a^2/w0^2)).
double oracle_g_eff(double g0, double w0, double sy, double sz) {
    auto axis = [&](double s) {
        return std::sqrt((1.0 + 4.0 * s * s / (w0 * w0)) / (1.0 + 8.0 * s * s / (w0 * w0)));
    };
    return g0 / std::sqrt(2.0) * std::sqrt(axis(sy) * axis(sz));
}

double oracle_n_fraction(double w0, double sy, double sz) {
    auto axis = [&](double s) {
        return std::sqrt(1.0 + 8.0 * s * s / (w0 * w0)) / (1.0 + 4.0 * s * s / (w0 * w0));
    };
    return axis(sy) * axis(sz);
}

}  // namespace

TEST_CASE("peak coupling reproduces the reference value and scalings") {
    const auto gamma = AngularFrequency::from_hz(7.48e3);
    const auto g0 = peak_coupling(gamma, 689e-9, paper_w0, 6.9720e-2);
    CHECK(g0.hz() == doctest::Approx(8.6e3).epsilon(0.02));

    const auto g0_wide = peak_coupling(gamma, 689e-9, 2.0 * paper_w0, 6.9720e-2);
    CHECK(g0_wide.hz() == doctest::Approx(0.5 * g0.hz()).epsilon(1e-12));

    const auto g0_fast = peak_coupling(AngularFrequency{4.0 * gamma.rad()}, 689e-9,
                                       paper_w0, 6.9720e-2);
    CHECK(g0_fast.hz() == doctest::Approx(2.0 * g0.hz()).epsilon(1e-12));

    CHECK_THROWS_AS(peak_coupling(gamma, 0.0, paper_w0, 1.0), std::invalid_argument);
}

TEST_CASE("thermal radial width from equipartition") {
    CHECK(reference_sigma_y() == doctest::Approx(24.66e-6).epsilon(1e-3));
}

TEST_CASE("effective coupling of a point cloud") {
    const auto mode = reference_mode();
    const auto eff = effective_coupling(mode, CloudDistribution{0.0, 0.0, 0.0});
    CHECK(eff.g_eff.hz() == doctest::Approx(8.6e3 / std::sqrt(2.0)).epsilon(1e-12));
    CHECK(eff.n_eff_fraction == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("effective coupling of the reference cloud") {
    const auto mode = reference_mode();
    const CloudDistribution cloud{reference_sigma_y(), paper_sigma_z, 0.0};
    for (auto method : {OverlapMethod::closed_form, OverlapMethod::quadrature}) {
        const auto eff = effective_coupling(mode, cloud, method);
        CHECK(eff.g_eff.hz() == doctest::Approx(4.8e3).epsilon(0.021));
        CHECK(eff.n_eff_fraction == doctest::Approx(0.346).epsilon(0.01));
    }
}

TEST_CASE("quadrature agrees with the closed-form oracle") {
    const auto mode = reference_mode();
    RandomStream rng = RandomStream::derive(21, 0);
    for (int i = 0; i < 25; ++i) {
        const double sy = 100e-6 * rng.uniform();
        const double sz = 300e-6 * rng.uniform();
        const CloudDistribution cloud{sy, sz, 0.0};
        const auto quad = effective_coupling(mode, cloud, OverlapMethod::quadrature);
        const double expect_g = oracle_g_eff(mode.g0.rad(), mode.w0, sy, sz);
        const double expect_f = oracle_n_fraction(mode.w0, sy, sz);
        CHECK(quad.g_eff.rad() == doctest::Approx(expect_g).epsilon(1e-6));
        CHECK(quad.n_eff_fraction == doctest::Approx(expect_f).epsilon(1e-6));
    }
}

TEST_CASE("off-center clouds: quadrature matches the shifted-Gaussian formula") {
    const auto mode = reference_mode();
    // E[e^{-a(z-c)^2}] for z ~ N(mu, s^2) = e^{-a(mu-c)^2/(1+2as^2)}/sqrt(1+2as^2),
    // with the mode at c = 0; checked through the full moment pipeline.
    RandomStream rng = RandomStream::derive(22, 0);
    for (int i = 0; i < 10; ++i) {
        const double sz = 50e-6 + 200e-6 * rng.uniform();
        const double zc = 150e-6 * (rng.uniform() - 0.5);
        const CloudDistribution cloud{reference_sigma_y(), sz, zc};
        const auto quad = effective_coupling(mode, cloud, OverlapMethod::quadrature);
        const auto closed = effective_coupling(mode, cloud, OverlapMethod::closed_form);
        CHECK(quad.g_eff.rad() == doctest::Approx(closed.g_eff.rad()).epsilon(1e-6));
        CHECK(quad.n_eff_fraction == doctest::Approx(closed.n_eff_fraction).epsilon(1e-6));
    }
}

TEST_CASE("effective coupling bounds and monotonicity") {
    const auto mode = reference_mode();
    const double cap = mode.g0.rad() / std::sqrt(2.0);
    RandomStream rng = RandomStream::derive(23, 0);
    double prev_fraction = 1.1;
    for (double scale : {0.0, 0.3, 1.0, 2.0, 5.0}) {
        const CloudDistribution cloud{scale * 30e-6, scale * 100e-6, 0.0};
        const auto eff = effective_coupling(mode, cloud);
        CHECK(eff.g_eff.rad() <= cap * (1.0 + 1e-12));
        CHECK(eff.n_eff_fraction > 0.0);
        CHECK(eff.n_eff_fraction <= 1.0 + 1e-12);
        CHECK(eff.n_eff_fraction < prev_fraction);
        prev_fraction = eff.n_eff_fraction;
    }
    for (int i = 0; i < 50; ++i) {
        const CloudDistribution cloud{150e-6 * rng.uniform(), 400e-6 * rng.uniform(), 0.0};
        CHECK(effective_coupling(mode, cloud).g_eff.rad() <= cap * (1.0 + 1e-12));
    }
}

TEST_CASE("sampled couplings: point cloud and determinism") {
    const auto mode = reference_mode();
    const auto point = sample_atom_couplings(mode, CloudDistribution{0.0, 0.0, 0.0}, 100, 5);
    const double expected = 0.5 * mode.g0.rad() * mode.g0.rad();
    for (double w : point) {
        CHECK(w == doctest::Approx(expected).epsilon(1e-12));
    }

    const CloudDistribution cloud{reference_sigma_y(), paper_sigma_z, 0.0};
    const auto a = sample_atom_couplings(mode, cloud, 1000, 77);
    const auto b = sample_atom_couplings(mode, cloud, 1000, 77);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i] == b[i]);  // bit-identical
    }
}

TEST_CASE("sampled couplings converge to the quadrature moments") {
    const auto mode = reference_mode();
    const CloudDistribution cloud{reference_sigma_y(), paper_sigma_z, 0.0};
    const auto weights = sample_atom_couplings(mode, cloud, 1000000, 99);
    double m2 = 0.0;
    double m4 = 0.0;
    for (double w : weights) {
        m2 += w;
        m4 += w * w;
    }
    m2 /= static_cast<double>(weights.size());
    m4 /= static_cast<double>(weights.size());
    const double g_eff_mc = std::sqrt(m4 / m2);
    const auto eff = effective_coupling(mode, cloud, OverlapMethod::quadrature);
    CHECK(g_eff_mc == doctest::Approx(eff.g_eff.rad()).epsilon(0.005));
}

TEST_CASE("correlation: identical measurement at zero separation") {
    const auto mode = reference_mode();
    const CloudDistribution cloud{reference_sigma_y(), paper_sigma_z, 0.0};
    const auto r = ensemble_correlation_vs_separation(mode, cloud, 0.0, 0.0, 500, 2000, 31);
    CHECK(r.pearson == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(r.qpn_change_db == doctest::Approx(db_floor).epsilon(1e-9));
}

TEST_CASE("correlation vanishes for distant ensembles") {
    const auto mode = reference_mode();
    const CloudDistribution cloud{reference_sigma_y(), paper_sigma_z, 0.0};
    const auto r =
        ensemble_correlation_vs_separation(mode, cloud, 2.0e-3, 0.0, 500, 4000, 32);
    CHECK(std::abs(r.pearson) < 3.0 * r.pearson_stat_err + 0.01);
    CHECK(std::abs(r.pearson_analytic) < 1e-12);
}

TEST_CASE("QPN change at the operating separation is small") {
    const auto mode = reference_mode();
    const CloudDistribution cloud{reference_sigma_y(), paper_sigma_z, 0.0};
    const auto r = analytic_correlation_vs_separation(mode, cloud, 150e-6, 0.0);
    CHECK(std::abs(r.qpn_change_db_analytic) < 0.1);
    // Direct evaluation of the overlap formula gives -0.059 dB.
    CHECK(r.qpn_change_db_analytic == doctest::Approx(-0.059).epsilon(0.03));
}

TEST_CASE("Monte Carlo and analytic overlap curves agree across 0..4 w0") {
    const auto mode = reference_mode();
    const CloudDistribution cloud{reference_sigma_y(), paper_sigma_z, 0.0};
    for (double k : {0.5, 1.0, 2.0, 3.0, 4.0}) {
        const auto r = ensemble_correlation_vs_separation(mode, cloud, k * paper_w0, 0.0,
                                                          800, 20000, 33);
        CHECK(std::abs(r.pearson - r.pearson_analytic) < 3.0 * r.pearson_stat_err + 1e-3);
        CHECK(std::abs(r.qpn_change_ratio - r.qpn_change_ratio_analytic) <
              3.0 * r.ratio_stat_err);
    }
}

TEST_CASE("correlation is symmetric under global spin flip") {
    const auto mode = reference_mode();
    const CloudDistribution cloud{reference_sigma_y(), paper_sigma_z, 0.0};
    const auto a =
        ensemble_correlation_vs_separation(mode, cloud, paper_w0, 0.0, 300, 2000, 34, 1, false);
    const auto b =
        ensemble_correlation_vs_separation(mode, cloud, paper_w0, 0.0, 300, 2000, 34, 1, true);
    CHECK(a.pearson == doctest::Approx(b.pearson).epsilon(1e-12));
    CHECK(a.qpn_change_ratio == doctest::Approx(b.qpn_change_ratio).epsilon(1e-12));
}

TEST_CASE("correlation trial count is validated") {
    const auto mode = reference_mode();
    const CloudDistribution cloud{reference_sigma_y(), paper_sigma_z, 0.0};
    CHECK_THROWS_AS(ensemble_correlation_vs_separation(mode, cloud, 0.0, 0.0, 100, 1, 35),
                    std::invalid_argument);
}

TEST_CASE("correlation results are thread-count independent") {
    const auto mode = reference_mode();
    const CloudDistribution cloud{reference_sigma_y(), paper_sigma_z, 0.0};
    const auto serial =
        ensemble_correlation_vs_separation(mode, cloud, paper_w0, 0.1, 400, 3000, 36, 1);
    const auto threaded =
        ensemble_correlation_vs_separation(mode, cloud, paper_w0, 0.1, 400, 3000, 36, 4);
    CHECK(serial.pearson == threaded.pearson);
    CHECK(serial.qpn_change_ratio == threaded.qpn_change_ratio);
}

TEST_CASE("transport velocity") {
    CHECK(transport_velocity(AngularFrequency{0.0}, 813e-9) == 0.0);
    CHECK(transport_velocity(AngularFrequency::from_hz(10e3), 813e-9) ==
          doctest::Approx(4.065e-3).epsilon(1e-12));
    CHECK(transport_velocity(AngularFrequency::from_hz(-10e3), 813e-9) ==
          doctest::Approx(-4.065e-3).epsilon(1e-12));
}
