#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "sqclock/clock.hpp"
#include "sqclock/stats.hpp"
#include "test_helpers.hpp"

using namespace sqclock;

TEST_CASE("sequence config validation") {
    auto cfg = testing::reference_comparison(ComparisonMode::css_css);
    CHECK_NOTHROW(cfg.validate());

    auto bad = cfg;
    bad.cycle_time = 0.001;  // shorter than the Ramsey window
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = cfg;
    bad.n_shots = 1;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = cfg;
    bad.ensemble_a.contrast_f = 0.6;  // above contrast_i
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = cfg;
    bad.asymmetry = -1.5;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("contrast pairs per sequence variant") {
    auto cfg = testing::reference_comparison(ComparisonMode::css_css);
    CHECK(css_contrast_pair(cfg).first == doctest::Approx(0.55));
    CHECK(css_contrast_pair(cfg).second == doctest::Approx(0.55));  // no probe
    CHECK(sss_contrast_pair(cfg).first == doctest::Approx(0.55));
    CHECK(sss_contrast_pair(cfg).second == doctest::Approx(0.50));

    CHECK(single_ensemble_contrast_preset.first == doctest::Approx(0.71));
    CHECK(single_ensemble_contrast_preset.second == doctest::Approx(0.60));
    CHECK(comparison_contrast_preset.first == doctest::Approx(0.55));
    CHECK(comparison_contrast_preset.second == doctest::Approx(0.50));
}

TEST_CASE("records are bit-identical for a fixed seed") {
    const auto cfg = testing::reference_comparison(ComparisonMode::sss_sss);
    const auto a = run_sequence(cfg, 1234);
    const auto b = run_sequence(cfg, 1234);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].dn_a_pre == b[i].dn_a_pre);
        CHECK(a[i].dn_a_final == b[i].dn_a_final);
        CHECK(a[i].dn_b_pre == b[i].dn_b_pre);
        CHECK(a[i].dn_b_final == b[i].dn_b_final);
    }
}

TEST_CASE("probe-off final variance carries full projection noise") {
    // Independent oracle: binomial population sampling of an equal
    // superposition gives Var(dN) = N.
    RandomStream oracle_rng = RandomStream::derive(61, 0);
    const double n_atoms = 8500.0;
    std::vector<double> oracle(60000);
    for (auto& dn : oracle) {
        const double n_down = oracle_rng.binomial_half(n_atoms);
        dn = 2.0 * n_down - n_atoms;
    }
    const double oracle_var = testing::variance(oracle);
    CHECK(oracle_var == doctest::Approx(n_atoms).epsilon(0.02));

    auto cfg = testing::reference_comparison(ComparisonMode::css_css);
    cfg.laser_noise_std = 0.0;
    cfg.squeeze.detection_noise_scale = 0.0;  // no detection noise
    cfg.n_shots = 60000;
    const auto records = run_sequence(cfg, 62);
    std::vector<double> dn(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        dn[i] = records[i].dn_a_final;
    }
    CHECK(testing::variance(dn) == doctest::Approx(oracle_var).epsilon(0.03));
}

TEST_CASE("probe-off pre-measurements carry no spin information") {
    auto cfg = testing::reference_comparison(ComparisonMode::css_css);
    cfg.n_shots = 20000;
    const auto records = run_sequence(cfg, 63);
    std::vector<double> pre(records.size());
    std::vector<double> fin(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        pre[i] = records[i].dn_a_pre;
        fin[i] = records[i].dn_a_final;
    }
    CHECK(std::abs(pearson(pre, fin)) < 0.03);
}

TEST_CASE("squeezed mode: pre and final of one ensemble are strongly correlated") {
    auto cfg = testing::reference_comparison(ComparisonMode::sss_sss);
    cfg.laser_noise_std = 0.0;
    cfg.n_shots = 20000;
    const auto records = run_sequence(cfg, 64);
    std::vector<double> pre(records.size());
    std::vector<double> fin(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        pre[i] = records[i].dn_a_pre;
        fin[i] = records[i].dn_a_final;
    }
    CHECK(pearson(pre, fin) > 0.6);
}

TEST_CASE("dominant laser noise correlates the two final readouts") {
    auto cfg = testing::reference_comparison(ComparisonMode::sss_sss);
    cfg.n_shots = 20000;
    const auto records = run_sequence(cfg, 65);
    std::vector<double> fa(records.size());
    std::vector<double> fb(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        fa[i] = records[i].dn_a_final;
        fb[i] = records[i].dn_b_final;
    }
    CHECK(pearson(fa, fb) > 0.9);
}

TEST_CASE("shot records are exchangeable") {
    auto cfg = testing::reference_comparison(ComparisonMode::sss_sss);
    cfg.n_shots = 5000;
    auto records = run_sequence(cfg, 66);
    const auto est = optimize_estimators(records, 8500.0);

    std::mt19937_64 shuffler(99);
    std::shuffle(records.begin(), records.end(), shuffler);
    const auto est_shuffled = optimize_estimators(records, 8500.0);
    CHECK(est_shuffled.phase_variance ==
          doctest::Approx(est.phase_variance).epsilon(1e-9));
}

TEST_CASE("fringe scan: amplitude recovery") {
    std::vector<double> phases;
    for (int i = 0; i < 12; ++i) {
        phases.push_back(-std::numbers::pi + i * std::numbers::pi / 6.0);
    }

    SUBCASE("unit contrast, no noise recovers the configured amplitude") {
        auto cfg = testing::reference_comparison(ComparisonMode::css_css);
        cfg.ensemble_a.contrast_i = 1.0;
        cfg.ensemble_a.contrast_f = 1.0;
        cfg.ensemble_b = cfg.ensemble_a;
        cfg.laser_noise_std = 0.0;
        cfg.squeeze.detection_noise_scale = 0.0;
        cfg.n_shots = 400;
        const auto fringe = ramsey_fringe_scan(cfg, phases, 70);
        const double amplitude = fit_fringe_amplitude(fringe);
        CHECK(amplitude == doctest::Approx(cfg.fringe_amplitude()).epsilon(0.01));
    }

    SUBCASE("contrast 0.55 scales the fitted amplitude") {
        auto cfg = testing::reference_comparison(ComparisonMode::css_css);
        cfg.laser_noise_std = 0.0;
        cfg.n_shots = 200;
        const auto fringe = ramsey_fringe_scan(cfg, phases, 71);
        const double amplitude = fit_fringe_amplitude(fringe);
        CHECK(amplitude / cfg.fringe_amplitude() == doctest::Approx(0.55).epsilon(0.02));
    }

    SUBCASE("validation") {
        auto cfg = testing::reference_comparison(ComparisonMode::css_css);
        const std::vector<double> too_few = {0.0, 1.0};
        CHECK_THROWS_AS(ramsey_fringe_scan(cfg, too_few, 72), std::invalid_argument);
    }
}

TEST_CASE("common-mode rejection at the symmetric differential estimator") {
    // With no response mismatch, the unit-weight difference cancels the
    // laser phase exactly; its variance must not depend on the noise level.
    std::vector<double> variances;
    const double qpn_phase =
        1.0 / (0.55 * std::sqrt(2.0 * 8500.0));  // QPN-equivalent phase noise
    for (double scale : {0.0, 1.0, 10.0}) {
        auto cfg = testing::reference_comparison(ComparisonMode::sss_sss);
        cfg.asymmetry = 0.0;
        cfg.laser_noise_std = scale * qpn_phase;
        cfg.n_shots = 30000;
        const auto records = run_sequence(cfg, 73);
        // Fixed estimators: beta_d = 1, beta_a = beta_b from the A-channel
        // regression; only the laser-noise scale varies between runs.
        std::vector<double> pre(records.size());
        std::vector<double> fin(records.size());
        for (std::size_t i = 0; i < records.size(); ++i) {
            pre[i] = records[i].dn_a_pre;
            fin[i] = records[i].dn_a_final;
        }
        const double beta =
            pearson(pre, fin) * std::sqrt(testing::variance(fin) / testing::variance(pre));
        std::vector<double> diff(records.size());
        for (std::size_t i = 0; i < records.size(); ++i) {
            diff[i] = (records[i].dn_a_final - beta * records[i].dn_a_pre) -
                      (records[i].dn_b_final - beta * records[i].dn_b_pre);
        }
        variances.push_back(testing::variance(diff));
    }
    const double band = 3.0 * variances[0] * std::sqrt(2.0 / 30000.0) * 2.0;
    CHECK(std::abs(variances[1] - variances[0]) < band);
    CHECK(std::abs(variances[2] - variances[0]) < band);
}

TEST_CASE("probe-off comparison reaches the projection-noise bound") {
    auto cfg = testing::reference_comparison(ComparisonMode::css_css);
    cfg.n_shots = 40000;
    const auto records = run_sequence(cfg, 74);
    const double alpha = cfg.readout_contrast() * cfg.fringe_amplitude();
    const auto est = optimize_estimators(records, alpha);
    const double bound =
        qpn_limit(cfg.ensemble_a.n_eff, cfg.ensemble_b.n_eff, cfg.ensemble_a.contrast_i);
    const double ratio = std::sqrt(est.phase_variance) / bound;
    CHECK(ratio == doctest::Approx(1.0).epsilon(0.012));
}

TEST_CASE("squeezed comparison beats the probe-off comparison by about 2 dB") {
    const auto css_cfg = testing::reference_comparison(ComparisonMode::css_css);
    const auto sss_cfg = testing::reference_comparison(ComparisonMode::sss_sss);
    const auto records_css = run_sequence(css_cfg, 75);
    const auto records_sss = run_sequence(sss_cfg, 76);
    const auto est_css = optimize_estimators(
        records_css, css_cfg.readout_contrast() * css_cfg.fringe_amplitude());
    const auto est_sss = optimize_estimators(
        records_sss, sss_cfg.readout_contrast() * sss_cfg.fringe_amplitude());

    const double enhancement_db =
        db_from_ratio(est_css.phase_variance / est_sss.phase_variance);
    CHECK(std::abs(enhancement_db - 2.0) < 0.35);

    CHECK(est_sss.estimators.beta_a == doctest::Approx(0.48).epsilon(0.04));
    CHECK(est_sss.estimators.beta_b == doctest::Approx(0.48).epsilon(0.04));
    CHECK(est_sss.estimators.beta_d == doctest::Approx(0.907).epsilon(0.02));
}
