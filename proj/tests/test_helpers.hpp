// test_helpers.hpp - shared fixtures for the unit suites
#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "sqclock/clock.hpp"
#include "sqclock/core_types.hpp"
#include "sqclock/squeeze.hpp"

namespace sqclock::testing {

// Operating parameters of the reference apparatus used across the suites.
inline CavityParams reference_cavity() {
    CavityParams p;
    p.g_eff = AngularFrequency::from_hz(5.2e3);
    p.kappa = AngularFrequency::from_hz(158e3);
    p.gamma = AngularFrequency::from_hz(7.48e3);
    p.delta_c = AngularFrequency::from_hz(1e6);
    p.w0 = 71e-6;
    p.cavity_length = 6.9720e-2;
    p.lambda_probe = 689e-9;
    p.lambda_lattice = 813e-9;
    return p;
}

// Comparison-sequence configuration calibrated to the reference experiment:
// 8.5e3 effective atoms per ensemble, contrasts (0.55, 0.50), detection
// noise from the single-ensemble calibration, pre-probe photon number set
// for beta_A ~ 0.48 and a response mismatch tuned for beta_D ~ 0.907.
inline SequenceConfig reference_comparison(ComparisonMode mode) {
    SequenceConfig cfg;
    cfg.mode = mode;
    cfg.ramsey_time = 0.014;
    cfg.cycle_time = 0.7;
    cfg.n_shots = 20000;
    cfg.laser_noise_std = 0.1;
    cfg.asymmetry = 0.0791;
    cfg.separation = 150e-6;

    EnsembleSpec ens;
    ens.n_total = 8500.0;
    ens.n_eff = 8500.0;
    ens.contrast_i = 0.55;
    ens.contrast_f = 0.50;
    cfg.ensemble_a = ens;
    cfg.ensemble_b = ens;

    cfg.squeeze.photons_per_measurement = 16250.0;
    cfg.squeeze.quantum_efficiency = 0.28;
    cfg.squeeze.final_photon_ratio = 64.0;
    cfg.squeeze.detection_noise_scale =
        calibrate_noise_scale(-4.8, 2.3e4, 0.28, 2.4e4, 2.3);
    return cfg;
}

inline double mean(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) {
        m += x;
    }
    return m / static_cast<double>(v.size());
}

inline double variance(std::span<const double> v) {
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) {
        s += (x - m) * (x - m);
    }
    return s / static_cast<double>(v.size() - 1);
}

}  // namespace sqclock::testing
