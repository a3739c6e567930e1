// clock.hpp - differential clock sequence simulation: pre-measurements of
// two sub-ensembles, Ramsey evolution with common laser noise, final
// readout, shot-record generation
#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "sqclock/core_types.hpp"
#include "sqclock/squeeze.hpp"

namespace sqclock {

enum class ComparisonMode { css_css, sss_sss };

struct SequenceConfig {
    ComparisonMode mode = ComparisonMode::css_css;
    double ramsey_time = 0.0;        // s
    double cycle_time = 0.0;         // s, full experimental cycle
    std::size_t n_shots = 0;
    double laser_noise_std = 0.0;    // common-mode phase noise per shot, rad
    // Fractional mismatch of ensemble B's phase response in the squeezed
    // sequence (probe-induced: ac-Stark and unequal-squeezing asymmetries
    // vanish when the probe is off). Drives the optimal differential
    // estimator away from 1.
    double asymmetry = 0.0;
    EnsembleSpec ensemble_a;
    EnsembleSpec ensemble_b;
    SqueezeConfig squeeze;
    double separation = 0.0;         // sub-ensemble separation, m (sequence bookkeeping)
    // Unit-contrast amplitude of the combined Ramsey fringe in atom-number
    // units; 0 selects n_eff_a + n_eff_b.
    double ramsey_fringe_amplitude = 0.0;

    void validate() const;
    [[nodiscard]] double fringe_amplitude() const {
        return ramsey_fringe_amplitude > 0.0 ? ramsey_fringe_amplitude
                                             : ensemble_a.n_eff + ensemble_b.n_eff;
    }
    // Fringe slope contrast of the configured sequence (probing included or
    // not).
    [[nodiscard]] double readout_contrast() const;
};

// One experimental shot: population differences dN = N_down - N_up per
// ensemble, for the pre and final measurement windows.
struct SpinRecord {
    std::size_t shot_index = 0;
    double dn_a_pre = 0.0;
    double dn_a_final = 0.0;
    double dn_b_pre = 0.0;
    double dn_b_final = 0.0;
};

// Contrast pairs (C_i, C_f) for the two sequence variants. The probe-free
// sequence keeps its initial contrast.
std::pair<double, double> css_contrast_pair(const SequenceConfig& config);
std::pair<double, double> sss_contrast_pair(const SequenceConfig& config);

// Presets measured for the single-ensemble squeezing study and for the
// two-ensemble comparison sequence.
inline constexpr std::pair<double, double> single_ensemble_contrast_preset{0.71, 0.60};
inline constexpr std::pair<double, double> comparison_contrast_preset{0.55, 0.50};

// Simulates n_shots of the differential sequence. Both modes run the
// identical sequence; the probe-off mode simply carries no spin information
// in its pre-measurement records and keeps the probe-free contrast.
std::vector<SpinRecord> run_sequence(const SequenceConfig& config, std::uint64_t seed);

// Mean combined population difference versus final-pulse phase; the fitted
// amplitude recovers contrast * fringe amplitude.
std::vector<std::pair<double, double>> ramsey_fringe_scan(const SequenceConfig& config,
                                                          std::span<const double> phase_list,
                                                          std::uint64_t seed);

// Least-squares sinusoid amplitude of a fringe scan (known phase axis).
double fit_fringe_amplitude(std::span<const std::pair<double, double>> fringe);

}  // namespace sqclock
