// squeeze.hpp - QND measurement chain: detection noise, conditional
// (measurement-based) squeezing, probe-induced contrast loss, tomography,
// and the Wineland parameter
#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "sqclock/rng.hpp"
#include "sqclock/units.hpp"

namespace sqclock {

struct SqueezeConfig {
    double photons_per_measurement = 0.0;  // probe photons per population measurement
    double quantum_efficiency = 1.0;       // detected fraction of signal photons
    // Detection noise sigma_det = detection_noise_scale / sqrt(n_ph * Q), in
    // J_z atom-number units.
    double detection_noise_scale = 0.0;
    double scatter_loss_coeff = 0.0;       // contrast decay rate per probe photon
    double excess_antisqueeze_db = 0.0;    // technical noise above the Q-limited backaction
    // The final readout runs at final_photon_ratio times the probe photon
    // number of the squeezing measurement. 2.3 reproduces the relation
    // between observed and detection-corrected noise reduction at the
    // reference operating point.
    double final_photon_ratio = 2.3;

    void validate() const;
};

// Gaussian collective-spin state conditioned on past measurements.
// Variances are absolute (atom-number^2); QPN-relative values are formed at
// output time.
struct ConditionalState {
    double n_atoms = 0.0;
    double mean_jz = 0.0;
    double var_jz = 0.0;          // conditional J_z variance
    double var_antisqueeze = 0.0; // conjugate-quadrature variance
    double contrast = 1.0;

    static ConditionalState css(double n_atoms, double contrast = 1.0);
    [[nodiscard]] double qpn_var() const { return 0.25 * n_atoms; }
};

// Detection noise std. dev. in J_z units; +infinity when no photons are used.
double detection_noise(const SqueezeConfig& config);

// Same, for the final readout window (final_photon_ratio more photons).
double final_detection_noise(const SqueezeConfig& config);

struct MeasurementOutcome {
    double outcome = 0.0;
    ConditionalState state;
};

// One QND readout of true_jz: Gaussian outcome, conditional-variance fusion,
// backaction growth of the conjugate quadrature, contrast decay.
MeasurementOutcome qnd_measure(const ConditionalState& state, double true_jz,
                               const SqueezeConfig& config, RandomStream& rng);

struct NoiseReduction {
    double r_db = 0.0;
    double beta = 0.0;
    double diff_variance = 0.0;  // Var(jz_final - beta * jz_pre)
};

// Spin-noise reduction of paired (pre, final) J_z records relative to the
// supplied QPN variance. beta is the variance-minimizing linear estimator.
NoiseReduction spin_noise_reduction(std::span<const std::pair<double, double>> records,
                                    double qpn_variance);

// Removes the final-readout detection variance from an observed noise
// reduction, assuming uncorrelated detection noise.
double inferred_intrinsic_squeezing(double r_observed_db, double final_detection_var,
                                    double qpn_var);

// Wineland parameter xi = R * C_i / C_f^2 (as a ratio; callers convert to dB).
double wineland_parameter(double r_ratio, double contrast_i, double contrast_f);

struct TomographyPoint {
    double psi = 0.0;
    double noise_rel_qpn = 0.0;
    double unitary_reference = 0.0;  // same angle, minimum-uncertainty state
};

// Noise versus tomography rotation angle, relative to QPN.
std::vector<TomographyPoint> tomography_curve(const ConditionalState& state,
                                              std::span<const double> psi_list);

struct SweepRow {
    double n_ph = 0.0;
    double r_db = 0.0;
    double r_inferred_db = 0.0;
    double contrast_i = 0.0;
    double contrast_f = 0.0;
    double contrast_penalty = 0.0;  // C_i / C_f^2
    double xi_db = 0.0;
    double xi_inferred_db = 0.0;
};

// Simulated probe-strength sweep at fixed atom number: noise reduction
// improves with photon number while contrast decays, so the Wineland
// parameter acquires an interior optimum.
std::vector<SweepRow> sweep_probe_strength(std::span<const double> photon_list,
                                           const SqueezeConfig& base, double contrast_i,
                                           double n_atoms, std::size_t n_trials,
                                           std::uint64_t seed, int threads = 1);

// Detection-noise scale that makes the modeled observed noise reduction
// equal target_r_db at the given operating point.
double calibrate_noise_scale(double target_r_db, double n_ph, double quantum_efficiency,
                             double n_atoms, double final_photon_ratio = 2.3);

// Closed-form observed noise-reduction ratio for prior variance v, probe
// noise variance sp2 and final readout noise variance sf2.
double expected_noise_reduction_ratio(double v, double sp2, double sf2);

}  // namespace sqclock
