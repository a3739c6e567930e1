// geometry.hpp - mode-overlap statistics: effective coupling, effective atom
// number, sub-ensemble correlation versus lattice transport separation
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sqclock/units.hpp"

namespace sqclock {

// Coordinate convention: X is the cavity axis, Y the transverse horizontal
// axis, Z vertical (along gravity and the lattice transport direction).
struct ModeGeometry {
    double w0 = 0.0;        // 1/e^2 intensity waist, m
    AngularFrequency g0;    // peak single-atom coupling

    static constexpr const char* axis_convention =
        "X: cavity axis, Y: transverse horizontal, Z: vertical (gravity)";
};

// Transverse atomic density model: independent Gaussians in Y and Z, with
// the Z center offset from the cavity mode axis. The standing wave along X
// is assumed time-averaged, which is where the factor 1/2 in the coupling
// weight comes from.
struct CloudDistribution {
    double sigma_y = 0.0;   // m
    double sigma_z = 0.0;   // m
    double z_center = 0.0;  // cloud center relative to the mode axis, m
};

// Peak coupling from the transition linewidth (stretched transition, unit
// Clebsch-Gordan), wavelength and mode volume V = pi w0^2 L / 4:
//   g0^2 = 3 c lambda^2 Gamma / (8 pi V).
AngularFrequency peak_coupling(AngularFrequency gamma, double lambda, double w0,
                               double cavity_length);

// Thermal radial cloud width from equipartition in a harmonic trap.
double sigma_from_radial_temperature(double temperature_k, AngularFrequency trap_freq,
                                     double mass_kg);

struct EffectiveCoupling {
    AngularFrequency g_eff;       // sqrt(<g^4>/<g^2>)
    double n_eff_fraction = 0.0;  // <g^2>^2 / <g^4>
    double mean_g2 = 0.0;         // rad^2/s^2
    double mean_g4 = 0.0;         // rad^4/s^4
};

enum class OverlapMethod { automatic, closed_form, quadrature };

// Ensemble-averaged coupling moments over the cloud. The closed form covers
// arbitrary z_center; adaptive quadrature is used when requested or when the
// cloud is off-center in automatic mode.
EffectiveCoupling effective_coupling(const ModeGeometry& mode, const CloudDistribution& cloud,
                                     OverlapMethod method = OverlapMethod::automatic);

// Per-atom coupling weights g_i^2 for n_atoms positions drawn from the
// cloud. Deterministic for a given seed.
std::vector<double> sample_atom_couplings(const ModeGeometry& mode,
                                          const CloudDistribution& cloud, std::size_t n_atoms,
                                          std::uint64_t seed);

struct CorrelationResult {
    double pearson = 0.0;            // Monte Carlo estimate
    double qpn_change_db = 0.0;      // combined differential QPN vs independent, dB
    double qpn_change_ratio = 1.0;   // same, as a variance ratio
    double pearson_analytic = 0.0;
    double qpn_change_db_analytic = 0.0;
    double qpn_change_ratio_analytic = 1.0;
    double pearson_stat_err = 0.0;   // ~1 sigma statistical errors of the MC
    double ratio_stat_err = 0.0;
};

// Correlation of two mode-weighted J_z readings of one frozen spin
// configuration, with the mode offset by -separation/2 and +separation/2
// along Z about the cloud center, plus the resulting change of the combined
// two-ensemble QPN. detection_noise is the added readout noise in units of
// the single-reading weighted QPN.
CorrelationResult ensemble_correlation_vs_separation(
    const ModeGeometry& mode, const CloudDistribution& cloud, double separation,
    double detection_noise, std::size_t n_atoms, std::size_t n_trials, std::uint64_t seed,
    int threads = 1, bool flip_spins = false);

// Closed-form counterpart used as the cross-check curve.
CorrelationResult analytic_correlation_vs_separation(const ModeGeometry& mode,
                                                     const CloudDistribution& cloud,
                                                     double separation,
                                                     double detection_noise);

// Lattice transport velocity for a beam detuning delta_l.
double transport_velocity(AngularFrequency delta_l, double lambda_lattice);

}  // namespace sqclock
