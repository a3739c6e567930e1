// stats.hpp - optimal linear estimators, differential phase series, Allan
// deviation, stability fits, and QPN/SQL benchmark bounds
#pragma once

#include <span>
#include <vector>

#include "sqclock/clock.hpp"

namespace sqclock {

struct EstimatorSet {
    double beta_a = 0.0;
    double beta_b = 0.0;
    double beta_d = 1.0;
    // Spread over sub-range re-fits (dataset halved to full length).
    double beta_a_unc = 0.0;
    double beta_b_unc = 0.0;
    double beta_d_unc = 0.0;
};

struct EstimatorResult {
    EstimatorSet estimators;
    std::vector<double> phase_series;  // (phi_A - phi_B) per shot, rad
    double phase_variance = 0.0;
};

// Joint minimization of the differential-phase variance
//   [(dN_Af - bA dN_Ap) - bD (dN_Bf - bB dN_Bp)] / alpha
// over (beta_A, beta_B, beta_D): closed-form inner solve for the pre
// estimators at fixed beta_D, golden-section search over beta_D. alpha is
// the fitted fringe amplitude (contrast included) converting population
// difference to phase.
EstimatorResult optimize_estimators(std::span<const SpinRecord> records, double alpha);

// Practically achievable differential-phase noise of uncorrelated atoms:
// full projection noise with the fringe-slope contrast.
double qpn_limit(double n_a, double n_b, double contrast_i);

// Standard quantum limit of the comparison: the non-participating fraction
// no longer carries projection noise; beta_d weights ensemble B.
double sql_limit(double n_a, double n_b, double contrast_i, double beta_d);

struct AdevPoint {
    double tau_s = 0.0;
    double sigma_y = 0.0;
    double error_bar = 0.0;
    std::size_t n_samples = 0;  // overlapping two-sample differences
    bool tau_adjusted = false;  // requested tau was not a cycle multiple
};

// Overlapping Allan deviation of the per-shot differential phase, converted
// to fractional frequency via y = phi / (2 pi T nu).
std::vector<AdevPoint> allan_deviation(std::span<const double> phase_series,
                                       double ramsey_time, double cycle_time,
                                       double transition_frequency_hz,
                                       std::span<const double> tau_list);

struct StabilityFit {
    double coeff = 0.0;                  // c in sigma_y(tau) = c * tau^(-1/2)
    std::vector<double> residuals;       // log-space residual per point
};

StabilityFit fit_stability(std::span<const AdevPoint> curve);

double pearson(std::span<const double> x, std::span<const double> y);

// Full two-mode comparison bundle assembled by the pipelines.
struct ComparisonResult {
    std::vector<double> phase_series;
    std::vector<AdevPoint> adev_curve;
    double stability_coeff = 0.0;
    double qpn_bound = 0.0;   // rad per shot
    double sql_bound = 0.0;   // rad per shot
    double enhancement_db = 0.0;
};

}  // namespace sqclock
