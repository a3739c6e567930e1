// cavity.hpp - dressed atom-cavity spectral response and QPN coupling fit
#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "sqclock/core_types.hpp"
#include "sqclock/units.hpp"

namespace sqclock {

enum class Spin { down, up };

// One shot's pair of dispersive shifts: the coupled-state shift measured
// before and after the population-swapping pi pulse.
struct ShiftMeasurement {
    AngularFrequency omega_down;
    AngularFrequency omega_up;

    [[nodiscard]] AngularFrequency omega_sum() const { return omega_down + omega_up; }
};

// Shift of the cavity-like dressed mode relative to the bare cavity for
// n_atoms in the coupled state. Zero atoms give zero shift; the convention
// is the one whose sum over an equal superposition inverts exactly to the
// total atom number.
AngularFrequency dressed_shift(double n_atoms, Spin spin, const CavityParams& params);

// Total atom number of an equal-superposition state from the summed shift.
double atom_number_from_sum_shift(AngularFrequency omega_sum, const CavityParams& params);

// Single-state population from one dispersive shift.
double atom_number_from_state_shift(AngularFrequency omega_state, const CavityParams& params);

// Projection-noise-induced standard deviation of the shift difference
// (omega_up - omega_down) for a coherent spin state with the given summed
// shift.
AngularFrequency qpn_shift_noise(AngularFrequency omega_sum, const CavityParams& params);

struct QpnFitPoint {
    AngularFrequency omega_sum;
    AngularFrequency measured_std;
    double weight = 1.0;  // optional per-point weight; 1 = unweighted
};

struct QpnFitResult {
    AngularFrequency g_fit;
    AngularFrequency noise_offset;       // technical floor, added in quadrature
    double rotation_noise_slope = 0.0;   // coefficient of the linear-in-shift term
    AngularFrequency residual_rms;
    // 1-sigma parameter uncertainties from the fit covariance.
    double g_err_rad = 0.0;
    double offset_err_rad = 0.0;
    double slope_err = 0.0;
    int iterations = 0;
};

class FitError : public std::runtime_error {
  public:
    FitError(const std::string& what, double residual_rms_rad)
        : std::runtime_error(what), residual_rms_rad(residual_rms_rad) {}
    double residual_rms_rad;
};

// Damped (Levenberg-Marquardt) least squares of the shift-noise model
//   std(omega_sum) = sqrt(g^2 h(omega_sum) + offset^2 + (slope*omega_sum)^2)
// with analytic Jacobian. The slope term is fitted only when
// include_rotation_noise is set. Deterministic given the data.
QpnFitResult fit_coupling(std::span<const QpnFitPoint> data, const CavityParams& params,
                          bool include_rotation_noise = false);

}  // namespace sqclock
