// core_types.hpp - shared domain types for the coupled atom-cavity system
#pragma once

#include <stdexcept>
#include <string>

#include "sqclock/units.hpp"

namespace sqclock {

// Bare-cavity and atomic-transition constants defining the coupled system.
// kappa is the power decay rate of the cavity, gamma the atomic linewidth,
// delta_c the cavity detuning from the probed transition.
struct CavityParams {
    AngularFrequency g_eff;         // effective single-atom vacuum coupling
    AngularFrequency kappa;         // cavity power decay rate
    AngularFrequency gamma;         // atomic linewidth
    AngularFrequency delta_c;       // cavity detuning from the coupled transition
    double w0 = 0.0;                // TEM00 mode waist, m
    double cavity_length = 0.0;     // m
    double lambda_probe = 0.0;      // probed transition wavelength, m
    double lambda_lattice = 0.0;    // lattice wavelength, m

    void validate() const {
        auto positive = [](double v, const char* name) {
            if (!(v > 0.0)) {
                throw std::invalid_argument(std::string("CavityParams.") + name +
                                            ": must be > 0");
            }
        };
        positive(g_eff.rad(), "g_eff");
        positive(kappa.rad(), "kappa");
        positive(gamma.rad(), "gamma");
        positive(delta_c.rad(), "delta_c");
        positive(w0, "w0");
        positive(cavity_length, "cavity_length");
        positive(lambda_probe, "lambda_probe");
        positive(lambda_lattice, "lambda_lattice");
        if (!(kappa.rad() > gamma.rad())) {
            throw std::invalid_argument("CavityParams: kappa must exceed gamma");
        }
        if (!(w0 < cavity_length)) {
            throw std::invalid_argument("CavityParams: w0 must be smaller than cavity_length");
        }
    }
};

// Atom number and cloud geometry of one ensemble. Counts are stored as
// reals: effective atom numbers and Monte Carlo draws are not integers.
struct EnsembleSpec {
    double n_total = 0.0;    // total atom number
    double n_eff = 0.0;      // effective (mode-weighted) atom number
    double sigma_z = 0.0;    // vertical cloud std. dev., m
    double sigma_y = 0.0;    // radial cloud std. dev., m
    double z_offset = 0.0;   // cloud center relative to mode axis, m
    double contrast_i = 1.0; // Ramsey contrast without probing
    double contrast_f = 1.0; // Ramsey contrast with probing

    void validate() const {
        if (!(n_total >= 0.0) || !(n_eff >= 0.0)) {
            throw std::invalid_argument("EnsembleSpec: atom numbers must be >= 0");
        }
        if (n_eff > n_total) {
            throw std::invalid_argument("EnsembleSpec: n_eff must not exceed n_total");
        }
        if (sigma_z < 0.0 || sigma_y < 0.0) {
            throw std::invalid_argument("EnsembleSpec: cloud widths must be >= 0");
        }
        if (!(contrast_i >= 0.0 && contrast_i <= 1.0) ||
            !(contrast_f >= 0.0 && contrast_f <= 1.0)) {
            throw std::invalid_argument("EnsembleSpec: contrasts must lie in [0,1]");
        }
        if (contrast_f > contrast_i) {
            throw std::invalid_argument("EnsembleSpec: contrast_f must not exceed contrast_i");
        }
    }
};

// Collective spin projection J_z = (N_down - N_up) / 2.
struct SpinProjection {
    double n_down = 0.0;
    double n_up = 0.0;

    [[nodiscard]] double jz() const { return 0.5 * (n_down - n_up); }
    [[nodiscard]] double total() const { return n_down + n_up; }
};

// Single-atom cooperativity 4 g^2 / (kappa * gamma).
inline double cooperativity(const CavityParams& p) {
    p.validate();
    const double g = p.g_eff.rad();
    return 4.0 * g * g / (p.kappa.rad() * p.gamma.rad());
}

// Variant used with an explicit coupling (e.g. the g -> 0 limit).
inline double cooperativity(AngularFrequency g, AngularFrequency kappa,
                            AngularFrequency gamma) {
    if (!(kappa.rad() > 0.0) || !(gamma.rad() > 0.0)) {
        throw std::invalid_argument("cooperativity: kappa and gamma must be > 0");
    }
    return 4.0 * g.rad() * g.rad() / (kappa.rad() * gamma.rad());
}

}  // namespace sqclock
