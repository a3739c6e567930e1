// units.hpp - angular frequency convention, decibel helpers, physical constants
#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace sqclock {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

// All frequencies are stored as angular frequencies (rad/s) inside the
// library; ordinary frequency (Hz) appears only at I/O boundaries.
struct AngularFrequency {
    double rad_per_s = 0.0;

    constexpr AngularFrequency() = default;
    explicit constexpr AngularFrequency(double w) : rad_per_s(w) {}

    static constexpr AngularFrequency from_hz(double f) {
        return AngularFrequency{f * two_pi};
    }
    [[nodiscard]] constexpr double hz() const { return rad_per_s / two_pi; }
    [[nodiscard]] constexpr double rad() const { return rad_per_s; }

    friend constexpr bool operator==(AngularFrequency a, AngularFrequency b) {
        return a.rad_per_s == b.rad_per_s;
    }
    friend constexpr AngularFrequency operator+(AngularFrequency a, AngularFrequency b) {
        return AngularFrequency{a.rad_per_s + b.rad_per_s};
    }
    friend constexpr AngularFrequency operator-(AngularFrequency a, AngularFrequency b) {
        return AngularFrequency{a.rad_per_s - b.rad_per_s};
    }
};

namespace constants {
inline constexpr double speed_of_light = 299792458.0;          // m/s
inline constexpr double boltzmann = 1.380649e-23;              // J/K
inline constexpr double atomic_mass_unit = 1.66053906892e-27;  // kg
inline constexpr double mass_sr87 = 86.9088775 * atomic_mass_unit;
// Default optical transition frequency used to convert differential phase
// to fractional frequency (configurable wherever it is consumed).
inline constexpr double sr_clock_frequency_hz = 4.2923e14;
}  // namespace constants

// Power ratio -> dB. Squeezing and stability results are quoted in dB of a
// variance (power) ratio throughout.
inline double db_from_ratio(double r) {
    if (!(r > 0.0)) {
        throw std::domain_error("db_from_ratio: ratio must be > 0");
    }
    return 10.0 * std::log10(r);
}

inline double ratio_from_db(double db) { return std::pow(10.0, db / 10.0); }

// Floor applied when a variance ratio underflows to zero in degenerate
// synthetic cases (perfectly correlated records).
inline constexpr double db_floor = -60.0;

inline double db_from_ratio_floored(double r) {
    if (r < 0.0) {
        throw std::domain_error("db_from_ratio_floored: ratio must be >= 0");
    }
    const double floor_ratio = ratio_from_db(db_floor);
    return db_from_ratio(r < floor_ratio ? floor_ratio : r);
}

}  // namespace sqclock
