#include "sqclock/cavity.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace sqclock {

namespace {

// Dimensionless shape of the QPN noise model:
// h(s) = (s^2/2 + delta_c s) / (s + delta_c)^2, so that the model noise is
// g * sqrt(h).
double qpn_shape(double s, double delta_c) {
    const double denom = s + delta_c;
    return (0.5 * s * s + delta_c * s) / (denom * denom);
}

}  // namespace

AngularFrequency dressed_shift(double n_atoms, Spin /*spin*/, const CavityParams& params) {
    if (!(n_atoms >= 0.0)) {
        throw std::domain_error("dressed_shift: atom number must be >= 0");
    }
    const double dc = params.delta_c.rad();
    if (!(dc > 0.0)) {
        throw std::domain_error("dressed_shift: delta_c must be > 0");
    }
    const double g = params.g_eff.rad();
    const double rabi_sq = 4.0 * g * g * n_atoms;  // (2 g sqrt(N))^2
    // (-delta_c + sqrt(delta_c^2 + Omega^2)) / 2, written to avoid
    // cancellation for small Omega.
    const double shift = 0.5 * rabi_sq / (dc + std::sqrt(dc * dc + rabi_sq));
    return AngularFrequency{shift};
}

double atom_number_from_sum_shift(AngularFrequency omega_sum, const CavityParams& params) {
    const double s = omega_sum.rad();
    if (!(s >= 0.0)) {
        throw std::domain_error("atom_number_from_sum_shift: shift must be >= 0");
    }
    const double dc = params.delta_c.rad();
    const double g = params.g_eff.rad();
    return s * (dc / (g * g)) * (1.0 + 0.5 * s / dc);
}

double atom_number_from_state_shift(AngularFrequency omega_state, const CavityParams& params) {
    const double w = omega_state.rad();
    if (!(w >= 0.0)) {
        throw std::domain_error("atom_number_from_state_shift: shift must be >= 0");
    }
    const double dc = params.delta_c.rad();
    const double g = params.g_eff.rad();
    return w * (dc / (g * g)) * (1.0 + w / dc);
}

AngularFrequency qpn_shift_noise(AngularFrequency omega_sum, const CavityParams& params) {
    const double s = omega_sum.rad();
    if (!(s >= 0.0)) {
        throw std::domain_error("qpn_shift_noise: shift must be >= 0");
    }
    const double g = params.g_eff.rad();
    return AngularFrequency{g * std::sqrt(qpn_shape(s, params.delta_c.rad()))};
}

namespace {

struct Model3 {
    // Parameters: p = (g, offset, slope). All in rad/s except slope.
    static double eval(const std::array<double, 3>& p, double s, double dc) {
        const double h = qpn_shape(s, dc);
        return std::sqrt(p[0] * p[0] * h + p[1] * p[1] + p[2] * p[2] * s * s);
    }

    static std::array<double, 3> jacobian_row(const std::array<double, 3>& p, double s,
                                              double dc, double f) {
        const double h = qpn_shape(s, dc);
        if (f <= 0.0) {
            return {0.0, 0.0, 0.0};
        }
        return {p[0] * h / f, p[1] / f, p[2] * s * s / f};
    }
};

// Solves the symmetric 3x3 system A x = b by Gaussian elimination with
// partial pivoting. Returns false when singular.
bool solve3(std::array<std::array<double, 3>, 3> a, std::array<double, 3> b,
            std::array<double, 3>& x) {
    for (int col = 0; col < 3; ++col) {
        int pivot = col;
        for (int r = col + 1; r < 3; ++r) {
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) {
                pivot = r;
            }
        }
        if (std::abs(a[pivot][col]) < 1e-300) {
            return false;
        }
        std::swap(a[col], a[pivot]);
        std::swap(b[col], b[pivot]);
        for (int r = col + 1; r < 3; ++r) {
            const double factor = a[r][col] / a[col][col];
            for (int c = col; c < 3; ++c) {
                a[r][c] -= factor * a[col][c];
            }
            b[r] -= factor * b[col];
        }
    }
    for (int row = 2; row >= 0; --row) {
        double sum = b[row];
        for (int c = row + 1; c < 3; ++c) {
            sum -= a[row][c] * x[c];
        }
        x[row] = sum / a[row][row];
    }
    return true;
}

double weighted_ssr(std::span<const QpnFitPoint> data, const std::array<double, 3>& p,
                    double dc) {
    double ssr = 0.0;
    for (const auto& pt : data) {
        const double r = Model3::eval(p, pt.omega_sum.rad(), dc) - pt.measured_std.rad();
        ssr += pt.weight * r * r;
    }
    return ssr;
}

}  // namespace

QpnFitResult fit_coupling(std::span<const QpnFitPoint> data, const CavityParams& params,
                          bool include_rotation_noise) {
    if (data.size() < 3) {
        throw std::invalid_argument("fit_coupling: need at least 3 data points");
    }
    double s_min = data.front().omega_sum.rad();
    double s_max = s_min;
    for (const auto& pt : data) {
        if (!(pt.measured_std.rad() > 0.0)) {
            throw std::invalid_argument("fit_coupling: measured stds must be > 0");
        }
        if (!(pt.omega_sum.rad() >= 0.0)) {
            throw std::invalid_argument("fit_coupling: shifts must be >= 0");
        }
        s_min = std::min(s_min, pt.omega_sum.rad());
        s_max = std::max(s_max, pt.omega_sum.rad());
    }
    if (!(s_max > s_min)) {
        throw FitError("fit_coupling: degenerate data, all points share one omega_sum", 0.0);
    }

    const double dc = params.delta_c.rad();
    const int n_params = include_rotation_noise ? 3 : 2;

    // Initialization: in variance space the model is linear,
    //   y^2 = g^2 h(s) + offset^2 + slope^2 s^2,
    // so an ordinary linear solve gives near-exact starting values.
    std::array<std::array<double, 3>, 3> ata{};
    std::array<double, 3> aty{};
    double y_scale = 0.0;
    for (const auto& pt : data) {
        y_scale = std::max(y_scale, pt.measured_std.rad());
    }
    for (const auto& pt : data) {
        const double s = pt.omega_sum.rad();
        const double y2 = pt.measured_std.rad() * pt.measured_std.rad();
        const std::array<double, 3> row = {qpn_shape(s, dc), 1.0,
                                           include_rotation_noise ? s * s : 0.0};
        for (int a = 0; a < 3; ++a) {
            aty[a] += row[a] * y2;
            for (int b = 0; b < 3; ++b) {
                ata[a][b] += row[a] * row[b];
            }
        }
    }
    if (!include_rotation_noise) {
        ata[2] = {0.0, 0.0, 1.0};
        ata[0][2] = ata[1][2] = 0.0;
        ata[2][0] = ata[2][1] = 0.0;
        aty[2] = 0.0;
    }
    std::array<double, 3> squares{};
    if (!solve3(ata, aty, squares)) {
        squares = {y_scale * y_scale, y_scale * y_scale * 1e-2, 0.0};
    }
    // Seed every fitted parameter off zero: the std-space gradient of a
    // squared parameter vanishes exactly at the origin.
    const double floor_sq = 1e-6 * y_scale * y_scale;
    std::array<double, 3> p = {std::sqrt(std::max(squares[0], floor_sq)),
                               std::sqrt(std::max(squares[1], floor_sq)),
                               0.0};
    if (include_rotation_noise) {
        const double slope_floor = floor_sq / (s_max * s_max);
        p[2] = std::sqrt(std::max(squares[2], slope_floor));
    }
    double lambda = 1e-3;
    double ssr = weighted_ssr(data, p, dc);
    int iter = 0;
    const int max_iter = 200;
    bool converged = false;

    for (; iter < max_iter; ++iter) {
        // Normal equations J^T W J and J^T W r.
        std::array<std::array<double, 3>, 3> jtj{};
        std::array<double, 3> jtr{};
        for (const auto& pt : data) {
            const double s = pt.omega_sum.rad();
            const double f = Model3::eval(p, s, dc);
            const auto row = Model3::jacobian_row(p, s, dc, f);
            const double resid = f - pt.measured_std.rad();
            for (int a = 0; a < n_params; ++a) {
                jtr[a] += pt.weight * row[a] * resid;
                for (int b = 0; b < n_params; ++b) {
                    jtj[a][b] += pt.weight * row[a] * row[b];
                }
            }
        }
        // Marquardt scaling keeps the damping unit-free.
        std::array<std::array<double, 3>, 3> damped = jtj;
        for (int a = 0; a < 3; ++a) {
            damped[a][a] += lambda * (jtj[a][a] > 0.0 ? jtj[a][a] : 1.0);
        }
        if (n_params == 2) {
            damped[2] = {0.0, 0.0, 1.0};
            jtr[2] = 0.0;
            damped[0][2] = damped[1][2] = 0.0;
            damped[2][0] = damped[2][1] = 0.0;
        }
        std::array<double, 3> step{};
        std::array<double, 3> rhs = {-jtr[0], -jtr[1], -jtr[2]};
        if (!solve3(damped, rhs, step)) {
            throw FitError("fit_coupling: singular normal equations",
                           std::sqrt(ssr / static_cast<double>(data.size())));
        }
        std::array<double, 3> trial = {p[0] + step[0], p[1] + step[1], p[2] + step[2]};
        const double trial_ssr = weighted_ssr(data, trial, dc);
        if (trial_ssr <= ssr) {
            const double rel_step =
                std::abs(step[0]) / (std::abs(p[0]) + 1e-300) +
                std::abs(step[1]) / (std::abs(p[1]) + 1e-300);
            p = trial;
            const double improvement = (ssr - trial_ssr) / (ssr + 1e-300);
            ssr = trial_ssr;
            lambda = std::max(lambda * 0.3, 1e-14);
            if (rel_step < 1e-12 || improvement < 1e-15) {
                converged = true;
                ++iter;
                break;
            }
        } else {
            lambda *= 8.0;
            if (lambda > 1e14) {
                converged = true;  // stuck at a (local) minimum
                ++iter;
                break;
            }
        }
    }

    const double residual_rms = std::sqrt(ssr / static_cast<double>(data.size()));
    if (!converged) {
        throw FitError("fit_coupling: no convergence after iteration cap", residual_rms);
    }

    // Parameter covariance: (J^T W J)^{-1} * ssr / (n - p), via column solves.
    std::array<std::array<double, 3>, 3> jtj{};
    for (const auto& pt : data) {
        const double s = pt.omega_sum.rad();
        const double f = Model3::eval(p, s, dc);
        const auto row = Model3::jacobian_row(p, s, dc, f);
        for (int a = 0; a < n_params; ++a) {
            for (int b = 0; b < n_params; ++b) {
                jtj[a][b] += pt.weight * row[a] * row[b];
            }
        }
    }
    if (n_params == 2) {
        jtj[2] = {0.0, 0.0, 1.0};
        jtj[0][2] = jtj[1][2] = 0.0;
        jtj[2][0] = jtj[2][1] = 0.0;
    }
    const double dof = std::max(1.0, static_cast<double>(data.size()) - n_params);
    const double variance_scale = ssr / dof;
    std::array<double, 3> errs{};
    for (int col = 0; col < 3; ++col) {
        std::array<double, 3> e{};
        std::array<double, 3> unit{};
        unit[col] = 1.0;
        if (solve3(jtj, unit, e) && e[col] > 0.0) {
            errs[col] = std::sqrt(e[col] * variance_scale);
        }
    }

    QpnFitResult result;
    result.g_fit = AngularFrequency{std::abs(p[0])};
    result.noise_offset = AngularFrequency{std::abs(p[1])};
    result.rotation_noise_slope = include_rotation_noise ? std::abs(p[2]) : 0.0;
    result.residual_rms = AngularFrequency{residual_rms};
    result.g_err_rad = errs[0];
    result.offset_err_rad = errs[1];
    result.slope_err = errs[2];
    result.iterations = iter;
    return result;
}

}  // namespace sqclock
