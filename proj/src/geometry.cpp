#include "sqclock/geometry.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "sqclock/quadrature.hpp"
#include "sqclock/rng.hpp"

namespace sqclock {

AngularFrequency peak_coupling(AngularFrequency gamma, double lambda, double w0,
                               double cavity_length) {
    if (!(gamma.rad() > 0.0) || !(lambda > 0.0) || !(w0 > 0.0) || !(cavity_length > 0.0)) {
        throw std::invalid_argument("peak_coupling: all inputs must be > 0");
    }
    const double mode_volume =
        std::numbers::pi * w0 * w0 * cavity_length / 4.0;
    const double g0_sq = 3.0 * constants::speed_of_light * lambda * lambda * gamma.rad() /
                         (8.0 * std::numbers::pi * mode_volume);
    return AngularFrequency{std::sqrt(g0_sq)};
}

double sigma_from_radial_temperature(double temperature_k, AngularFrequency trap_freq,
                                     double mass_kg) {
    if (!(temperature_k >= 0.0) || !(trap_freq.rad() > 0.0) || !(mass_kg > 0.0)) {
        throw std::invalid_argument("sigma_from_radial_temperature: invalid inputs");
    }
    const double w = trap_freq.rad();
    return std::sqrt(constants::boltzmann * temperature_k / (mass_kg * w * w));
}

namespace {

// E[exp(-a (x - c)^2)] for x ~ N(mu, sigma^2):
//   exp(-a (mu - c)^2 / (1 + 2 a sigma^2)) / sqrt(1 + 2 a sigma^2).
double gaussian_overlap_moment(double a, double c, double mu, double sigma) {
    const double denom = 1.0 + 2.0 * a * sigma * sigma;
    const double d = mu - c;
    return std::exp(-a * d * d / denom) / std::sqrt(denom);
}

// Same expectation by adaptive quadrature over the cloud density.
double gaussian_overlap_moment_quad(double a, double c, double mu, double sigma) {
    if (sigma == 0.0) {
        const double d = mu - c;
        return std::exp(-a * d * d);
    }
    const double half_width = 8.0 * sigma + 8.0 / std::sqrt(a) + std::abs(c - mu);
    const double norm = 1.0 / (std::sqrt(2.0 * std::numbers::pi) * sigma);
    auto integrand = [&](double x) {
        const double dx = x - mu;
        const double dc = x - c;
        return norm * std::exp(-a * dc * dc - 0.5 * dx * dx / (sigma * sigma));
    };
    return adaptive_simpson(integrand, mu - half_width, mu + half_width, 1e-13);
}

struct Moments {
    double mean_g2;
    double mean_g4;
};

Moments coupling_moments(const ModeGeometry& mode, const CloudDistribution& cloud,
                         bool use_quadrature) {
    const double g0_sq = mode.g0.rad() * mode.g0.rad();
    const double a2 = 2.0 / (mode.w0 * mode.w0);  // exponent of g_i^2
    const double a4 = 2.0 * a2;                   // exponent of g_i^4
    auto moment = [&](double a, double c, double mu, double sigma) {
        return use_quadrature ? gaussian_overlap_moment_quad(a, c, mu, sigma)
                              : gaussian_overlap_moment(a, c, mu, sigma);
    };
    const double y2 = moment(a2, 0.0, 0.0, cloud.sigma_y);
    const double z2 = moment(a2, 0.0, cloud.z_center, cloud.sigma_z);
    const double y4 = moment(a4, 0.0, 0.0, cloud.sigma_y);
    const double z4 = moment(a4, 0.0, cloud.z_center, cloud.sigma_z);
    // Factor 1/2 per power of g^2 from the time-averaged standing wave.
    return {0.5 * g0_sq * y2 * z2, 0.25 * g0_sq * g0_sq * y4 * z4};
}

}  // namespace

EffectiveCoupling effective_coupling(const ModeGeometry& mode, const CloudDistribution& cloud,
                                     OverlapMethod method) {
    if (!(mode.w0 > 0.0) || !(mode.g0.rad() > 0.0)) {
        throw std::invalid_argument("effective_coupling: invalid mode geometry");
    }
    if (cloud.sigma_y < 0.0 || cloud.sigma_z < 0.0) {
        throw std::invalid_argument("effective_coupling: cloud widths must be >= 0");
    }
    bool use_quadrature = false;
    switch (method) {
        case OverlapMethod::closed_form:
            use_quadrature = false;
            break;
        case OverlapMethod::quadrature:
            use_quadrature = true;
            break;
        case OverlapMethod::automatic:
            use_quadrature = cloud.z_center != 0.0;
            break;
    }
    const Moments m = coupling_moments(mode, cloud, use_quadrature);
    EffectiveCoupling result;
    result.mean_g2 = m.mean_g2;
    result.mean_g4 = m.mean_g4;
    result.g_eff = AngularFrequency{std::sqrt(m.mean_g4 / m.mean_g2)};
    result.n_eff_fraction = m.mean_g2 * m.mean_g2 / m.mean_g4;
    return result;
}

std::vector<double> sample_atom_couplings(const ModeGeometry& mode,
                                          const CloudDistribution& cloud, std::size_t n_atoms,
                                          std::uint64_t seed) {
    if (n_atoms < 1) {
        throw std::invalid_argument("sample_atom_couplings: need at least one atom");
    }
    const double g0_sq = mode.g0.rad() * mode.g0.rad();
    const double inv_w0_sq = 1.0 / (mode.w0 * mode.w0);
    std::vector<double> weights(n_atoms);
    RandomStream rng = RandomStream::derive(seed, 0);
    for (std::size_t i = 0; i < n_atoms; ++i) {
        const double y = cloud.sigma_y * rng.gaussian();
        const double z = cloud.z_center + cloud.sigma_z * rng.gaussian();
        weights[i] = 0.5 * g0_sq * std::exp(-2.0 * (y * y + z * z) * inv_w0_sq);
    }
    return weights;
}

namespace {

// Second moments of the two weight functions over the cloud, for mode
// offsets z = -d/2 and z = +d/2 about the cloud center.
struct WeightMoments {
    double e_u2;  // E[u^2]
    double e_v2;  // E[v^2]
    double e_uv;  // E[u v]
};

WeightMoments weight_moments(const ModeGeometry& mode, const CloudDistribution& cloud,
                             double separation) {
    const double a4 = 4.0 / (mode.w0 * mode.w0);
    const double y_factor = gaussian_overlap_moment(a4, 0.0, 0.0, cloud.sigma_y);
    const double zc = cloud.z_center;
    const double half = 0.5 * separation;
    const double e_u2 =
        y_factor * gaussian_overlap_moment(a4, zc - half, zc, cloud.sigma_z);
    const double e_v2 =
        y_factor * gaussian_overlap_moment(a4, zc + half, zc, cloud.sigma_z);
    // u*v combines to exp(-d^2/w0^2) times a Gaussian centered between the
    // two mode positions.
    const double cross =
        std::exp(-separation * separation / (mode.w0 * mode.w0)) *
        gaussian_overlap_moment(a4, zc, zc, cloud.sigma_z);
    const double e_uv = y_factor * cross;
    return {e_u2, e_v2, e_uv};
}

}  // namespace

CorrelationResult analytic_correlation_vs_separation(const ModeGeometry& mode,
                                                     const CloudDistribution& cloud,
                                                     double separation,
                                                     double detection_noise) {
    const WeightMoments m = weight_moments(mode, cloud, separation);
    // Readout noise is specified relative to the first reading's weighted
    // QPN; both readings carry the same absolute noise variance.
    const double noise_var = detection_noise * detection_noise * m.e_u2;
    const double v1 = m.e_u2 + noise_var;
    const double v2 = m.e_v2 + noise_var;
    CorrelationResult r;
    r.pearson_analytic = m.e_uv / std::sqrt(v1 * v2);
    r.qpn_change_ratio_analytic = 1.0 - 2.0 * m.e_uv / (v1 + v2);
    r.qpn_change_db_analytic = db_from_ratio_floored(r.qpn_change_ratio_analytic);
    r.pearson = r.pearson_analytic;
    r.qpn_change_ratio = r.qpn_change_ratio_analytic;
    r.qpn_change_db = r.qpn_change_db_analytic;
    return r;
}

CorrelationResult ensemble_correlation_vs_separation(
    const ModeGeometry& mode, const CloudDistribution& cloud, double separation,
    double detection_noise, std::size_t n_atoms, std::size_t n_trials, std::uint64_t seed,
    int threads, bool flip_spins) {
    if (!(separation >= 0.0)) {
        throw std::invalid_argument("ensemble_correlation_vs_separation: separation must be >= 0");
    }
    if (n_trials < 2) {
        throw std::invalid_argument("ensemble_correlation_vs_separation: need >= 2 trials");
    }
    if (n_atoms < 1) {
        throw std::invalid_argument("ensemble_correlation_vs_separation: need >= 1 atom");
    }

    const double inv_w0_sq = 1.0 / (mode.w0 * mode.w0);
    const double half = 0.5 * separation;
    // Absolute readout noise, matched to the analytic convention.
    const WeightMoments wm = weight_moments(mode, cloud, separation);
    const double sigma_read =
        detection_noise * std::sqrt(0.25 * static_cast<double>(n_atoms) * wm.e_u2);
    const double spin_sign = flip_spins ? -1.0 : 1.0;

    std::vector<double> m1(n_trials);
    std::vector<double> m2(n_trials);
    parallel_for(n_trials, threads, [&](std::size_t t) {
        RandomStream rng = RandomStream::derive(seed, t);
        double sum1 = 0.0;
        double sum2 = 0.0;
        for (std::size_t i = 0; i < n_atoms; ++i) {
            const double y = cloud.sigma_y * rng.gaussian();
            const double z = cloud.z_center + cloud.sigma_z * rng.gaussian();
            const double spin = spin_sign * (rng.coin() ? 0.5 : -0.5);
            const double y_part = std::exp(-2.0 * y * y * inv_w0_sq);
            const double dz1 = z - (cloud.z_center - half);
            const double dz2 = z - (cloud.z_center + half);
            sum1 += spin * y_part * std::exp(-2.0 * dz1 * dz1 * inv_w0_sq);
            sum2 += spin * y_part * std::exp(-2.0 * dz2 * dz2 * inv_w0_sq);
        }
        m1[t] = sum1 + sigma_read * rng.gaussian();
        m2[t] = sum2 + sigma_read * rng.gaussian();
    });

    // Fixed-order reduction.
    double mean1 = 0.0;
    double mean2 = 0.0;
    for (std::size_t t = 0; t < n_trials; ++t) {
        mean1 += m1[t];
        mean2 += m2[t];
    }
    const double n = static_cast<double>(n_trials);
    mean1 /= n;
    mean2 /= n;
    double var1 = 0.0;
    double var2 = 0.0;
    double cov = 0.0;
    double var_diff = 0.0;
    for (std::size_t t = 0; t < n_trials; ++t) {
        const double d1 = m1[t] - mean1;
        const double d2 = m2[t] - mean2;
        var1 += d1 * d1;
        var2 += d2 * d2;
        cov += d1 * d2;
        var_diff += (d1 - d2) * (d1 - d2);
    }
    var1 /= (n - 1.0);
    var2 /= (n - 1.0);
    cov /= (n - 1.0);
    var_diff /= (n - 1.0);

    CorrelationResult r = analytic_correlation_vs_separation(mode, cloud, separation,
                                                             detection_noise);
    if (!(var1 > 0.0) || !(var2 > 0.0)) {
        throw std::runtime_error("ensemble_correlation_vs_separation: degenerate readings");
    }
    r.pearson = cov / std::sqrt(var1 * var2);
    r.qpn_change_ratio = var_diff / (var1 + var2);
    r.qpn_change_db = db_from_ratio_floored(r.qpn_change_ratio);
    r.pearson_stat_err = (1.0 - r.pearson * r.pearson) / std::sqrt(n);
    // Conservative normal-theory scale for the variance-ratio statistic.
    r.ratio_stat_err = 2.0 * (1.0 + std::abs(r.pearson)) / std::sqrt(n);
    return r;
}

double transport_velocity(AngularFrequency delta_l, double lambda_lattice) {
    return delta_l.rad() * lambda_lattice / (4.0 * std::numbers::pi);
}

}  // namespace sqclock
