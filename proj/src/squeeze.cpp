#include "sqclock/squeeze.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace sqclock {

void SqueezeConfig::validate() const {
    if (photons_per_measurement < 0.0) {
        throw std::invalid_argument("SqueezeConfig.photons_per_measurement: must be >= 0");
    }
    if (!(quantum_efficiency > 0.0 && quantum_efficiency <= 1.0)) {
        throw std::invalid_argument("SqueezeConfig.quantum_efficiency: must be in (0,1]");
    }
    if (detection_noise_scale < 0.0) {
        throw std::invalid_argument("SqueezeConfig.detection_noise_scale: must be >= 0");
    }
    if (scatter_loss_coeff < 0.0) {
        throw std::invalid_argument("SqueezeConfig.scatter_loss_coeff: must be >= 0");
    }
    if (!(final_photon_ratio > 0.0)) {
        throw std::invalid_argument("SqueezeConfig.final_photon_ratio: must be > 0");
    }
}

ConditionalState ConditionalState::css(double n_atoms, double contrast) {
    ConditionalState s;
    s.n_atoms = n_atoms;
    s.mean_jz = 0.0;
    s.var_jz = 0.25 * n_atoms;
    s.var_antisqueeze = 0.25 * n_atoms;
    s.contrast = contrast;
    return s;
}

double detection_noise(const SqueezeConfig& config) {
    config.validate();
    if (config.photons_per_measurement <= 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return config.detection_noise_scale /
           std::sqrt(config.photons_per_measurement * config.quantum_efficiency);
}

double final_detection_noise(const SqueezeConfig& config) {
    SqueezeConfig final_cfg = config;
    final_cfg.photons_per_measurement *= config.final_photon_ratio;
    return detection_noise(final_cfg);
}

MeasurementOutcome qnd_measure(const ConditionalState& state, double true_jz,
                               const SqueezeConfig& config, RandomStream& rng) {
    const double sigma = detection_noise(config);
    MeasurementOutcome out;
    out.state = state;
    if (std::isinf(sigma)) {
        // No photons: nothing measured, nothing disturbed.
        out.outcome = std::numeric_limits<double>::quiet_NaN();
        return out;
    }
    out.outcome = true_jz + sigma * rng.gaussian();
    if (sigma == 0.0) {
        out.state.var_jz = 0.0;
        out.state.mean_jz = true_jz;
        out.state.var_antisqueeze = std::numeric_limits<double>::infinity();
    } else {
        const double var = state.var_jz;
        const double s2 = sigma * sigma;
        const double fused = (var > 0.0) ? var * s2 / (var + s2) : 0.0;
        out.state.var_jz = fused;
        out.state.mean_jz =
            (var > 0.0) ? fused * (state.mean_jz / var + out.outcome / s2) : state.mean_jz;
        // Backaction of the full probe light; the undetected fraction 1-Q
        // still disturbs the conjugate quadrature, and technical noise can
        // add on top of that.
        const double qpn = 0.25 * state.n_atoms;
        const double backaction = qpn * qpn / (config.quantum_efficiency * s2);
        out.state.var_antisqueeze =
            state.var_antisqueeze + ratio_from_db(config.excess_antisqueeze_db) * backaction;
    }
    out.state.contrast =
        state.contrast *
        std::exp(-config.scatter_loss_coeff * config.photons_per_measurement);
    return out;
}

NoiseReduction spin_noise_reduction(std::span<const std::pair<double, double>> records,
                                    double qpn_variance) {
    if (records.size() < 2) {
        throw std::invalid_argument("spin_noise_reduction: need at least 2 records");
    }
    if (!(qpn_variance > 0.0)) {
        throw std::invalid_argument("spin_noise_reduction: QPN variance must be > 0");
    }
    const double n = static_cast<double>(records.size());
    double mean_p = 0.0;
    double mean_f = 0.0;
    for (const auto& [p, f] : records) {
        mean_p += p;
        mean_f += f;
    }
    mean_p /= n;
    mean_f /= n;
    double var_p = 0.0;
    double cov = 0.0;
    for (const auto& [p, f] : records) {
        var_p += (p - mean_p) * (p - mean_p);
        cov += (p - mean_p) * (f - mean_f);
    }
    var_p /= (n - 1.0);
    cov /= (n - 1.0);
    if (!(var_p > 0.0)) {
        throw std::invalid_argument("spin_noise_reduction: zero pre-measurement variance");
    }
    NoiseReduction r;
    r.beta = cov / var_p;
    double diff_var = 0.0;
    for (const auto& [p, f] : records) {
        const double d = (f - mean_f) - r.beta * (p - mean_p);
        diff_var += d * d;
    }
    diff_var /= (n - 1.0);
    r.diff_variance = diff_var;
    r.r_db = db_from_ratio_floored(diff_var / qpn_variance);
    return r;
}

double inferred_intrinsic_squeezing(double r_observed_db, double final_detection_var,
                                    double qpn_var) {
    if (!(qpn_var > 0.0)) {
        throw std::invalid_argument("inferred_intrinsic_squeezing: QPN variance must be > 0");
    }
    const double observed_var = ratio_from_db(r_observed_db) * qpn_var;
    if (!(final_detection_var < observed_var)) {
        throw std::invalid_argument(
            "inferred_intrinsic_squeezing: detection variance exceeds observed variance");
    }
    return db_from_ratio_floored((observed_var - final_detection_var) / qpn_var);
}

double wineland_parameter(double r_ratio, double contrast_i, double contrast_f) {
    if (!(r_ratio > 0.0)) {
        throw std::domain_error("wineland_parameter: noise ratio must be > 0");
    }
    if (!(contrast_i > 0.0 && contrast_i <= 1.0)) {
        throw std::domain_error("wineland_parameter: contrast_i must be in (0,1]");
    }
    if (!(contrast_f > 0.0 && contrast_f <= 1.0)) {
        throw std::domain_error("wineland_parameter: contrast_f must be in (0,1]");
    }
    return r_ratio * contrast_i / (contrast_f * contrast_f);
}

std::vector<TomographyPoint> tomography_curve(const ConditionalState& state,
                                              std::span<const double> psi_list) {
    const double qpn = state.qpn_var();
    if (!(qpn > 0.0)) {
        throw std::invalid_argument("tomography_curve: state has no atoms");
    }
    const double unitary_anti = (state.var_jz > 0.0)
                                    ? qpn * qpn / state.var_jz
                                    : std::numeric_limits<double>::infinity();
    std::vector<TomographyPoint> curve;
    curve.reserve(psi_list.size());
    for (double psi : psi_list) {
        const double c = std::cos(psi);
        const double s = std::sin(psi);
        TomographyPoint pt;
        pt.psi = psi;
        pt.noise_rel_qpn = (state.var_jz * c * c + state.var_antisqueeze * s * s) / qpn;
        pt.unitary_reference = (state.var_jz * c * c + unitary_anti * s * s) / qpn;
        curve.push_back(pt);
    }
    return curve;
}

double expected_noise_reduction_ratio(double v, double sp2, double sf2) {
    return (sf2 + v * sp2 / (v + sp2)) / v;
}

std::vector<SweepRow> sweep_probe_strength(std::span<const double> photon_list,
                                           const SqueezeConfig& base, double contrast_i,
                                           double n_atoms, std::size_t n_trials,
                                           std::uint64_t seed, int threads) {
    if (photon_list.empty()) {
        throw std::invalid_argument("sweep_probe_strength: empty photon list");
    }
    if (n_trials < 2) {
        throw std::invalid_argument("sweep_probe_strength: need >= 2 trials");
    }
    base.validate();
    const double qpn_var = 0.25 * n_atoms;
    const double qpn_std = std::sqrt(qpn_var);

    std::vector<SweepRow> rows(photon_list.size());
    parallel_for(photon_list.size(), threads, [&](std::size_t idx) {
        SqueezeConfig cfg = base;
        cfg.photons_per_measurement = photon_list[idx];
        const double sigma_p = detection_noise(cfg);
        const double sigma_f = final_detection_noise(cfg);

        std::vector<std::pair<double, double>> records(n_trials);
        for (std::size_t t = 0; t < n_trials; ++t) {
            RandomStream rng = RandomStream::derive(seed, idx * n_trials + t);
            const double jz = qpn_std * rng.gaussian();
            const double pre = std::isinf(sigma_p) ? rng.gaussian() : jz + sigma_p * rng.gaussian();
            const double fin = jz + (std::isinf(sigma_f) ? 0.0 : sigma_f * rng.gaussian());
            records[t] = {pre, fin};
        }
        const NoiseReduction nr = spin_noise_reduction(records, qpn_var);

        SweepRow row;
        row.n_ph = photon_list[idx];
        row.r_db = nr.r_db;
        const double sf2 = std::isinf(sigma_f) ? 0.0 : sigma_f * sigma_f;
        row.r_inferred_db = (sf2 < nr.diff_variance)
                                ? inferred_intrinsic_squeezing(nr.r_db, sf2, qpn_var)
                                : db_floor;
        row.contrast_i = contrast_i;
        row.contrast_f =
            contrast_i * std::exp(-cfg.scatter_loss_coeff * cfg.photons_per_measurement);
        row.contrast_penalty = row.contrast_i / (row.contrast_f * row.contrast_f);
        row.xi_db = db_from_ratio_floored(
            wineland_parameter(ratio_from_db(row.r_db), row.contrast_i, row.contrast_f));
        row.xi_inferred_db = db_from_ratio_floored(wineland_parameter(
            ratio_from_db(row.r_inferred_db), row.contrast_i, row.contrast_f));
        rows[idx] = row;
    });
    return rows;
}

double calibrate_noise_scale(double target_r_db, double n_ph, double quantum_efficiency,
                             double n_atoms, double final_photon_ratio) {
    if (!(target_r_db < 0.0)) {
        throw std::invalid_argument("calibrate_noise_scale: target must be below 0 dB");
    }
    if (!(n_ph > 0.0) || !(quantum_efficiency > 0.0) || !(n_atoms > 0.0) ||
        !(final_photon_ratio > 0.0)) {
        throw std::invalid_argument("calibrate_noise_scale: invalid operating point");
    }
    const double rho = ratio_from_db(target_r_db);
    const double r = final_photon_ratio;
    // Observed ratio x/r + x/(1+x) = rho, where x = sigma_p^2 / qpn_var.
    const double b = 1.0 + r - rho * r;
    const double x = 0.5 * (-b + std::sqrt(b * b + 4.0 * rho * r));
    if (!(x > 0.0)) {
        throw std::invalid_argument("calibrate_noise_scale: target not reachable");
    }
    const double qpn_var = 0.25 * n_atoms;
    return std::sqrt(x * qpn_var * n_ph * quantum_efficiency);
}

}  // namespace sqclock
