#include "sqclock/clock.hpp"

#include <cmath>
#include <stdexcept>

namespace sqclock {

void SequenceConfig::validate() const {
    if (!(ramsey_time > 0.0)) {
        throw std::invalid_argument("SequenceConfig.ramsey_time: must be > 0");
    }
    if (!(cycle_time >= ramsey_time)) {
        throw std::invalid_argument("SequenceConfig.cycle_time: must be >= ramsey_time");
    }
    if (n_shots < 2) {
        throw std::invalid_argument("SequenceConfig.n_shots: must be >= 2");
    }
    if (laser_noise_std < 0.0) {
        throw std::invalid_argument("SequenceConfig.laser_noise_std: must be >= 0");
    }
    if (separation < 0.0) {
        throw std::invalid_argument("SequenceConfig.separation: must be >= 0");
    }
    if (asymmetry <= -1.0) {
        throw std::invalid_argument("SequenceConfig.asymmetry: must be > -1");
    }
    ensemble_a.validate();
    ensemble_b.validate();
    squeeze.validate();
    if (!(ensemble_a.n_eff > 0.0) || !(ensemble_b.n_eff > 0.0)) {
        throw std::invalid_argument("SequenceConfig: both ensembles need atoms");
    }
}

double SequenceConfig::readout_contrast() const {
    return mode == ComparisonMode::sss_sss ? ensemble_a.contrast_f : ensemble_a.contrast_i;
}

std::pair<double, double> css_contrast_pair(const SequenceConfig& config) {
    return {config.ensemble_a.contrast_i, config.ensemble_a.contrast_i};
}

std::pair<double, double> sss_contrast_pair(const SequenceConfig& config) {
    return {config.ensemble_a.contrast_i, config.ensemble_a.contrast_f};
}

namespace {

struct ShotScales {
    double sigma_pre_dn;   // pre-measurement detection noise, dN units
    double sigma_fin_dn;   // final detection noise, dN units
    double slope_a;        // phase-to-dN slope of ensemble A
    double slope_b;        // of ensemble B, including any response mismatch
    bool probe_on;
};

ShotScales shot_scales(const SequenceConfig& config) {
    ShotScales s{};
    s.probe_on = config.mode == ComparisonMode::sss_sss;
    // Detection noise is quoted per J_z; population differences carry twice
    // the J_z value.
    const double sigma_p = detection_noise(config.squeeze);
    const double sigma_f = final_detection_noise(config.squeeze);
    s.sigma_pre_dn = std::isinf(sigma_p) ? 0.0 : 2.0 * sigma_p;
    s.sigma_fin_dn = std::isinf(sigma_f) ? 0.0 : 2.0 * sigma_f;
    const double contrast = config.readout_contrast();
    s.slope_a = contrast * config.ensemble_a.n_eff;
    s.slope_b = contrast * config.ensemble_b.n_eff *
                (s.probe_on ? (1.0 + config.asymmetry) : 1.0);
    return s;
}

}  // namespace

std::vector<SpinRecord> run_sequence(const SequenceConfig& config, std::uint64_t seed) {
    config.validate();
    const ShotScales sc = shot_scales(config);
    const double qpn_dn_a = std::sqrt(config.ensemble_a.n_eff);
    const double qpn_dn_b = std::sqrt(config.ensemble_b.n_eff);

    std::vector<SpinRecord> records(config.n_shots);
    for (std::size_t k = 0; k < config.n_shots; ++k) {
        RandomStream rng = RandomStream::derive(seed, k);
        // Common-mode laser phase accumulated over the Ramsey window.
        const double phi_laser = config.laser_noise_std * rng.gaussian();

        SpinRecord rec;
        rec.shot_index = k;

        // Ensemble A. The projection noise drawn at preparation persists
        // through the sequence (the pre-measurement is non-demolition), so
        // the same realization appears in the final window; the probe-off
        // sequence leaves it unrevealed in the pre record.
        const double dn_true_a = qpn_dn_a * rng.gaussian();
        const double pre_noise_a = sc.sigma_pre_dn * rng.gaussian();
        rec.dn_a_pre = (sc.probe_on ? dn_true_a : 0.0) + pre_noise_a;
        rec.dn_a_final = dn_true_a + sc.slope_a * std::sin(phi_laser) +
                         sc.sigma_fin_dn * rng.gaussian();

        // Ensemble B, identical sequence.
        const double dn_true_b = qpn_dn_b * rng.gaussian();
        const double pre_noise_b = sc.sigma_pre_dn * rng.gaussian();
        rec.dn_b_pre = (sc.probe_on ? dn_true_b : 0.0) + pre_noise_b;
        rec.dn_b_final = dn_true_b + sc.slope_b * std::sin(phi_laser) +
                         sc.sigma_fin_dn * rng.gaussian();

        records[k] = rec;
    }
    return records;
}

std::vector<std::pair<double, double>> ramsey_fringe_scan(const SequenceConfig& config,
                                                          std::span<const double> phase_list,
                                                          std::uint64_t seed) {
    config.validate();
    if (phase_list.size() < 5) {
        throw std::invalid_argument("ramsey_fringe_scan: need at least 5 phases");
    }
    const ShotScales sc = shot_scales(config);
    const double qpn_dn_a = std::sqrt(config.ensemble_a.n_eff);
    const double qpn_dn_b = std::sqrt(config.ensemble_b.n_eff);

    std::vector<std::pair<double, double>> fringe;
    fringe.reserve(phase_list.size());
    for (std::size_t p = 0; p < phase_list.size(); ++p) {
        const double phase = phase_list[p];
        double sum = 0.0;
        for (std::size_t k = 0; k < config.n_shots; ++k) {
            RandomStream rng = RandomStream::derive(seed, p * config.n_shots + k);
            const double phi = phase + config.laser_noise_std * rng.gaussian();
            double dn = qpn_dn_a * rng.gaussian() + sc.slope_a * std::sin(phi) +
                        sc.sigma_fin_dn * rng.gaussian();
            dn += qpn_dn_b * rng.gaussian() + sc.slope_b * std::sin(phi) +
                  sc.sigma_fin_dn * rng.gaussian();
            sum += dn;
        }
        fringe.emplace_back(phase, sum / static_cast<double>(config.n_shots));
    }
    return fringe;
}

double fit_fringe_amplitude(std::span<const std::pair<double, double>> fringe) {
    if (fringe.size() < 2) {
        throw std::invalid_argument("fit_fringe_amplitude: need at least 2 points");
    }
    // Linear least squares on the sin/cos basis.
    double ss = 0.0;
    double cc = 0.0;
    double sc = 0.0;
    double sy = 0.0;
    double cy = 0.0;
    for (const auto& [phase, dn] : fringe) {
        const double s = std::sin(phase);
        const double c = std::cos(phase);
        ss += s * s;
        cc += c * c;
        sc += s * c;
        sy += s * dn;
        cy += c * dn;
    }
    const double det = ss * cc - sc * sc;
    if (std::abs(det) < 1e-12 * (ss * cc + 1e-300)) {
        throw std::invalid_argument("fit_fringe_amplitude: degenerate phase list");
    }
    const double a = (cc * sy - sc * cy) / det;
    const double b = (ss * cy - sc * sy) / det;
    return std::sqrt(a * a + b * b);
}

}  // namespace sqclock
