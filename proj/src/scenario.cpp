#include "sqclock/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "sqclock/cavity.hpp"
#include "sqclock/clock.hpp"
#include "sqclock/csv.hpp"
#include "sqclock/geometry.hpp"
#include "sqclock/squeeze.hpp"
#include "sqclock/stats.hpp"
#include "sqclock/units.hpp"

namespace sqclock {

namespace fs = std::filesystem;
using nlohmann::json;

std::uint64_t content_hash(const std::string& text) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ScenarioError("scenario: cannot open " + path);
    }
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ScenarioError("scenario: " + path + " is not valid JSON: " + e.what());
    }
    if (!doc.is_object()) {
        throw ScenarioError("scenario: top level must be an object");
    }
    Scenario s;
    s.name = doc.value("name", std::string{});
    s.command = doc.value("command", std::string{});
    if (!doc.contains("seed") || !doc["seed"].is_number()) {
        throw ScenarioError("scenario.seed: mandatory 64-bit integer seed is missing");
    }
    s.seed = doc["seed"].get<std::uint64_t>();
    s.parameters = doc.value("parameters", json::object());
    s.source_dir = fs::path(path).parent_path().string();
    return s;
}

namespace {

double get_num(const json& j, const std::string& key, double fallback) {
    return (j.contains(key) && j[key].is_number()) ? j[key].get<double>() : fallback;
}

void check_num(const json& block, const std::string& prefix, const std::string& key,
               std::vector<Diagnostic>& d, bool required, double min_v,
               bool min_inclusive) {
    const std::string path = prefix + "." + key;
    if (!block.contains(key)) {
        if (required) {
            d.push_back({path, "required numeric field is missing"});
        }
        return;
    }
    if (!block[key].is_number()) {
        d.push_back({path, "must be a number"});
        return;
    }
    const double v = block[key].get<double>();
    if (min_inclusive ? !(v >= min_v) : !(v > min_v)) {
        d.push_back({path, std::string("must be ") + (min_inclusive ? ">= " : "> ") +
                               CsvWriter::format(min_v)});
    }
}

// ---------------------------------------------------------------------------
// Validation

void validate_calibrate_coupling(const json& p, std::vector<Diagnostic>& d) {
    check_num(p, "parameters", "gamma_hz", d, true, 0.0, false);
    check_num(p, "parameters", "lambda_probe_nm", d, true, 0.0, false);
    check_num(p, "parameters", "w0_um", d, true, 0.0, false);
    check_num(p, "parameters", "cavity_length_cm", d, true, 0.0, false);
    check_num(p, "parameters", "sigma_z_um", d, true, 0.0, true);
    check_num(p, "parameters", "z_center_um", d, false, -1e12, true);
    if (p.contains("sigma_y_um")) {
        check_num(p, "parameters", "sigma_y_um", d, true, 0.0, true);
    } else {
        check_num(p, "parameters", "radial_temperature_nk", d, true, 0.0, false);
        check_num(p, "parameters", "radial_trap_frequency_hz", d, true, 0.0, false);
    }
    check_num(p, "parameters", "mc_samples", d, false, 0.0, true);
}

void validate_qpn_fit(const json& p, std::vector<Diagnostic>& d) {
    check_num(p, "parameters", "delta_c_hz", d, true, 0.0, false);
    if (!p.contains("input_csv") && !p.contains("synthesize")) {
        d.push_back({"parameters", "qpn-fit needs either input_csv or synthesize"});
    }
    if (p.contains("synthesize")) {
        const json& s = p["synthesize"];
        if (!s.is_object()) {
            d.push_back({"parameters.synthesize", "must be an object"});
            return;
        }
        check_num(s, "parameters.synthesize", "g_hz", d, true, 0.0, false);
        check_num(s, "parameters.synthesize", "offset_hz", d, false, 0.0, true);
        check_num(s, "parameters.synthesize", "n_points", d, false, 3.0, true);
        check_num(s, "parameters.synthesize", "omega_sum_max_hz", d, true, 0.0, false);
        check_num(s, "parameters.synthesize", "scatter_fraction", d, false, 0.0, true);
    }
}

// Shared squeeze-block checks; photons_required is off for the sweep, whose
// photon axis comes from the grid.
void validate_squeeze_block(const json& sq, const std::string& prefix,
                            std::vector<Diagnostic>& d, bool photons_required) {
    check_num(sq, prefix, "photons_per_measurement", d, photons_required, 0.0, false);
    check_num(sq, prefix, "quantum_efficiency", d, true, 0.0, false);
    if (get_num(sq, "quantum_efficiency", 0.5) > 1.0) {
        d.push_back({prefix + ".quantum_efficiency", "must be <= 1"});
    }
    check_num(sq, prefix, "scatter_loss_coeff", d, false, 0.0, true);
    check_num(sq, prefix, "final_photon_ratio", d, false, 0.0, false);
    const bool has_scale = sq.contains("detection_noise_scale");
    const bool has_cal = sq.contains("calibration");
    if (!has_scale && !has_cal) {
        d.push_back({prefix, "needs detection_noise_scale or calibration"});
    }
    if (has_scale) {
        check_num(sq, prefix, "detection_noise_scale", d, true, 0.0, true);
    }
    if (has_cal) {
        const json& cal = sq["calibration"];
        if (!cal.is_object()) {
            d.push_back({prefix + ".calibration", "must be an object"});
        } else {
            if (!(get_num(cal, "target_r_db", 0.0) < 0.0)) {
                d.push_back({prefix + ".calibration.target_r_db", "must be < 0 dB"});
            }
            check_num(cal, prefix + ".calibration", "n_ph", d, true, 0.0, false);
            check_num(cal, prefix + ".calibration", "n_atoms", d, false, 0.0, false);
            check_num(cal, prefix + ".calibration", "final_photon_ratio", d, false, 0.0,
                      false);
        }
    }
}

void validate_squeeze_sweep(const json& p, std::vector<Diagnostic>& d) {
    check_num(p, "parameters", "n_atoms", d, true, 0.0, false);
    check_num(p, "parameters", "contrast_i", d, true, 0.0, false);
    if (get_num(p, "contrast_i", 0.5) > 1.0) {
        d.push_back({"parameters.contrast_i", "must be <= 1"});
    }
    check_num(p, "parameters", "n_trials", d, true, 1.0, false);
    if (!p.contains("photon_numbers") && !p.contains("photon_grid")) {
        d.push_back({"parameters", "squeeze-sweep needs photon_numbers or photon_grid"});
    }
    if (p.contains("photon_numbers") && !p["photon_numbers"].is_array()) {
        d.push_back({"parameters.photon_numbers", "must be an array"});
    }
    if (p.contains("photon_grid")) {
        const json& grid = p["photon_grid"];
        if (!(get_num(grid, "min", 0.0) > 0.0) || !(get_num(grid, "max", 0.0) > 0.0) ||
            !(get_num(grid, "n_points", 0.0) >= 2.0)) {
            d.push_back({"parameters.photon_grid", "needs min > 0, max > 0, n_points >= 2"});
        }
    }
    validate_squeeze_block(p, "parameters", d, /*photons_required=*/false);
}

void validate_correlation_sweep(const json& p, std::vector<Diagnostic>& d) {
    check_num(p, "parameters", "w0_um", d, true, 0.0, false);
    check_num(p, "parameters", "g0_hz", d, true, 0.0, false);
    check_num(p, "parameters", "sigma_y_um", d, true, 0.0, true);
    check_num(p, "parameters", "sigma_z_um", d, true, 0.0, true);
    check_num(p, "parameters", "detection_noise", d, false, 0.0, true);
    check_num(p, "parameters", "n_atoms", d, true, 0.0, false);
    check_num(p, "parameters", "n_trials", d, true, 1.0, false);
    if (!p.contains("separations_um")) {
        d.push_back({"parameters.separations_um", "required list of separations"});
    } else if (!p["separations_um"].is_array()) {
        d.push_back({"parameters.separations_um", "must be an array"});
    } else {
        for (const auto& v : p["separations_um"]) {
            if (!v.is_number() || v.get<double>() < 0.0) {
                d.push_back({"parameters.separations_um", "entries must be numbers >= 0"});
                break;
            }
        }
    }
}

void validate_compare_clocks(const json& p, std::vector<Diagnostic>& d) {
    check_num(p, "parameters", "n_shots", d, true, 1.0, false);
    check_num(p, "parameters", "n_eff_a", d, true, 0.0, false);
    check_num(p, "parameters", "n_eff_b", d, true, 0.0, false);
    check_num(p, "parameters", "contrast_i", d, true, 0.0, false);
    check_num(p, "parameters", "contrast_f", d, true, 0.0, false);
    const double ci = get_num(p, "contrast_i", 1.0);
    const double cf = get_num(p, "contrast_f", 0.0);
    if (ci > 1.0) {
        d.push_back({"parameters.contrast_i", "must be <= 1"});
    }
    if (cf > ci) {
        d.push_back({"parameters.contrast_f", "must not exceed contrast_i"});
    }
    check_num(p, "parameters", "ramsey_time_s", d, true, 0.0, false);
    check_num(p, "parameters", "cycle_time_s", d, true, 0.0, false);
    check_num(p, "parameters", "transition_frequency_hz", d, false, 0.0, false);
    check_num(p, "parameters", "laser_noise_std_rad", d, false, 0.0, true);
    check_num(p, "parameters", "asymmetry", d, false, -1.0, false);
    check_num(p, "parameters", "separation_um", d, false, 0.0, true);
    if (!p.contains("squeeze") || !p["squeeze"].is_object()) {
        d.push_back({"parameters.squeeze", "required object"});
    } else {
        validate_squeeze_block(p["squeeze"], "parameters.squeeze", d,
                               /*photons_required=*/true);
    }
    if (p.contains("adev_tau_multiples") && !p["adev_tau_multiples"].is_array()) {
        d.push_back({"parameters.adev_tau_multiples", "must be an array"});
    }
}

void validate_adev(const json& p, std::vector<Diagnostic>& d) {
    check_num(p, "parameters", "ramsey_time_s", d, true, 0.0, false);
    check_num(p, "parameters", "cycle_time_s", d, true, 0.0, false);
    check_num(p, "parameters", "transition_frequency_hz", d, false, 0.0, false);
    if (!p.contains("input_csv") && !p.contains("synthesize")) {
        d.push_back({"parameters", "adev needs either input_csv or synthesize"});
    }
    if (p.contains("synthesize")) {
        const json& s = p["synthesize"];
        if (!(get_num(s, "n_shots", 0.0) >= 4.0) ||
            !(get_num(s, "sigma_phi_rad", -1.0) >= 0.0)) {
            d.push_back(
                {"parameters.synthesize", "needs n_shots >= 4 and sigma_phi_rad >= 0"});
        }
    }
    if (!p.contains("tau_multiples") || !p["tau_multiples"].is_array()) {
        d.push_back({"parameters.tau_multiples", "required array of cycle multiples"});
    }
}

}  // namespace

std::vector<Diagnostic> validate_scenario(const Scenario& s) {
    std::vector<Diagnostic> d;
    if (s.command.empty()) {
        d.push_back({"command", "required"});
        return d;
    }
    const auto& cmds = known_commands();
    if (std::find(cmds.begin(), cmds.end(), s.command) == cmds.end()) {
        d.push_back({"command", "unknown command '" + s.command + "'"});
        return d;
    }
    if (!s.parameters.is_object()) {
        d.push_back({"parameters", "must be an object"});
        return d;
    }
    if (s.command == "calibrate-coupling") {
        validate_calibrate_coupling(s.parameters, d);
    } else if (s.command == "qpn-fit") {
        validate_qpn_fit(s.parameters, d);
    } else if (s.command == "squeeze-sweep") {
        validate_squeeze_sweep(s.parameters, d);
    } else if (s.command == "correlation-sweep") {
        validate_correlation_sweep(s.parameters, d);
    } else if (s.command == "compare-clocks") {
        validate_compare_clocks(s.parameters, d);
    } else if (s.command == "adev") {
        validate_adev(s.parameters, d);
    }
    return d;
}

// ---------------------------------------------------------------------------
// Execution

namespace {

SqueezeConfig squeeze_from_json(const json& sq, double default_n_atoms) {
    SqueezeConfig cfg;
    cfg.photons_per_measurement = get_num(sq, "photons_per_measurement", 0.0);
    cfg.quantum_efficiency = get_num(sq, "quantum_efficiency", 1.0);
    cfg.scatter_loss_coeff = get_num(sq, "scatter_loss_coeff", 0.0);
    cfg.excess_antisqueeze_db = get_num(sq, "excess_antisqueeze_db", 0.0);
    cfg.final_photon_ratio = get_num(sq, "final_photon_ratio", 2.3);
    if (sq.contains("detection_noise_scale")) {
        cfg.detection_noise_scale = sq["detection_noise_scale"].get<double>();
    } else {
        const json& cal = sq["calibration"];
        cfg.detection_noise_scale = calibrate_noise_scale(
            cal["target_r_db"].get<double>(), cal["n_ph"].get<double>(),
            cfg.quantum_efficiency, get_num(cal, "n_atoms", default_n_atoms),
            get_num(cal, "final_photon_ratio", cfg.final_photon_ratio));
    }
    return cfg;
}

void write_json(const fs::path& path, const json& j, RunResult& result) {
    std::ofstream out(path, std::ios::binary);
    out << j.dump(2) << '\n';
    result.files_written.push_back(path.string());
}

std::string resolve_input(const Scenario& s, const std::string& name) {
    const fs::path p(name);
    if (p.is_absolute() || s.source_dir.empty()) {
        return name;
    }
    return (fs::path(s.source_dir) / p).string();
}

// --- calibrate-coupling ----------------------------------------------------

json run_calibrate_coupling(const Scenario& s, const fs::path& /*out*/, int /*threads*/,
                            RunResult& /*result*/) {
    const json& p = s.parameters;
    const AngularFrequency gamma = AngularFrequency::from_hz(p["gamma_hz"].get<double>());
    const double lambda = p["lambda_probe_nm"].get<double>() * 1e-9;
    const double w0 = p["w0_um"].get<double>() * 1e-6;
    const double length = p["cavity_length_cm"].get<double>() * 1e-2;
    const AngularFrequency g0 = peak_coupling(gamma, lambda, w0, length);

    double sigma_y;
    if (p.contains("sigma_y_um")) {
        sigma_y = p["sigma_y_um"].get<double>() * 1e-6;
    } else {
        sigma_y = sigma_from_radial_temperature(
            p["radial_temperature_nk"].get<double>() * 1e-9,
            AngularFrequency::from_hz(p["radial_trap_frequency_hz"].get<double>()),
            constants::mass_sr87);
    }
    const ModeGeometry mode{w0, g0};
    const CloudDistribution cloud{sigma_y, p["sigma_z_um"].get<double>() * 1e-6,
                                  get_num(p, "z_center_um", 0.0) * 1e-6};
    const EffectiveCoupling eff = effective_coupling(mode, cloud, OverlapMethod::quadrature);

    json summary;
    summary["g0_hz"] = g0.hz();
    summary["sigma_y_um"] = sigma_y * 1e6;
    summary["g_eff_hz"] = eff.g_eff.hz();
    summary["n_eff_fraction"] = eff.n_eff_fraction;
    const auto mc_samples = static_cast<std::size_t>(get_num(p, "mc_samples", 0.0));
    if (mc_samples > 0) {
        const auto weights = sample_atom_couplings(mode, cloud, mc_samples, s.seed);
        double m2 = 0.0;
        double m4 = 0.0;
        for (double w : weights) {
            m2 += w;
            m4 += w * w;
        }
        m2 /= static_cast<double>(weights.size());
        m4 /= static_cast<double>(weights.size());
        summary["mc_g_eff_hz"] = AngularFrequency{std::sqrt(m4 / m2)}.hz();
        summary["mc_n_eff_fraction"] = m2 * m2 / m4;
    }
    return summary;
}

// --- qpn-fit ----------------------------------------------------------------

json run_qpn_fit(const Scenario& s, const fs::path& out, int /*threads*/, RunResult& result) {
    const json& p = s.parameters;
    CavityParams params;
    params.delta_c = AngularFrequency::from_hz(p["delta_c_hz"].get<double>());
    params.g_eff = AngularFrequency::from_hz(1.0);  // not used by the fit

    std::vector<QpnFitPoint> data;
    if (p.contains("input_csv")) {
        const CsvTable table = read_csv(resolve_input(s, p["input_csv"].get<std::string>()));
        const auto omega = table.column("omega_sum_hz");
        const auto std_hz = table.column("std_hz");
        for (std::size_t i = 0; i < omega.size(); ++i) {
            data.push_back({AngularFrequency::from_hz(omega[i]),
                            AngularFrequency::from_hz(std_hz[i]), 1.0});
        }
    } else {
        const json& syn = p["synthesize"];
        const double g_hz = syn["g_hz"].get<double>();
        const double offset_hz = get_num(syn, "offset_hz", 0.0);
        const auto n_points = static_cast<std::size_t>(get_num(syn, "n_points", 12.0));
        const double max_hz = syn["omega_sum_max_hz"].get<double>();
        const double scatter = get_num(syn, "scatter_fraction", 0.05);
        const double slope = get_num(syn, "rotation_noise_slope", 0.0);
        CavityParams gen = params;
        gen.g_eff = AngularFrequency::from_hz(g_hz);
        RandomStream rng = RandomStream::derive(s.seed, 0);
        CsvWriter dataset((out / "dataset.csv").string(), {"omega_sum_hz", "std_hz"});
        for (std::size_t i = 0; i < n_points; ++i) {
            const double f_hz =
                max_hz * static_cast<double>(i + 1) / static_cast<double>(n_points);
            const AngularFrequency omega_sum = AngularFrequency::from_hz(f_hz);
            const double qpn = qpn_shift_noise(omega_sum, gen).rad();
            const double offset = offset_hz * two_pi;
            const double lin = slope * omega_sum.rad();
            double model = std::sqrt(qpn * qpn + offset * offset + lin * lin);
            model *= 1.0 + scatter * rng.gaussian();
            data.push_back({omega_sum, AngularFrequency{model}, 1.0});
            dataset.row({f_hz, model / two_pi});
        }
        result.files_written.push_back((out / "dataset.csv").string());
    }

    const bool with_slope = p.value("include_rotation_noise", false);
    const QpnFitResult fit = fit_coupling(data, params, with_slope);

    CsvWriter curve((out / "fit_curve.csv").string(), {"omega_sum_hz", "model_std_hz"});
    CavityParams fitted = params;
    fitted.g_eff = fit.g_fit;
    for (const auto& pt : data) {
        const double qpn = qpn_shift_noise(pt.omega_sum, fitted).rad();
        const double off = fit.noise_offset.rad();
        const double lin = fit.rotation_noise_slope * pt.omega_sum.rad();
        curve.row({pt.omega_sum.hz(),
                   std::sqrt(qpn * qpn + off * off + lin * lin) / two_pi});
    }
    result.files_written.push_back((out / "fit_curve.csv").string());

    json summary;
    summary["g_fit_hz"] = fit.g_fit.hz();
    summary["g_err_hz"] = fit.g_err_rad / two_pi;
    summary["noise_offset_hz"] = fit.noise_offset.hz();
    summary["offset_err_hz"] = fit.offset_err_rad / two_pi;
    summary["rotation_noise_slope"] = fit.rotation_noise_slope;
    summary["rotation_noise_slope_err"] = fit.slope_err;
    summary["residual_rms_hz"] = fit.residual_rms.hz();
    summary["iterations"] = fit.iterations;
    return summary;
}

// --- squeeze-sweep ----------------------------------------------------------

json run_squeeze_sweep(const Scenario& s, const fs::path& out, int threads,
                       RunResult& result) {
    const json& p = s.parameters;
    const double n_atoms = p["n_atoms"].get<double>();
    SqueezeConfig cfg = squeeze_from_json(p, n_atoms);
    const double contrast_i = p["contrast_i"].get<double>();
    const auto n_trials = static_cast<std::size_t>(p["n_trials"].get<double>());

    std::vector<double> photons;
    if (p.contains("photon_numbers")) {
        for (const auto& v : p["photon_numbers"]) {
            photons.push_back(v.get<double>());
        }
    } else {
        const json& grid = p["photon_grid"];
        const double lo = std::log(grid["min"].get<double>());
        const double hi = std::log(grid["max"].get<double>());
        const auto n = static_cast<std::size_t>(grid["n_points"].get<double>());
        for (std::size_t i = 0; i < n; ++i) {
            photons.push_back(
                std::exp(lo + (hi - lo) * static_cast<double>(i) /
                                  static_cast<double>(n - 1)));
        }
    }

    const auto rows = sweep_probe_strength(photons, cfg, contrast_i, n_atoms, n_trials,
                                           s.seed, threads);

    CsvWriter csv((out / "sweep.csv").string(),
                  {"n_ph", "R_db", "R_inferred_db", "contrast_i", "contrast_f", "xi_db",
                   "xi_inferred_db"});
    const SweepRow* best = &rows.front();
    for (const auto& r : rows) {
        csv.row({r.n_ph, r.r_db, r.r_inferred_db, r.contrast_i, r.contrast_f, r.xi_db,
                 r.xi_inferred_db});
        if (r.xi_db < best->xi_db) {
            best = &r;
        }
    }
    result.files_written.push_back((out / "sweep.csv").string());

    json summary;
    summary["detection_noise_scale"] = cfg.detection_noise_scale;
    summary["optimal_n_ph"] = best->n_ph;
    summary["min_xi_db"] = best->xi_db;
    if (p.contains("calibration") && p["calibration"].is_object()) {
        // Re-simulate exactly at the calibration point for the headline R.
        const double cal_nph = p["calibration"]["n_ph"].get<double>();
        const double grid_point[] = {cal_nph};
        const auto check = sweep_probe_strength(grid_point, cfg, contrast_i, n_atoms,
                                                n_trials, s.seed + 1, threads);
        summary["r_at_calibration_db"] = check.front().r_db;
        summary["xi_at_calibration_db"] = check.front().xi_db;
    }
    return summary;
}

// --- correlation-sweep -------------------------------------------------------

json run_correlation_sweep(const Scenario& s, const fs::path& out, int threads,
                           RunResult& result) {
    const json& p = s.parameters;
    const ModeGeometry mode{p["w0_um"].get<double>() * 1e-6,
                            AngularFrequency::from_hz(p["g0_hz"].get<double>())};
    const CloudDistribution cloud{p["sigma_y_um"].get<double>() * 1e-6,
                                  p["sigma_z_um"].get<double>() * 1e-6,
                                  get_num(p, "z_center_um", 0.0) * 1e-6};
    const double detection_noise = get_num(p, "detection_noise", 0.0);
    const auto n_atoms = static_cast<std::size_t>(p["n_atoms"].get<double>());
    const auto n_trials = static_cast<std::size_t>(p["n_trials"].get<double>());

    CsvWriter csv((out / "correlation.csv").string(),
                  {"separation_um", "pearson", "qpn_change_db", "analytic_qpn_change_db"});
    json points = json::array();
    std::uint64_t stream_base = 0;
    for (const auto& v : p["separations_um"]) {
        const double sep = v.get<double>() * 1e-6;
        const CorrelationResult r = ensemble_correlation_vs_separation(
            mode, cloud, sep, detection_noise, n_atoms, n_trials,
            s.seed + stream_base, threads);
        ++stream_base;
        csv.row({sep * 1e6, r.pearson, r.qpn_change_db, r.qpn_change_db_analytic});
        json pt;
        pt["separation_um"] = sep * 1e6;
        pt["pearson"] = r.pearson;
        pt["pearson_analytic"] = r.pearson_analytic;
        pt["qpn_change_db"] = r.qpn_change_db;
        pt["analytic_qpn_change_db"] = r.qpn_change_db_analytic;
        points.push_back(pt);
    }
    result.files_written.push_back((out / "correlation.csv").string());

    json summary;
    summary["n_points"] = points.size();
    summary["points"] = points;
    return summary;
}

// --- compare-clocks -----------------------------------------------------------

SequenceConfig sequence_from_json(const json& p, ComparisonMode mode) {
    SequenceConfig cfg;
    cfg.mode = mode;
    cfg.ramsey_time = p["ramsey_time_s"].get<double>();
    cfg.cycle_time = p["cycle_time_s"].get<double>();
    cfg.n_shots = static_cast<std::size_t>(p["n_shots"].get<double>());
    cfg.laser_noise_std = get_num(p, "laser_noise_std_rad", 0.0);
    cfg.asymmetry = get_num(p, "asymmetry", 0.0);
    cfg.separation = get_num(p, "separation_um", 0.0) * 1e-6;

    const double ci = p["contrast_i"].get<double>();
    const double cf = p["contrast_f"].get<double>();
    EnsembleSpec ens;
    ens.n_eff = p["n_eff_a"].get<double>();
    ens.n_total = get_num(p, "n_total_a", ens.n_eff);
    ens.contrast_i = ci;
    ens.contrast_f = cf;
    cfg.ensemble_a = ens;
    ens.n_eff = p["n_eff_b"].get<double>();
    ens.n_total = get_num(p, "n_total_b", ens.n_eff);
    cfg.ensemble_b = ens;

    cfg.squeeze = squeeze_from_json(p["squeeze"], ens.n_eff);
    return cfg;
}

void write_records(const fs::path& path, const std::vector<SpinRecord>& records,
                   RunResult& result) {
    CsvWriter csv(path.string(),
                  {"shot", "dn_a_pre", "dn_a_final", "dn_b_pre", "dn_b_final"});
    for (const auto& r : records) {
        csv.row({static_cast<double>(r.shot_index), r.dn_a_pre, r.dn_a_final, r.dn_b_pre,
                 r.dn_b_final});
    }
    result.files_written.push_back(path.string());
}

void write_adev(const fs::path& path, const std::vector<AdevPoint>& curve,
                RunResult& result) {
    CsvWriter csv(path.string(), {"tau_s", "sigma_y", "error_bar", "n_samples"});
    for (const auto& pt : curve) {
        if (pt.n_samples > 0) {
            csv.row({pt.tau_s, pt.sigma_y, pt.error_bar,
                     static_cast<double>(pt.n_samples)});
        }
    }
    result.files_written.push_back(path.string());
}

json run_compare_clocks(const Scenario& s, const fs::path& out, int /*threads*/,
                        RunResult& result) {
    const json& p = s.parameters;
    const double nu = get_num(p, "transition_frequency_hz", constants::sr_clock_frequency_hz);

    SequenceConfig css = sequence_from_json(p, ComparisonMode::css_css);
    SequenceConfig sss = sequence_from_json(p, ComparisonMode::sss_sss);

    // Mode runs live in disjoint stream spaces of the master seed.
    const std::uint64_t css_seed = s.seed;
    const std::uint64_t sss_seed = s.seed ^ 0x5353535353535353ULL;
    const auto records_css = run_sequence(css, css_seed);
    const auto records_sss = run_sequence(sss, sss_seed);
    write_records(out / "records_css.csv", records_css, result);
    write_records(out / "records_sss.csv", records_sss, result);

    // Phase conversion uses each sequence's own fringe amplitude.
    const double alpha_css = css.readout_contrast() * css.fringe_amplitude();
    const double alpha_sss = sss.readout_contrast() * sss.fringe_amplitude();
    const EstimatorResult est_css = optimize_estimators(records_css, alpha_css);
    const EstimatorResult est_sss = optimize_estimators(records_sss, alpha_sss);

    std::vector<double> taus;
    if (p.contains("adev_tau_multiples")) {
        for (const auto& v : p["adev_tau_multiples"]) {
            taus.push_back(v.get<double>() * css.cycle_time);
        }
    } else {
        for (std::size_t m = 1; 2 * m * 50 <= css.n_shots; m *= 2) {
            taus.push_back(static_cast<double>(m) * css.cycle_time);
        }
    }
    const auto adev_css =
        allan_deviation(est_css.phase_series, css.ramsey_time, css.cycle_time, nu, taus);
    const auto adev_sss =
        allan_deviation(est_sss.phase_series, sss.ramsey_time, sss.cycle_time, nu, taus);
    write_adev(out / "adev_css.csv", adev_css, result);
    write_adev(out / "adev_sss.csv", adev_sss, result);

    const StabilityFit fit_css = fit_stability(adev_css);
    const StabilityFit fit_sss = fit_stability(adev_sss);

    const double n_a = css.ensemble_a.n_eff;
    const double n_b = css.ensemble_b.n_eff;
    const double ci = css.ensemble_a.contrast_i;
    const double qpn = qpn_limit(n_a, n_b, ci);
    const double sql = sql_limit(n_a, n_b, ci, est_sss.estimators.beta_d);

    json estimators;
    estimators["css"] = {{"beta_a", est_css.estimators.beta_a},
                         {"beta_b", est_css.estimators.beta_b},
                         {"beta_d", est_css.estimators.beta_d},
                         {"beta_a_unc", est_css.estimators.beta_a_unc},
                         {"beta_b_unc", est_css.estimators.beta_b_unc},
                         {"beta_d_unc", est_css.estimators.beta_d_unc}};
    estimators["sss"] = {{"beta_a", est_sss.estimators.beta_a},
                         {"beta_b", est_sss.estimators.beta_b},
                         {"beta_d", est_sss.estimators.beta_d},
                         {"beta_a_unc", est_sss.estimators.beta_a_unc},
                         {"beta_b_unc", est_sss.estimators.beta_b_unc},
                         {"beta_d_unc", est_sss.estimators.beta_d_unc}};
    write_json(out / "estimators.json", estimators, result);

    json summary;
    summary["css_phase_std_rad"] = std::sqrt(est_css.phase_variance);
    summary["sss_phase_std_rad"] = std::sqrt(est_sss.phase_variance);
    summary["qpn_bound_rad"] = qpn;
    summary["sql_bound_rad"] = sql;
    summary["css_over_qpn_db"] = db_from_ratio(est_css.phase_variance / (qpn * qpn));
    summary["sss_over_sql_db"] = db_from_ratio(est_sss.phase_variance / (sql * sql));
    summary["enhancement_db"] =
        db_from_ratio(est_css.phase_variance / est_sss.phase_variance);
    summary["stability_coeff_css"] = fit_css.coeff;
    summary["stability_coeff_sss"] = fit_sss.coeff;
    summary["adev_enhancement_db"] =
        db_from_ratio((fit_css.coeff * fit_css.coeff) / (fit_sss.coeff * fit_sss.coeff));
    summary["beta_a"] = est_sss.estimators.beta_a;
    summary["beta_b"] = est_sss.estimators.beta_b;
    summary["beta_d"] = est_sss.estimators.beta_d;
    return summary;
}

// --- adev ---------------------------------------------------------------------

json run_adev(const Scenario& s, const fs::path& out, int /*threads*/, RunResult& result) {
    const json& p = s.parameters;
    const double ramsey = p["ramsey_time_s"].get<double>();
    const double cycle = p["cycle_time_s"].get<double>();
    const double nu = get_num(p, "transition_frequency_hz", constants::sr_clock_frequency_hz);

    std::vector<double> phases;
    if (p.contains("input_csv")) {
        const CsvTable table = read_csv(resolve_input(s, p["input_csv"].get<std::string>()));
        phases = table.column("phase_rad");
    } else {
        const json& syn = p["synthesize"];
        const auto n = static_cast<std::size_t>(syn["n_shots"].get<double>());
        const double sigma = syn["sigma_phi_rad"].get<double>();
        phases.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            RandomStream rng = RandomStream::derive(s.seed, i);
            phases[i] = sigma * rng.gaussian();
        }
        CsvWriter csv((out / "phases.csv").string(), {"shot", "phase_rad"});
        for (std::size_t i = 0; i < n; ++i) {
            csv.row({static_cast<double>(i), phases[i]});
        }
        result.files_written.push_back((out / "phases.csv").string());
    }

    std::vector<double> taus;
    for (const auto& v : p["tau_multiples"]) {
        taus.push_back(v.get<double>() * cycle);
    }
    const auto curve = allan_deviation(phases, ramsey, cycle, nu, taus);
    write_adev(out / "adev.csv", curve, result);
    const StabilityFit fit = fit_stability(curve);

    json summary;
    summary["stability_coeff"] = fit.coeff;
    summary["n_points"] = curve.size();
    summary["n_shots"] = phases.size();
    return summary;
}

}  // namespace

RunResult run_scenario(const Scenario& scenario, const std::string& out_dir,
                       std::optional<std::uint64_t> seed_override, int threads) {
    Scenario s = scenario;
    if (seed_override) {
        s.seed = *seed_override;
    }
    const auto diagnostics = validate_scenario(s);
    if (!diagnostics.empty()) {
        std::string msg = "scenario validation failed:";
        for (const auto& d : diagnostics) {
            msg += "\n  " + d.str();
        }
        throw ScenarioError(msg);
    }

    const fs::path out(out_dir);
    fs::create_directories(out);

    RunResult result;

    // Manifest first: the resolved configuration, itself a runnable scenario.
    json manifest;
    manifest["name"] = s.name;
    manifest["command"] = s.command;
    manifest["seed"] = s.seed;
    manifest["parameters"] = s.parameters;
    char hash_hex[20];
    std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                  static_cast<unsigned long long>(content_hash(manifest.dump())));
    manifest["content_hash"] = hash_hex;
    write_json(out / "manifest.json", manifest, result);

    json summary;
    if (s.command == "calibrate-coupling") {
        summary = run_calibrate_coupling(s, out, threads, result);
    } else if (s.command == "qpn-fit") {
        summary = run_qpn_fit(s, out, threads, result);
    } else if (s.command == "squeeze-sweep") {
        summary = run_squeeze_sweep(s, out, threads, result);
    } else if (s.command == "correlation-sweep") {
        summary = run_correlation_sweep(s, out, threads, result);
    } else if (s.command == "compare-clocks") {
        summary = run_compare_clocks(s, out, threads, result);
    } else if (s.command == "adev") {
        summary = run_adev(s, out, threads, result);
    }
    summary["command"] = s.command;
    summary["name"] = s.name;
    summary["seed"] = s.seed;
    write_json(out / "summary.json", summary, result);
    result.summary = summary;
    return result;
}

}  // namespace sqclock
