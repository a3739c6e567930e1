#include "sqclock/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "sqclock/units.hpp"

namespace sqclock {

namespace {

struct Channels {
    std::vector<double> pa, fa, pb, fb;
};

Channels centered_channels(std::span<const SpinRecord> records) {
    const std::size_t n = records.size();
    Channels ch;
    ch.pa.resize(n);
    ch.fa.resize(n);
    ch.pb.resize(n);
    ch.fb.resize(n);
    double ma = 0.0, mfa = 0.0, mb = 0.0, mfb = 0.0;
    for (const auto& r : records) {
        ma += r.dn_a_pre;
        mfa += r.dn_a_final;
        mb += r.dn_b_pre;
        mfb += r.dn_b_final;
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    ma *= inv_n;
    mfa *= inv_n;
    mb *= inv_n;
    mfb *= inv_n;
    for (std::size_t i = 0; i < n; ++i) {
        ch.pa[i] = records[i].dn_a_pre - ma;
        ch.fa[i] = records[i].dn_a_final - mfa;
        ch.pb[i] = records[i].dn_b_pre - mb;
        ch.fb[i] = records[i].dn_b_final - mfb;
    }
    return ch;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

struct InnerSolution {
    double beta_a = 0.0;
    double beta_b = 0.0;
    double variance = 0.0;
};

// At fixed beta_d the objective Var(fa - bA pa - beta_d fb + c pb) with
// c = beta_d * beta_b is quadratic in (bA, c): ordinary 2x2 normal
// equations of u = fa - beta_d fb on the regressors (pa, pb).
InnerSolution solve_at_beta_d(const Channels& ch, double beta_d) {
    const std::size_t n = ch.pa.size();
    const double inv = 1.0 / static_cast<double>(n - 1);
    const double var_pa = dot(ch.pa, ch.pa) * inv;
    const double var_pb = dot(ch.pb, ch.pb) * inv;
    const double cov_pa_pb = dot(ch.pa, ch.pb) * inv;
    const double cov_u_pa = (dot(ch.fa, ch.pa) - beta_d * dot(ch.fb, ch.pa)) * inv;
    const double cov_u_pb = (dot(ch.fa, ch.pb) - beta_d * dot(ch.fb, ch.pb)) * inv;

    const double det = var_pa * var_pb - cov_pa_pb * cov_pa_pb;
    double b_a;
    double minus_c;
    if (std::abs(det) < 1e-300) {
        b_a = cov_u_pa / var_pa;
        minus_c = 0.0;
    } else {
        b_a = (cov_u_pa * var_pb - cov_pa_pb * cov_u_pb) / det;
        minus_c = (var_pa * cov_u_pb - cov_pa_pb * cov_u_pa) / det;
    }
    const double c = -minus_c;

    InnerSolution sol;
    sol.beta_a = b_a;
    // The B-channel pre estimator only ever enters through beta_d * beta_b;
    // when beta_d collapses to zero its value is immaterial.
    sol.beta_b = (std::abs(beta_d) > 1e-6) ? c / beta_d : 0.0;
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double v = ch.fa[i] - b_a * ch.pa[i] - beta_d * ch.fb[i] + c * ch.pb[i];
        var += v * v;
    }
    sol.variance = var * inv;
    return sol;
}

struct CoreSolution {
    InnerSolution inner;
    double beta_d = 1.0;
};

CoreSolution optimize_core(std::span<const SpinRecord> records) {
    const Channels ch = centered_channels(records);
    const double inv = 1.0 / static_cast<double>(records.size() - 1);
    if (!(dot(ch.pa, ch.pa) * inv > 0.0)) {
        throw std::invalid_argument(
            "optimize_estimators: singular covariance in channel dn_a_pre");
    }
    if (!(dot(ch.pb, ch.pb) * inv > 0.0)) {
        throw std::invalid_argument(
            "optimize_estimators: singular covariance in channel dn_b_pre");
    }
    if (!(dot(ch.fb, ch.fb) * inv > 0.0)) {
        throw std::invalid_argument(
            "optimize_estimators: singular covariance in channel dn_b_final");
    }

    auto profiled = [&](double bd) { return solve_at_beta_d(ch, bd).variance; };
    // Golden-section search; the profiled objective is a smooth rational
    // function of beta_d with a single interior minimum.
    double lo = -0.5;
    double hi = 2.5;
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - gr * (hi - lo);
    double x2 = lo + gr * (hi - lo);
    double f1 = profiled(x1);
    double f2 = profiled(x2);
    while ((hi - lo) > 1e-12) {
        if (f1 < f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - gr * (hi - lo);
            f1 = profiled(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + gr * (hi - lo);
            f2 = profiled(x2);
        }
    }
    CoreSolution sol;
    sol.beta_d = 0.5 * (lo + hi);
    sol.inner = solve_at_beta_d(ch, sol.beta_d);
    return sol;
}

}  // namespace

EstimatorResult optimize_estimators(std::span<const SpinRecord> records, double alpha) {
    if (records.size() < 10) {
        throw std::invalid_argument("optimize_estimators: need at least 10 records");
    }
    if (!(alpha > 0.0)) {
        throw std::invalid_argument("optimize_estimators: alpha must be > 0");
    }
    const CoreSolution core = optimize_core(records);

    EstimatorResult result;
    result.estimators.beta_a = core.inner.beta_a;
    result.estimators.beta_b = core.inner.beta_b;
    result.estimators.beta_d = core.beta_d;

    // Uncertainties: re-optimize on prefixes from half to full length, take
    // mean-free spread of each estimator.
    const std::size_t n = records.size();
    constexpr int n_refits = 11;
    std::vector<double> ba, bb, bd;
    for (int k = 0; k < n_refits; ++k) {
        const std::size_t len =
            n / 2 + static_cast<std::size_t>(static_cast<double>(n - n / 2) *
                                             static_cast<double>(k) / (n_refits - 1));
        if (len < 10) {
            continue;
        }
        const CoreSolution sub = optimize_core(records.first(len));
        ba.push_back(sub.inner.beta_a);
        bb.push_back(sub.inner.beta_b);
        bd.push_back(sub.beta_d);
    }
    auto spread = [](const std::vector<double>& v) {
        if (v.size() < 2) {
            return 0.0;
        }
        double m = 0.0;
        for (double x : v) {
            m += x;
        }
        m /= static_cast<double>(v.size());
        double s = 0.0;
        for (double x : v) {
            s += (x - m) * (x - m);
        }
        return std::sqrt(s / static_cast<double>(v.size() - 1));
    };
    result.estimators.beta_a_unc = spread(ba);
    result.estimators.beta_b_unc = spread(bb);
    result.estimators.beta_d_unc = spread(bd);

    result.phase_series.resize(n);
    const double inv_alpha = 1.0 / alpha;
    double mean_phase = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& r = records[i];
        result.phase_series[i] =
            ((r.dn_a_final - core.inner.beta_a * r.dn_a_pre) -
             core.beta_d * (r.dn_b_final - core.inner.beta_b * r.dn_b_pre)) *
            inv_alpha;
        mean_phase += result.phase_series[i];
    }
    mean_phase /= static_cast<double>(n);
    double var = 0.0;
    for (double phi : result.phase_series) {
        var += (phi - mean_phase) * (phi - mean_phase);
    }
    result.phase_variance = var / static_cast<double>(n - 1);
    return result;
}

double qpn_limit(double n_a, double n_b, double contrast_i) {
    if (!(n_a > 0.0) || !(n_b > 0.0) || !(contrast_i > 0.0)) {
        throw std::invalid_argument("qpn_limit: atom numbers and contrast must be > 0");
    }
    return 1.0 / (contrast_i * std::sqrt(n_a + n_b));
}

double sql_limit(double n_a, double n_b, double contrast_i, double beta_d) {
    if (!(n_a > 0.0) || !(n_b > 0.0) || !(contrast_i > 0.0)) {
        throw std::invalid_argument("sql_limit: atom numbers and contrast must be > 0");
    }
    return 0.5 * std::sqrt(1.0 / (contrast_i * n_a) + beta_d * beta_d / (contrast_i * n_b));
}

std::vector<AdevPoint> allan_deviation(std::span<const double> phase_series,
                                       double ramsey_time, double cycle_time,
                                       double transition_frequency_hz,
                                       std::span<const double> tau_list) {
    if (!(ramsey_time > 0.0) || !(cycle_time > 0.0) || !(transition_frequency_hz > 0.0)) {
        throw std::invalid_argument("allan_deviation: times and frequency must be > 0");
    }
    if (tau_list.empty()) {
        throw std::invalid_argument("allan_deviation: empty tau list");
    }
    const std::size_t m_count = phase_series.size();
    double tau_max = 0.0;
    for (double t : tau_list) {
        tau_max = std::max(tau_max, t);
    }
    if (static_cast<double>(m_count) < 2.0 * tau_max / cycle_time) {
        throw std::invalid_argument("allan_deviation: series too short for requested tau");
    }

    // Fractional frequency per shot.
    const double scale =
        1.0 / (2.0 * std::numbers::pi * ramsey_time * transition_frequency_hz);
    std::vector<double> prefix(m_count + 1, 0.0);
    for (std::size_t i = 0; i < m_count; ++i) {
        prefix[i + 1] = prefix[i] + phase_series[i] * scale;
    }

    std::vector<AdevPoint> curve;
    curve.reserve(tau_list.size());
    for (double tau : tau_list) {
        AdevPoint pt;
        const double m_real = tau / cycle_time;
        std::size_t m = static_cast<std::size_t>(std::llround(m_real));
        m = std::max<std::size_t>(1, m);
        pt.tau_adjusted = std::abs(m_real - static_cast<double>(m)) > 1e-9;
        pt.tau_s = static_cast<double>(m) * cycle_time;
        if (2 * m > m_count) {
            pt.sigma_y = 0.0;
            pt.n_samples = 0;
            curve.push_back(pt);
            continue;
        }
        const std::size_t pairs = m_count - 2 * m + 1;
        double acc = 0.0;
        for (std::size_t j = 0; j < pairs; ++j) {
            const double first = prefix[j + m] - prefix[j];
            const double second = prefix[j + 2 * m] - prefix[j + m];
            const double d = second - first;
            acc += d * d;
        }
        const double md = static_cast<double>(m);
        const double avar = acc / (2.0 * md * md * static_cast<double>(pairs));
        pt.sigma_y = std::sqrt(avar);
        pt.n_samples = pairs;
        // White-FM equivalent degrees of freedom for the error bar.
        const double big_m = static_cast<double>(m_count);
        double edf = (3.0 * (big_m - 1.0) / (2.0 * md) - 2.0 * (big_m - 2.0) / big_m) *
                     (4.0 * md * md) / (4.0 * md * md + 5.0);
        edf = std::max(edf, 1.0);
        pt.error_bar = pt.sigma_y / std::sqrt(2.0 * edf);
        curve.push_back(pt);
    }
    return curve;
}

StabilityFit fit_stability(std::span<const AdevPoint> curve) {
    StabilityFit fit;
    double acc = 0.0;
    std::size_t used = 0;
    for (const auto& pt : curve) {
        if (pt.sigma_y > 0.0 && pt.tau_s > 0.0) {
            acc += std::log(pt.sigma_y) + 0.5 * std::log(pt.tau_s);
            ++used;
        }
    }
    if (used == 0) {
        throw std::invalid_argument("fit_stability: no usable points");
    }
    fit.coeff = std::exp(acc / static_cast<double>(used));
    fit.residuals.reserve(curve.size());
    for (const auto& pt : curve) {
        if (pt.sigma_y > 0.0 && pt.tau_s > 0.0) {
            fit.residuals.push_back(std::log(pt.sigma_y) -
                                    (std::log(fit.coeff) - 0.5 * std::log(pt.tau_s)));
        } else {
            fit.residuals.push_back(0.0);
        }
    }
    return fit;
}

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw std::invalid_argument("pearson: need two equal-length series with >= 2 points");
    }
    const double n = static_cast<double>(x.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0;
    double syy = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (!(sxx > 0.0) || !(syy > 0.0)) {
        throw std::invalid_argument("pearson: zero-variance series");
    }
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace sqclock
