#pragma once

// Phase-profile estimators: arctangent step fit, periodic (wrapped) Gaussian
// fit of phase histograms, and the linear ac-Stark power calibration.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "antires/error.hpp"
#include "antires/nlls.hpp"

namespace antires {

inline double rad_to_deg(double r) { return r * 180.0 / std::numbers::pi; }
inline double deg_to_rad(double d) { return d * std::numbers::pi / 180.0; }

// Wraps an angle in degrees into [-180, 180).
inline double wrap_degrees(double deg) {
    double w = std::fmod(deg + 180.0, 360.0);
    if (w < 0.0) w += 360.0;
    w -= 180.0;
    return w >= 180.0 ? -180.0 : w;
}

// ---------------------------------------------------------------- arctangent

struct ArctanFitOptions {
    // Adds slope * x to the model. The phase of a driven node near an
    // antiresonance sits on a slowly varying background from distant poles.
    bool linear_background = true;
    NllsOptions nlls{};
};

//   phase(x) = offset - (swing / 180) * atan((x - center) / width) [deg] + slope * x
struct ArctanFitResult {
    double center = 0.0;
    double width = 0.0;
    double swing_deg = 0.0;           // asymptotic change of the arctangent term
    double offset_deg = 0.0;
    double background_slope = 0.0;    // deg per x unit
    double observed_swing_deg = 0.0;  // peak-to-trough of the fitted curve over the data range
    double center_error = 0.0;
    double width_error = 0.0;
    double swing_error = 0.0;
    double offset_error = 0.0;
    double slope_error = 0.0;
    double residual_norm = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    bool poorly_conditioned = false;  // central region of the data was not monotone

    double evaluate(double x) const {
        return offset_deg - swing_deg / 180.0 * rad_to_deg(std::atan((x - center) / width)) + background_slope * x;
    }
};

// `uncertainties_deg` may be empty; otherwise points are weighted by 1/sigma^2.
inline ArctanFitResult fit_arctan_phase(const std::vector<double>& x, const std::vector<double>& phase_deg,
                                        const std::vector<double>& uncertainties_deg = {},
                                        const ArctanFitOptions& options = {}) {
    const std::size_t n = x.size();
    if (n != phase_deg.size()) throw Error(ErrorKind::config, "arctan fit: axis and phase differ in length");
    if (n < 6) throw Error(ErrorKind::config, "arctan fit needs at least 6 points");
    bool increasing = true, decreasing = true;
    for (std::size_t i = 1; i < n; ++i) {
        increasing = increasing && x[i] > x[i - 1];
        decreasing = decreasing && x[i] < x[i - 1];
    }
    if (!increasing && !decreasing) throw Error(ErrorKind::config, "arctan fit: axis must be strictly monotone");

    std::vector<double> weights;
    if (!uncertainties_deg.empty()) {
        if (uncertainties_deg.size() != n) throw Error(ErrorKind::config, "arctan fit: uncertainty length mismatch");
        for (double s : uncertainties_deg) {
            if (!(s > 0.0)) throw Error(ErrorKind::config, "arctan fit: uncertainties must be positive");
            weights.push_back(1.0 / (s * s));
        }
    }

    // Starting point: steepest descent of the phase, data range, central half-swing span.
    std::size_t steep = 1;
    double steepest = 0.0;
    for (std::size_t i = 1; i < n; ++i) {
        const double slope = (phase_deg[i] - phase_deg[i - 1]) / (x[i] - x[i - 1]);
        if (i == 1 || slope < steepest) {
            steepest = slope;
            steep = i;
        }
    }
    const double center0 = 0.5 * (x[steep] + x[steep - 1]);
    const auto [lo_it, hi_it] = std::minmax_element(phase_deg.begin(), phase_deg.end());
    const double range = *hi_it - *lo_it;
    const double mid = 0.5 * (*hi_it + *lo_it);
    const double swing0 = range > 0.0 ? range : 1.0;
    // The central half of the swing spans |x - c| <= w for an arctangent; count that span.
    double span_lo = center0, span_hi = center0;
    for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(phase_deg[i] - mid) <= 0.25 * range) {
            span_lo = std::min(span_lo, x[i]);
            span_hi = std::max(span_hi, x[i]);
        }
    }
    const double min_step = std::abs(x[1] - x[0]);
    const double width0 = std::max(0.5 * (span_hi - span_lo), min_step);

    const bool bg = options.linear_background;
    auto model = [bg](double xv, const Eigen::VectorXd& p) {
        double v = p[0] - p[1] / 180.0 * rad_to_deg(std::atan((xv - p[2]) / p[3]));
        if (bg) v += p[4] * xv;
        return v;
    };
    Eigen::VectorXd p0(bg ? 5 : 4);
    p0[0] = mid;
    p0[1] = swing0;
    p0[2] = center0;
    p0[3] = width0;
    if (bg) p0[4] = 0.0;

    const NllsResult fit = fit_nlls(model, p0, x, phase_deg, weights, options.nlls);

    ArctanFitResult r;
    r.offset_deg = fit.parameters[0];
    r.swing_deg = fit.parameters[1];
    r.center = fit.parameters[2];
    r.width = fit.parameters[3];
    r.background_slope = bg ? fit.parameters[4] : 0.0;
    r.offset_error = fit.standard_errors[0];
    r.swing_error = fit.standard_errors[1];
    r.center_error = fit.standard_errors[2];
    r.width_error = fit.standard_errors[3];
    r.slope_error = bg ? fit.standard_errors[4] : 0.0;
    if (r.width < 0.0) {
        r.width = -r.width;
        r.swing_deg = -r.swing_deg;
    }
    r.residual_norm = fit.residual_norm;
    r.iterations = fit.iterations;
    r.converged = fit.converged;

    const double x_lo = std::min(x.front(), x.back());
    const double x_hi = std::max(x.front(), x.back());
    double ymin = r.evaluate(x_lo), ymax = ymin;
    constexpr int samples = 4001;
    for (int k = 0; k <= samples; ++k) {
        const double v = r.evaluate(x_lo + (x_hi - x_lo) * k / samples);
        ymin = std::min(ymin, v);
        ymax = std::max(ymax, v);
    }
    r.observed_swing_deg = ymax - ymin;

    // Poor conditioning: the data inside the fitted central region should fall monotonically.
    const double sign = r.swing_deg >= 0.0 ? 1.0 : -1.0;
    std::optional<double> previous;
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t i = increasing ? k : n - 1 - k;
        if (std::abs(x[i] - r.center) > r.width) continue;
        if (previous && sign * (phase_deg[i] - *previous) > 0.0) r.poorly_conditioned = true;
        previous = phase_deg[i];
    }
    return r;
}

// ---------------------------------------------------------- phase histograms

enum class HistogramNormalization { raw, per_max };

struct PhaseHistogram {
    std::vector<double> edges_deg;  // bins + 1 edges spanning [-180, 180)
    std::vector<long long> counts;
    HistogramNormalization normalization = HistogramNormalization::raw;

    std::size_t bins() const { return counts.size(); }
    double bin_width() const { return 360.0 / static_cast<double>(counts.size()); }
    double center(std::size_t b) const { return 0.5 * (edges_deg[b] + edges_deg[b + 1]); }

    long long total() const {
        long long t = 0;
        for (auto c : counts) t += c;
        return t;
    }

    // Counts scaled by the largest bin (white = no events, black = maximum).
    std::vector<double> normalized() const {
        std::vector<double> out(counts.size(), 0.0);
        const long long peak = counts.empty() ? 0 : *std::max_element(counts.begin(), counts.end());
        if (peak == 0) return out;
        for (std::size_t b = 0; b < counts.size(); ++b)
            out[b] = static_cast<double>(counts[b]) / static_cast<double>(peak);
        return out;
    }

    std::size_t bin_of(double deg) const {
        const double w = wrap_degrees(deg);
        auto b = static_cast<std::size_t>(std::floor((w + 180.0) / bin_width()));
        return std::min(b, counts.size() - 1);
    }

    static PhaseHistogram empty(std::size_t bins) {
        if (bins < 2) throw Error(ErrorKind::config, "phase histogram needs at least 2 bins");
        PhaseHistogram h;
        h.counts.assign(bins, 0);
        h.edges_deg.resize(bins + 1);
        for (std::size_t b = 0; b <= bins; ++b)
            h.edges_deg[b] = -180.0 + 360.0 * static_cast<double>(b) / static_cast<double>(bins);
        return h;
    }
};

// Odd, so that one bin is centered on 0 deg.
inline constexpr std::size_t kDefaultHistogramBins = 45;

struct PeriodicGaussianFit {
    double mean_deg = 0.0;   // in [-180, 180)
    double sigma_deg = 0.0;
    double amplitude = 0.0;
    double mean_uncertainty_deg = 0.0;
    double standard_error_of_mean_deg = 0.0;  // sigma / sqrt(total counts)
    // Geometric mean of the standard error of the mean and the fit uncertainty.
    double combined_error_deg() const { return std::sqrt(mean_uncertainty_deg * standard_error_of_mean_deg); }
};

inline double periodic_gaussian(double phi_deg, double amplitude, double mean_deg, double sigma_deg) {
    double s = 0.0;
    for (int k = -2; k <= 2; ++k) {
        const double d = phi_deg - mean_deg + 360.0 * k;
        s += std::exp(-d * d / (2.0 * sigma_deg * sigma_deg));
    }
    return amplitude * s;
}

inline PeriodicGaussianFit fit_periodic_gaussian(const PhaseHistogram& histogram, const NllsOptions& options = {}) {
    const std::size_t bins = histogram.bins();
    const long long total = histogram.total();
    if (total < 10) throw Error(ErrorKind::config, "periodic Gaussian fit needs at least 10 counts");
    const long long first = histogram.counts.front();
    if (std::all_of(histogram.counts.begin(), histogram.counts.end(), [&](long long c) { return c == first; }))
        throw Error(ErrorKind::non_identifiable, "flat phase histogram: mean phase is not identifiable");

    const double w = histogram.bin_width();
    const double resolution = w / std::sqrt(12.0);
    PeriodicGaussianFit out;

    std::size_t occupied = 0, only = 0;
    for (std::size_t b = 0; b < bins; ++b)
        if (histogram.counts[b] > 0) {
            ++occupied;
            only = b;
        }
    if (occupied == 1) {
        out.mean_deg = wrap_degrees(histogram.center(only));
        out.sigma_deg = resolution;
        out.amplitude = static_cast<double>(histogram.counts[only]);
        out.mean_uncertainty_deg = resolution;
        out.standard_error_of_mean_deg = resolution / std::sqrt(static_cast<double>(total));
        return out;
    }

    // Circular moments for the starting point.
    double c = 0.0, s = 0.0;
    for (std::size_t b = 0; b < bins; ++b) {
        const double a = deg_to_rad(histogram.center(b));
        c += static_cast<double>(histogram.counts[b]) * std::cos(a);
        s += static_cast<double>(histogram.counts[b]) * std::sin(a);
    }
    const double resultant = std::hypot(c, s) / static_cast<double>(total);
    const double mean0 = rad_to_deg(std::atan2(s, c));
    double sigma0 = resultant > 1e-9 ? rad_to_deg(std::sqrt(-2.0 * std::log(std::min(resultant, 1.0)))) : 90.0;
    sigma0 = std::clamp(sigma0, resolution, 120.0);
    const long long peak = *std::max_element(histogram.counts.begin(), histogram.counts.end());

    std::vector<double> x(bins), y(bins);
    for (std::size_t b = 0; b < bins; ++b) {
        x[b] = histogram.center(b);
        y[b] = static_cast<double>(histogram.counts[b]);
    }
    auto model = [](double phi, const Eigen::VectorXd& p) { return periodic_gaussian(phi, p[0], p[1], p[2]); };
    Eigen::VectorXd p0(3);
    p0 << static_cast<double>(peak), mean0, sigma0;
    const NllsResult first_pass = fit_nlls(model, p0, x, y, {}, options);
    // Refit with Poisson weights from the first-pass model; the covariance is then absolute.
    std::vector<double> weights(bins);
    for (std::size_t b = 0; b < bins; ++b) weights[b] = 1.0 / std::max(model(x[b], first_pass.parameters), 1.0);
    NllsOptions poisson = options;
    poisson.scale_covariance = false;
    const NllsResult fit = fit_nlls(model, first_pass.parameters, x, y, weights, poisson);

    out.amplitude = fit.parameters[0];
    out.mean_deg = wrap_degrees(fit.parameters[1]);
    out.sigma_deg = std::abs(fit.parameters[2]);
    out.mean_uncertainty_deg = fit.standard_errors[1];
    out.standard_error_of_mean_deg = out.sigma_deg / std::sqrt(static_cast<double>(total));
    return out;
}

// --------------------------------------------------------- Stark calibration

struct StarkPoint {
    double power_nw = 0.0;
    double detuning_mhz = 0.0;  // atom-cavity detuning at this trap power
    double weight = 1.0;
};

// Atom-cavity detuning is linear in trap power: detuning = slope * power + intercept.
struct StarkCalibration {
    double slope_mhz_per_nw = 0.0;
    double intercept_mhz = 0.0;
    std::vector<StarkPoint> points;
    std::vector<double> residuals_mhz;

    double power_to_detuning(double power_nw) const { return slope_mhz_per_nw * power_nw + intercept_mhz; }

    double detuning_to_power(double detuning_mhz) const {
        if (slope_mhz_per_nw == 0.0) throw Error(ErrorKind::numeric, "Stark calibration has zero slope");
        return (detuning_mhz - intercept_mhz) / slope_mhz_per_nw;
    }
};

inline double power_to_detuning(const StarkCalibration& calibration, double power_nw) {
    return calibration.power_to_detuning(power_nw);
}

inline double detuning_to_power(const StarkCalibration& calibration, double detuning_mhz) {
    return calibration.detuning_to_power(detuning_mhz);
}

// Weighted linear least squares through the calibration points.
inline StarkCalibration stark_calibration(const std::vector<StarkPoint>& points) {
    if (points.size() < 2) throw Error(ErrorKind::config, "Stark calibration needs at least 2 points");
    const auto n = static_cast<Eigen::Index>(points.size());
    Eigen::MatrixXd a(n, 2);
    Eigen::VectorXd b(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& pt = points[static_cast<std::size_t>(i)];
        if (!(pt.weight > 0.0) || !std::isfinite(pt.power_nw) || !std::isfinite(pt.detuning_mhz))
            throw Error(ErrorKind::config, "Stark calibration points must be finite with positive weight");
        const double sw = std::sqrt(pt.weight);
        a(i, 0) = sw * pt.power_nw;
        a(i, 1) = sw;
        b[i] = sw * pt.detuning_mhz;
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    qr.setThreshold(1e-12);
    if (qr.rank() < 2) throw Error(ErrorKind::rank_deficiency, "Stark calibration needs distinct powers");
    const Eigen::Vector2d sol = qr.solve(b);

    StarkCalibration cal;
    cal.slope_mhz_per_nw = sol[0];
    cal.intercept_mhz = sol[1];
    cal.points = points;
    for (const auto& pt : points) cal.residuals_mhz.push_back(pt.detuning_mhz - cal.power_to_detuning(pt.power_nw));
    return cal;
}

}  // namespace antires
