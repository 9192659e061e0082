#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <numbers>
#include <random>

#include "antires/fits.hpp"
#include "antires/motion.hpp"
#include "antires/nlls.hpp"

using namespace antires;

namespace {

constexpr double kG = 16.0, kGamma = 3.0, kKappa = 1.5;

// Ordinary least squares via the 2x2 normal equations.
std::pair<double, double> normal_equation_line(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return {slope, (sy - slope * sx) / n};
}

struct Scan {
    std::vector<double> delta_pa;
    std::vector<double> phase_deg;
};

// Cavity phase at D_pc = 0 while the atom is Stark-tuned across 450-1700 nW,
// evaluated directly from the two-mode closed form.
Scan stark_scan(const std::function<cplx(double)>& field_at_dac) {
    const double slope = 0.0372192513368984, intercept = -40.171122994652407;
    Scan s;
    std::vector<double> wrapped;
    const int n = 126;
    for (int i = n - 1; i >= 0; --i) {
        const double power = 450.0 + (1700.0 - 450.0) * i / (n - 1);
        const double dac = slope * power + intercept;
        s.delta_pa.push_back(-dac);
        wrapped.push_back(std::arg(field_at_dac(dac)));
    }
    double shift = 0.0;
    for (std::size_t i = 0; i < wrapped.size(); ++i) {
        if (i > 0) {
            const double jump = wrapped[i] - wrapped[i - 1];
            if (jump > std::numbers::pi) shift -= 2.0 * std::numbers::pi;
            if (jump < -std::numbers::pi) shift += 2.0 * std::numbers::pi;
        }
        s.phase_deg.push_back((wrapped[i] + shift) * 180.0 / std::numbers::pi);
    }
    return s;
}

Scan motionless_scan() {
    return stark_scan([](double dac) { return closed_form_two_mode(-dac, 0.0, kGamma, kKappa, kG, 1.0); });
}

PhaseHistogram histogram_of(const std::vector<double>& samples_deg, std::size_t bins) {
    PhaseHistogram h = PhaseHistogram::empty(bins);
    for (double v : samples_deg) ++h.counts[h.bin_of(v)];
    return h;
}

double angular_difference(double a, double b) { return wrap_degrees(a - b); }

}  // namespace

// ------------------------------------------------------------------ NLLS

TEST(Nlls, ZeroResidualRecovery) {
    auto model = [](double x, const Eigen::VectorXd& p) {
        return p[0] * std::exp(-(x - p[1]) * (x - p[1]) / (2.0 * p[2] * p[2])) + p[3];
    };
    Eigen::VectorXd truth(4);
    truth << 2.5, 0.7, 1.3, -0.4;
    std::vector<double> x, y;
    for (int i = 0; i <= 80; ++i) {
        x.push_back(-5.0 + 0.125 * i);
        y.push_back(model(x.back(), truth));
    }
    Eigen::VectorXd start(4);
    start << 2.0, 0.3, 1.8, 0.0;
    const auto fit = fit_nlls(model, start, x, y);
    EXPECT_TRUE(fit.converged);
    for (Eigen::Index k = 0; k < 4; ++k) EXPECT_NEAR(fit.parameters[k], truth[k], 1e-6 * std::abs(truth[k]));
}

TEST(Nlls, CollinearLine) {
    auto model = [](double x, const Eigen::VectorXd& p) { return p[0] * x + p[1]; };
    const std::vector<double> x{1.0, 2.0, 4.0}, y{1.5, 3.5, 7.5};
    Eigen::VectorXd start = Eigen::VectorXd::Zero(2);
    const auto fit = fit_nlls(model, start, x, y);
    EXPECT_NEAR(fit.parameters[0], 2.0, 1e-9);
    EXPECT_NEAR(fit.parameters[1], -0.5, 1e-9);
    EXPECT_NEAR(fit.residual_norm, 0.0, 1e-9);
}

TEST(Nlls, MatchesGridSearchOnQuadraticInParameterModel) {
    auto model = [](double x, const Eigen::VectorXd& p) { return p[0] * x + p[0] * p[0] * x * x; };
    std::mt19937_64 rng(8);
    std::normal_distribution<double> noise(0.0, 0.05);
    std::vector<double> x, y;
    for (int i = 0; i < 40; ++i) {
        x.push_back(-1.0 + 0.05 * i);
        y.push_back(0.8 * x.back() + 0.64 * x.back() * x.back() + noise(rng));
    }
    double best_a = 0.0, best_cost = 1e300;
    const double step = 1e-5;
    for (double a = 0.0; a <= 2.0; a += step) {
        double cost = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double r = y[i] - (a * x[i] + a * a * x[i] * x[i]);
            cost += r * r;
        }
        if (cost < best_cost) best_cost = cost, best_a = a;
    }
    Eigen::VectorXd start(1);
    start << 0.3;
    const auto fit = fit_nlls(model, start, x, y);
    EXPECT_NEAR(fit.parameters[0], best_a, step);
    EXPECT_NEAR(fit.cost, best_cost, 1e-8);
}

TEST(Nlls, CostNeverIncreases) {
    auto model = [](double x, const Eigen::VectorXd& p) { return p[0] * std::sin(p[1] * x + p[2]); };
    std::vector<double> x, y;
    for (int i = 0; i < 60; ++i) {
        x.push_back(0.1 * i);
        y.push_back(1.7 * std::sin(1.3 * x.back() + 0.4) + 0.01 * std::cos(7.0 * i));
    }
    Eigen::VectorXd start(3);
    start << 1.0, 1.1, 0.0;
    const auto fit = fit_nlls(model, start, x, y);
    ASSERT_FALSE(fit.cost_trace.empty());
    for (std::size_t i = 1; i < fit.cost_trace.size(); ++i) EXPECT_LE(fit.cost_trace[i], fit.cost_trace[i - 1]);
}

TEST(Nlls, NonConvergenceCarriesTrace) {
    auto model = [](double x, const Eigen::VectorXd& p) { return std::exp(p[0] * x) + p[1]; };
    std::vector<double> x, y;
    for (int i = 0; i < 30; ++i) {
        x.push_back(0.1 * i);
        y.push_back(std::exp(1.5 * x.back()) + 0.3 + 0.01 * std::sin(11.0 * i));
    }
    NllsOptions opts;
    opts.max_iterations = 2;
    Eigen::VectorXd start(2);
    start << -1.0, 5.0;
    try {
        fit_nlls(model, start, x, y, {}, opts);
        FAIL() << "expected non-convergence";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::fit_nonconvergence);
        EXPECT_NE(std::string(e.what()).find("iter 1 cost"), std::string::npos);
    }
}

TEST(Nlls, RankDeficiency) {
    auto model = [](double x, const Eigen::VectorXd& p) { return (p[0] + p[1]) * x; };
    const std::vector<double> x{1.0, 2.0, 3.0, 4.0}, y{2.0, 4.1, 5.9, 8.0};
    Eigen::VectorXd start(2);
    start << 0.5, 0.5;
    try {
        fit_nlls(model, start, x, y);
        FAIL() << "expected rank deficiency";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::rank_deficiency);
    }
    EXPECT_THROW(fit_nlls(model, start, {1.0}, {2.0}), Error);
}

// ---------------------------------------------------------------- arctan

TEST(ArctanFit, MotionlessStarkScanWidthAndSwing) {
    const Scan s = motionless_scan();
    const auto fit = fit_arctan_phase(s.delta_pa, s.phase_deg);
    EXPECT_TRUE(fit.converged);
    EXPECT_NEAR(fit.width, 3.0, 0.02 * 3.0);
    EXPECT_NEAR(fit.center, 0.0, 0.1);
    EXPECT_NEAR(fit.observed_swing_deg, 150.0, 2.0);
    EXPECT_GT(fit.width, 0.0);
    EXPECT_GE(fit.width_error, 0.0);
    EXPECT_FALSE(fit.poorly_conditioned);
}

TEST(ArctanFit, WithoutBackgroundTermWidthIsBiased) {
    const Scan s = motionless_scan();
    ArctanFitOptions opts;
    opts.linear_background = false;
    const auto fit = fit_arctan_phase(s.delta_pa, s.phase_deg, {}, opts);
    EXPECT_LT(fit.width, 2.9);
    EXPECT_EQ(fit.background_slope, 0.0);
}

TEST(ArctanFit, MotionAveragedScan) {
    const MotionEnsemble ensemble;
    const Scan s = stark_scan([&](double dac) {
        return motion_averaged_state(
            motion_realizations(atom_cavity_network(kG, kGamma, kKappa, dac), ensemble), 0.0)[0];
    });
    const auto fit = fit_arctan_phase(s.delta_pa, s.phase_deg);
    EXPECT_GE(fit.observed_swing_deg, 135.0);
    EXPECT_LE(fit.observed_swing_deg, 145.0);
    EXPECT_GE(fit.width, 2.9);
    EXPECT_LE(fit.width, 3.5);
}

TEST(ArctanFit, RecoveryOverSeededNoise) {
    int center_ok = 0, width_ok = 0;
    const double c = 0.4, w = 3.0, swing = 160.0, off = -90.0;
    for (int seed = 0; seed < 100; ++seed) {
        std::mt19937_64 rng(static_cast<std::uint64_t>(seed));
        std::normal_distribution<double> noise(0.0, 1.0);
        std::vector<double> x, y;
        for (int i = 0; i < 101; ++i) {
            x.push_back(-20.0 + 0.4 * i);
            y.push_back(off - swing / 180.0 * std::atan((x.back() - c) / w) * 180.0 / std::numbers::pi + noise(rng));
        }
        const auto fit = fit_arctan_phase(x, y);
        if (std::abs(fit.center - c) <= 3.0 * fit.center_error) ++center_ok;
        if (std::abs(fit.width - w) <= 3.0 * fit.width_error) ++width_ok;
    }
    EXPECT_GE(center_ok, 95);
    EXPECT_GE(width_ok, 95);
}

TEST(ArctanFit, AxisScalingReparameterization) {
    const Scan s = motionless_scan();
    const auto base = fit_arctan_phase(s.delta_pa, s.phase_deg);
    const double factor = 2.5;
    std::vector<double> scaled;
    for (double v : s.delta_pa) scaled.push_back(factor * v);
    const auto fit = fit_arctan_phase(scaled, s.phase_deg);
    EXPECT_NEAR(fit.center, factor * base.center, 1e-6);
    EXPECT_NEAR(fit.width, factor * base.width, 1e-6 * fit.width);
    EXPECT_NEAR(fit.swing_deg, base.swing_deg, 1e-6 * std::abs(base.swing_deg));
    EXPECT_NEAR(fit.observed_swing_deg, base.observed_swing_deg, 1e-4);
}

TEST(ArctanFit, InputValidation) {
    EXPECT_THROW(fit_arctan_phase({1, 2, 3, 4, 5}, {0, 0, 0, 0, 0}), Error);
    EXPECT_THROW(fit_arctan_phase({1, 2, 3, 2, 5, 6}, {0, 1, 2, 3, 4, 5}), Error);
    EXPECT_THROW(fit_arctan_phase({1, 2, 3, 4, 5, 6}, {0, 1, 2, 3, 4, 5}, {1, 1, 1, 0, 1, 1}), Error);
}

TEST(ArctanFit, DescendingAxisGivesSameCurve) {
    const Scan s = motionless_scan();
    std::vector<double> x(s.delta_pa.rbegin(), s.delta_pa.rend()), y(s.phase_deg.rbegin(), s.phase_deg.rend());
    const auto a = fit_arctan_phase(s.delta_pa, s.phase_deg);
    const auto b = fit_arctan_phase(x, y);
    EXPECT_NEAR(a.width, b.width, 1e-6);
    EXPECT_NEAR(a.center, b.center, 1e-6);
}

// ------------------------------------------------------ periodic Gaussian

TEST(PeriodicGaussian, RecoversMeanAcrossTheSeam) {
    PhaseHistogram h = PhaseHistogram::empty(kDefaultHistogramBins);
    for (std::size_t b = 0; b < h.bins(); ++b)
        h.counts[b] = std::llround(periodic_gaussian(h.center(b), 1000.0, 170.0, 30.0));
    const auto fit = fit_periodic_gaussian(h);
    EXPECT_LT(std::abs(angular_difference(fit.mean_deg, 170.0)), 2.0);
    EXPECT_NEAR(fit.sigma_deg, 30.0, 1.0);
    EXPECT_GE(fit.mean_deg, -180.0);
    EXPECT_LT(fit.mean_deg, 180.0);
    EXPECT_GE(fit.mean_uncertainty_deg, 0.0);
}

TEST(PeriodicGaussian, SingleOccupiedBin) {
    PhaseHistogram h = PhaseHistogram::empty(kDefaultHistogramBins);
    h.counts[h.bin_of(30.0)] = 500;
    const auto fit = fit_periodic_gaussian(h);
    EXPECT_NEAR(fit.mean_deg, h.center(h.bin_of(30.0)), 1e-12);
    EXPECT_GE(fit.sigma_deg, h.bin_width() / std::sqrt(12.0) - 1e-12);
}

TEST(PeriodicGaussian, RotationEquivariance) {
    std::mt19937_64 rng(31);
    std::normal_distribution<double> draw(-40.0, 25.0);
    std::vector<double> samples(5000);
    for (auto& v : samples) v = wrap_degrees(draw(rng));
    for (double shift : {90.0, 150.0, -135.0}) {
        std::vector<double> rotated;
        for (double v : samples) rotated.push_back(wrap_degrees(v + shift));
        // 72 bins of 5 deg: these shifts are whole bins, so the histogram is an
        // exact cyclic rotation.
        const auto a = fit_periodic_gaussian(histogram_of(samples, 72));
        const auto b = fit_periodic_gaussian(histogram_of(rotated, 72));
        EXPECT_NEAR(angular_difference(b.mean_deg, a.mean_deg), wrap_degrees(shift), 1e-6);
        EXPECT_NEAR(b.sigma_deg, a.sigma_deg, 1e-6);
        // With the default 8 deg bins the rotation is only approximately a bin shift.
        const auto c = fit_periodic_gaussian(histogram_of(samples, kDefaultHistogramBins));
        const auto d = fit_periodic_gaussian(histogram_of(rotated, kDefaultHistogramBins));
        EXPECT_NEAR(angular_difference(d.mean_deg, c.mean_deg), wrap_degrees(shift), 1.0);
    }
}

TEST(PeriodicGaussian, FlatHistogramIsNotIdentifiable) {
    PhaseHistogram h = PhaseHistogram::empty(kDefaultHistogramBins);
    for (auto& c : h.counts) c = 7;
    try {
        fit_periodic_gaussian(h);
        FAIL() << "expected non-identifiable";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::non_identifiable);
    }
    PhaseHistogram few = PhaseHistogram::empty(kDefaultHistogramBins);
    few.counts[3] = 9;
    EXPECT_THROW(fit_periodic_gaussian(few), Error);
}

TEST(PhaseHistogram, EdgesSpanOnePeriod) {
    const auto h = PhaseHistogram::empty(kDefaultHistogramBins);
    EXPECT_DOUBLE_EQ(h.edges_deg.front(), -180.0);
    EXPECT_DOUBLE_EQ(h.edges_deg.back(), 180.0);
    for (std::size_t b = 1; b < h.edges_deg.size(); ++b) EXPECT_GT(h.edges_deg[b], h.edges_deg[b - 1]);
    EXPECT_NEAR(h.center(h.bin_of(0.0)), 0.0, 1e-12);
    EXPECT_EQ(h.bin_of(180.0), h.bin_of(-180.0));
}

// ------------------------------------------------------- Stark calibration

TEST(Stark, ReferenceCalibrationPoints) {
    const std::vector<StarkPoint> pts{{1400.0, 12.0}, {950.0, -5.0}, {700.0, -14.0}};
    const auto cal = stark_calibration(pts);
    const auto [slope, intercept] = normal_equation_line({1400.0, 950.0, 700.0}, {12.0, -5.0, -14.0});
    EXPECT_NEAR(cal.slope_mhz_per_nw, slope, 1e-12);
    EXPECT_NEAR(cal.intercept_mhz, intercept, 1e-9);
    EXPECT_NEAR(cal.intercept_mhz, -40.0, 2.0);
    EXPECT_NEAR(cal.slope_mhz_per_nw, 0.037, 5e-4);
    EXPECT_NEAR(power_to_detuning(cal, 950.0), -5.0, 0.5);
    EXPECT_DOUBLE_EQ(power_to_detuning(cal, 0.0), cal.intercept_mhz);
    ASSERT_EQ(cal.residuals_mhz.size(), 3u);
    for (double p : {450.0, 700.0, 1234.5, 1700.0}) {
        const double back = detuning_to_power(cal, power_to_detuning(cal, p));
        EXPECT_NEAR(back, p, 1e-9 * p);
    }
}

TEST(Stark, TwoPointsInterpolateExactly) {
    const auto cal = stark_calibration({{100.0, 1.0}, {300.0, 9.0}});
    EXPECT_NEAR(cal.slope_mhz_per_nw, 0.04, 1e-15);
    EXPECT_NEAR(cal.intercept_mhz, -3.0, 1e-12);
    for (double r : cal.residuals_mhz) EXPECT_NEAR(r, 0.0, 1e-12);
}

TEST(Stark, CollinearThirdPointChangesNothing) {
    const auto two = stark_calibration({{100.0, 1.0}, {300.0, 9.0}});
    const auto three = stark_calibration({{100.0, 1.0}, {300.0, 9.0}, {200.0, 5.0}});
    EXPECT_NEAR(three.slope_mhz_per_nw, two.slope_mhz_per_nw, 1e-14);
    EXPECT_NEAR(three.intercept_mhz, two.intercept_mhz, 1e-12);
}

TEST(Stark, IdenticalPowersAreRankDeficient) {
    try {
        stark_calibration({{500.0, 1.0}, {500.0, 3.0}});
        FAIL() << "expected rank deficiency";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::rank_deficiency);
    }
    EXPECT_THROW(stark_calibration({{500.0, 1.0}}), Error);
}
