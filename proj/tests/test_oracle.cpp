#include <gtest/gtest.h>

#include <cmath>

#include "antires/oracle.hpp"

using namespace antires;

namespace {

const double kNormalMode = std::sqrt(16.0 * 16.0 - 0.25 * 1.5 * 1.5);

JCParams preset(double delta_pa, double delta_pc, double eta) {
    JCParams p;
    p.delta_pa = delta_pa;
    p.delta_pc = delta_pc;
    p.eta = eta;
    return p;
}

// Brute-force reference: integrate the master equation with RK4 from the
// vacuum until it settles. Operators are built element by element on the
// basis |n, s> with index 2 n + s (s = 0 ground, 1 excited).
Eigen::MatrixXcd integrate_master_equation(const JCParams& p, int cutoff, double t_end, double dt) {
    const int dim = 2 * (cutoff + 1);
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(dim, dim), s = Eigen::MatrixXcd::Zero(dim, dim);
    for (int n = 1; n <= cutoff; ++n)
        for (int q = 0; q < 2; ++q) a(2 * (n - 1) + q, 2 * n + q) = std::sqrt(static_cast<double>(n));
    for (int n = 0; n <= cutoff; ++n) s(2 * n, 2 * n + 1) = 1.0;
    const Eigen::MatrixXcd ad = a.adjoint(), sd = s.adjoint();
    const Eigen::MatrixXcd h = -p.delta_pc * ad * a - p.delta_pa * sd * s + p.g * (ad * s + sd * a) + p.eta * (a + ad);
    const Eigen::MatrixXcd ca = std::sqrt(2.0 * p.kappa) * a, cs = std::sqrt(2.0 * p.gamma) * s;
    const cplx i(0.0, 1.0);
    auto rhs = [&](const Eigen::MatrixXcd& rho) -> Eigen::MatrixXcd {
        Eigen::MatrixXcd out = -i * (h * rho - rho * h);
        for (const Eigen::MatrixXcd* c : {&ca, &cs}) {
            const Eigen::MatrixXcd cdc = c->adjoint() * *c;
            out += *c * rho * c->adjoint() - 0.5 * (cdc * rho + rho * cdc);
        }
        return out;
    };
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(dim, dim);
    rho(0, 0) = 1.0;
    const int steps = static_cast<int>(std::lround(t_end / dt));
    for (int k = 0; k < steps; ++k) {
        const Eigen::MatrixXcd k1 = rhs(rho);
        const Eigen::MatrixXcd k2 = rhs(rho + 0.5 * dt * k1);
        const Eigen::MatrixXcd k3 = rhs(rho + 0.5 * dt * k2);
        const Eigen::MatrixXcd k4 = rhs(rho + dt * k3);
        rho += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return rho;
}

}  // namespace

TEST(Oracle, UncoupledCavityIsCoherent) {
    for (double dpc : {-4.0, 0.0, 2.5}) {
        JCParams p = preset(1.0, dpc, 0.5);
        p.g = 0.0;
        const auto r = lindblad_steady_state(p, 1e-6);
        const cplx expected = p.eta / cplx(dpc, p.kappa);
        EXPECT_NEAR(std::abs(r.field - expected), 0.0, 1e-5 * std::abs(expected));
        EXPECT_NEAR(r.g2_zero, 1.0, 1e-4);
        EXPECT_TRUE(r.diagnostics.valid());
    }
}

TEST(Oracle, MatchesTimeIntegratedMasterEquation) {
    for (const auto& p : {preset(0.0, 0.0, 0.3), preset(2.0, -1.0, 1.0)}) {
        const int cutoff = 5;
        const auto solved = detail::solve_density(p, cutoff);
        const Eigen::MatrixXcd evolved = integrate_master_equation(p, cutoff, 20.0, 2e-3);
        EXPECT_LT((solved.rho - evolved).norm(), 1e-7);
    }
}

TEST(Oracle, WeakDriveMatchesClosedForm) {
    const double eta = 0.01 * 1.5;
    const auto r = lindblad_steady_state(preset(0.0, 0.0, eta));
    const cplx linear = closed_form_two_mode(0.0, 0.0, 3.0, 1.5, 16.0, eta);
    EXPECT_LT(std::abs(r.field - linear) / std::abs(linear), 1e-2);
    EXPECT_GE(r.photon_number, std::norm(r.field) * (1.0 - 1e-9));
    EXPECT_GE(r.g2_zero, 0.0);
}

TEST(Oracle, LinearLimitSequence) {
    const auto report = linear_limit_check(preset(0.0, 0.0, 0.0), {0.3 * 1.5, 0.1 * 1.5, 0.03 * 1.5, 0.01 * 1.5});
    ASSERT_EQ(report.rows.size(), 4u);
    EXPECT_TRUE(report.monotone);
    EXPECT_LT(report.final_deviation, 1e-3);
    EXPECT_LT(report.weak_drive_scaling_deviation, 1e-3);
    EXPECT_TRUE(report.all_states_valid);
    for (std::size_t i = 1; i < report.rows.size(); ++i) EXPECT_LT(report.rows[i].deviation, report.rows[i - 1].deviation);
}

TEST(Oracle, UncoupledLinearLimitHasNoDeviation) {
    JCParams base = preset(0.0, 0.0, 0.0);
    base.g = 0.0;
    // Exact up to photon-number truncation, which the tight cutoff tolerance removes.
    const auto report = linear_limit_check(base, {0.45, 0.15, 0.045, 0.015}, 1e-10);
    for (const auto& row : report.rows) EXPECT_LT(row.deviation, 1e-8);
}

TEST(Oracle, StrongDriveLeavesLinearRegime) {
    const auto report = linear_limit_check(preset(0.0, 0.0, 0.0), {3.0 * 1.5});
    EXPECT_GT(report.rows[0].deviation, 0.1);
}

TEST(Oracle, DensityOperatorValidity) {
    for (double dpa : {-16.0, -3.0, 0.0, 7.0})
        for (double eta : {0.015, 0.3, 1.5}) {
            const auto r = lindblad_steady_state(preset(dpa, dpa, eta));
            EXPECT_TRUE(r.diagnostics.valid()) << dpa << " " << eta;
            EXPECT_LT(r.diagnostics.hermiticity_error, 1e-10);
            EXPECT_LT(r.diagnostics.trace_error, 1e-12);
            EXPECT_GT(r.diagnostics.min_eigenvalue, -1e-10);
        }
}

TEST(Oracle, PhotonNumberConvergesMonotonicallyWithCutoff) {
    const JCParams p = preset(0.0, 0.0, 0.15);
    double previous = 0.0, previous_step = 1e300;
    for (int cutoff = 1; cutoff <= 8; ++cutoff) {
        const double n = detail::photon_number(detail::solve_density(p, cutoff));
        if (cutoff > 1) {
            const double step = std::abs(n - previous);
            if (step < 1e-14 * n) break;  // converged to round-off
            EXPECT_LE(step, previous_step);
            previous_step = step;
        }
        previous = n;
    }
    EXPECT_LT(previous_step, 1e-6 * previous);
}

TEST(Oracle, DetuningReflection) {
    // Flipping every detuning maps <a> to -conj(<a>) for this drive convention.
    for (const auto& [dpa, dpc] : {std::pair{2.0, 5.0}, {-7.0, 1.0}, {16.0, 16.0}}) {
        const auto plus = lindblad_steady_state(preset(dpa, dpc, 0.3), 1e-8);
        const auto minus = lindblad_steady_state(preset(-dpa, -dpc, 0.3), 1e-8);
        EXPECT_NEAR(std::abs(minus.field + std::conj(plus.field)), 0.0, 1e-9 * std::abs(plus.field));
        EXPECT_NEAR(minus.g2_zero, plus.g2_zero, 1e-9 * plus.g2_zero);
    }
}

TEST(Oracle, IntensityFluctuationsAtAntiresonance) {
    const double eta = 0.015;
    const auto anti = lindblad_steady_state(preset(0.0, 0.0, eta));
    const auto normal = lindblad_steady_state(preset(kNormalMode, kNormalMode, eta));
    EXPECT_GT(anti.g2_zero / normal.g2_zero, 10.0);
    // Regression constants for these parameters.
    EXPECT_NEAR(anti.g2_zero, 713.56, 0.5);
    EXPECT_NEAR(normal.g2_zero, 0.58323, 1e-4);
    EXPECT_NEAR(anti.g2_zero / normal.g2_zero, 1223.5, 1.5);
}

TEST(Oracle, ZeroDriveHasUndefinedG2) {
    try {
        lindblad_steady_state(preset(0.0, 0.0, 0.0));
        FAIL() << "expected oracle error";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::oracle);
    }
}

TEST(Oracle, RejectsInvalidParameters) {
    JCParams p = preset(0.0, 0.0, 0.1);
    p.kappa = 0.0;
    EXPECT_THROW(lindblad_steady_state(p), Error);
    p = preset(0.0, 0.0, 0.1);
    p.cutoff = 0;
    EXPECT_THROW(lindblad_steady_state(p), Error);
    EXPECT_THROW(linear_limit_check(preset(0, 0, 0), {0.1, 0.3}), Error);
}
