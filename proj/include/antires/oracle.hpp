#pragma once

// Exact steady state of the driven, damped Jaynes-Cummings system on a
// truncated photon-number basis.
//
// In the frame rotating at the probe frequency (hbar = 1, rates in MHz):
//
//   H = -D_pc a^dag a - D_pa s^dag s + g (a^dag s + s^dag a) + eta (a + a^dag)
//
// with collapse operators sqrt(2 kappa) a and sqrt(2 gamma) s, since kappa and
// gamma are amplitude decay rates. In the weak-drive limit <a> tends to the
// linear coupled-mode result  eta (D_pa + i gamma) / ((D_pa + i gamma)(D_pc + i kappa) - g^2).
//
// The density operator is vectorized column-major, vec(A rho B) = (B^T kron A) vec(rho),
// and the steady state solves L vec(rho) = 0 with one row replaced by Tr(rho) = 1.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "antires/error.hpp"
#include "antires/network.hpp"

namespace antires {

struct JCParams {
    double g = 16.0;
    double gamma = 3.0;
    double kappa = 1.5;
    double delta_pa = 0.0;
    double delta_pc = 0.0;
    double eta = 0.015;
    int cutoff = 4;

    void validate() const {
        if (!(gamma > 0.0) || !(kappa > 0.0)) throw Error(ErrorKind::config, "oracle needs gamma, kappa > 0");
        if (cutoff < 1) throw Error(ErrorKind::config, "oracle photon cutoff must be >= 1");
        if (!(eta >= 0.0)) throw Error(ErrorKind::config, "oracle drive eta must be >= 0");
    }
};

struct DensityDiagnostics {
    double hermiticity_error = 0.0;
    double trace_error = 0.0;
    double min_eigenvalue = 0.0;

    bool valid() const { return hermiticity_error < 1e-10 && trace_error < 1e-12 && min_eigenvalue > -1e-10; }
};

struct OracleResult {
    cplx field;   // <a>
    cplx dipole;  // <s>
    double photon_number = 0.0;
    double g2_zero = 0.0;
    int cutoff = 0;
    double convergence_delta = 0.0;  // relative change of <n> from cutoff to cutoff + 1
    DensityDiagnostics diagnostics;
};

namespace detail {

inline Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
    Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

struct JCOperators {
    Eigen::MatrixXcd a;  // cavity annihilation on the joint space
    Eigen::MatrixXcd s;  // atomic lowering on the joint space
};

// Joint basis |n> (x) |ground, excited>.
inline JCOperators jc_operators(int cutoff) {
    const Eigen::Index levels = cutoff + 1;
    Eigen::MatrixXcd field = Eigen::MatrixXcd::Zero(levels, levels);
    for (Eigen::Index n = 1; n < levels; ++n) field(n - 1, n) = std::sqrt(static_cast<double>(n));
    Eigen::MatrixXcd lower = Eigen::MatrixXcd::Zero(2, 2);
    lower(0, 1) = 1.0;
    return {kron(field, Eigen::MatrixXcd::Identity(2, 2)), kron(Eigen::MatrixXcd::Identity(levels, levels), lower)};
}

struct SolvedState {
    Eigen::MatrixXcd rho;
    JCOperators ops;
};

inline SolvedState solve_density(const JCParams& p, int cutoff) {
    JCOperators ops = jc_operators(cutoff);
    const Eigen::MatrixXcd& a = ops.a;
    const Eigen::MatrixXcd& s = ops.s;
    const Eigen::Index d = a.rows();
    const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(d, d);
    const Eigen::MatrixXcd h = -p.delta_pc * a.adjoint() * a - p.delta_pa * s.adjoint() * s +
                               p.g * (a.adjoint() * s + s.adjoint() * a) + p.eta * (a + a.adjoint());

    const cplx i(0.0, 1.0);
    Eigen::MatrixXcd liouvillian = -i * (kron(id, h) - kron(h.transpose(), id));
    const std::pair<const Eigen::MatrixXcd*, double> channels[] = {{&a, 2.0 * p.kappa}, {&s, 2.0 * p.gamma}};
    for (const auto& [c, rate] : channels) {
        const Eigen::MatrixXcd cdc = c->adjoint() * *c;
        liouvillian += rate * (kron(c->conjugate(), *c) - 0.5 * kron(id, cdc) - 0.5 * kron(cdc.transpose(), id));
    }

    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(d * d);
    liouvillian.row(0).setZero();
    for (Eigen::Index k = 0; k < d; ++k) liouvillian(0, k * d + k) = 1.0;
    rhs[0] = 1.0;

    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(liouvillian);
    if (!(lu.rcond() > 1e-15)) throw Error(ErrorKind::oracle, "trace-augmented Liouvillian is singular");
    const Eigen::VectorXcd v = lu.solve(rhs);
    Eigen::MatrixXcd rho(d, d);
    for (Eigen::Index col = 0; col < d; ++col) rho.col(col) = v.segment(col * d, d);
    return {std::move(rho), std::move(ops)};
}

inline double photon_number(const SolvedState& st) { return (st.rho * st.ops.a.adjoint() * st.ops.a).trace().real(); }

}  // namespace detail

inline DensityDiagnostics density_diagnostics(const Eigen::MatrixXcd& rho) {
    DensityDiagnostics diag;
    diag.hermiticity_error = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
    diag.trace_error = std::abs(rho.trace() - cplx(1.0, 0.0));
    const Eigen::MatrixXcd herm = 0.5 * (rho + rho.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(herm, Eigen::EigenvaluesOnly);
    diag.min_eigenvalue = eig.eigenvalues().minCoeff();
    return diag;
}

// Raises the cutoff from params.cutoff until <n> changes by less than
// `tolerance` (relative) when the cutoff grows by one.
inline OracleResult lindblad_steady_state(const JCParams& params, double tolerance = 1e-3, int max_cutoff = 24) {
    params.validate();
    int cutoff = params.cutoff;
    detail::SolvedState current = detail::solve_density(params, cutoff);
    double n_current = detail::photon_number(current);
    for (;;) {
        if (cutoff + 1 > max_cutoff)
            throw Error(ErrorKind::oracle, "photon cutoff did not converge by " + std::to_string(max_cutoff) +
                                               " (<n> = " + std::to_string(n_current) + ")");
        detail::SolvedState next = detail::solve_density(params, cutoff + 1);
        const double n_next = detail::photon_number(next);
        const double delta = std::abs(n_next - n_current);
        if (delta <= tolerance * std::abs(n_next)) {
            const auto& a = current.ops.a;
            const auto& s = current.ops.s;
            const auto& rho = current.rho;
            OracleResult r;
            r.field = (rho * a).trace();
            r.dipole = (rho * s).trace();
            r.photon_number = n_current;
            r.cutoff = cutoff;
            r.convergence_delta = n_next > 0.0 ? delta / n_next : 0.0;
            r.diagnostics = density_diagnostics(rho);
            if (!(n_current > 0.0))
                throw Error(ErrorKind::oracle, "mean photon number is zero: g2(0) is undefined");
            const Eigen::MatrixXcd ad = a.adjoint();
            r.g2_zero = (rho * ad * ad * a * a).trace().real() / (n_current * n_current);
            return r;
        }
        current = std::move(next);
        n_current = n_next;
        ++cutoff;
    }
}

struct LinearLimitRow {
    double eta = 0.0;
    cplx oracle_field;
    cplx linear_field;
    double deviation = 0.0;  // |oracle - linear| / |linear|
    OracleResult oracle;
};

struct LinearLimitReport {
    std::vector<LinearLimitRow> rows;
    bool monotone = false;
    double final_deviation = 0.0;
    double weak_drive_scaling_deviation = 0.0;  // |<a>/eta| change between the two smallest etas
    bool all_states_valid = false;
};

// Compares the oracle with the linear closed form for each eta (descending).
// `cutoff_tolerance` is passed to lindblad_steady_state.
inline LinearLimitReport linear_limit_check(const JCParams& base, const std::vector<double>& etas,
                                            double cutoff_tolerance = 1e-3) {
    if (etas.empty()) throw Error(ErrorKind::config, "linear-limit check needs at least one drive value");
    for (std::size_t i = 1; i < etas.size(); ++i)
        if (!(etas[i] < etas[i - 1])) throw Error(ErrorKind::config, "linear-limit drive values must descend");
    LinearLimitReport report;
    report.all_states_valid = true;
    for (double eta : etas) {
        JCParams p = base;
        p.eta = eta;
        LinearLimitRow row;
        row.eta = eta;
        row.oracle = lindblad_steady_state(p, cutoff_tolerance);
        row.oracle_field = row.oracle.field;
        row.linear_field = closed_form_two_mode(p.delta_pa, p.delta_pc, p.gamma, p.kappa, p.g, eta);
        row.deviation = std::abs(row.oracle_field - row.linear_field) / std::abs(row.linear_field);
        report.all_states_valid = report.all_states_valid && row.oracle.diagnostics.valid();
        report.rows.push_back(row);
    }
    report.monotone = true;
    for (std::size_t i = 1; i < report.rows.size(); ++i) {
        // Allow for solver round-off once deviations reach machine precision.
        if (report.rows[i].deviation > report.rows[i - 1].deviation * (1.0 + 1e-6) + 1e-12) report.monotone = false;
    }
    report.final_deviation = report.rows.back().deviation;
    if (report.rows.size() >= 2) {
        const auto& a = report.rows[report.rows.size() - 2];
        const auto& b = report.rows.back();
        const cplx ra = a.oracle_field / a.eta;
        const cplx rb = b.oracle_field / b.eta;
        report.weak_drive_scaling_deviation = std::abs(ra - rb) / std::abs(rb);
    }
    return report;
}

}  // namespace antires
