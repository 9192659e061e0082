#pragma once

// Levenberg-Marquardt weighted nonlinear least squares.
//
// Minimizes sum_i w_i (y_i - f(x_i; p))^2 with multiplicative damping on the
// diagonal of the normal equations (lambda starts at 1e-3, x10 on a rejected
// step, /10 on an accepted one). The Jacobian is taken by central differences
// unless the model supplies one.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "antires/error.hpp"

namespace antires {

struct NllsOptions {
    double relative_step_tolerance = 1e-10;
    double relative_cost_tolerance = 1e-10;
    std::size_t max_iterations = 200;
    double initial_damping = 1e-3;
    // Scale the covariance by the reduced chi-square (weights treated as relative).
    bool scale_covariance = true;
};

struct NllsResult {
    Eigen::VectorXd parameters;
    Eigen::MatrixXd covariance;
    Eigen::VectorXd standard_errors;
    double cost = 0.0;  // weighted sum of squared residuals
    double residual_norm = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    std::vector<double> cost_trace;  // cost after each accepted iteration
};

using ModelFn = std::function<double(double x, const Eigen::VectorXd& p)>;

namespace detail {

inline Eigen::VectorXd residuals(const ModelFn& model, const std::vector<double>& x, const std::vector<double>& y,
                                 const Eigen::VectorXd& sqrt_w, const Eigen::VectorXd& p) {
    Eigen::VectorXd r(static_cast<Eigen::Index>(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        r[k] = sqrt_w[k] * (y[i] - model(x[i], p));
    }
    return r;
}

// Jacobian of the weighted model values (d/dp of sqrt(w) f).
inline Eigen::MatrixXd jacobian(const ModelFn& model, const std::vector<double>& x, const Eigen::VectorXd& sqrt_w,
                                const Eigen::VectorXd& p) {
    const auto n = static_cast<Eigen::Index>(x.size());
    Eigen::MatrixXd jac(n, p.size());
    for (Eigen::Index c = 0; c < p.size(); ++c) {
        const double h = 1e-6 * std::max(1.0, std::abs(p[c]));
        Eigen::VectorXd hi = p, lo = p;
        hi[c] += h;
        lo[c] -= h;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double xi = x[static_cast<std::size_t>(i)];
            jac(i, c) = sqrt_w[i] * (model(xi, hi) - model(xi, lo)) / (2.0 * h);
        }
    }
    return jac;
}

}  // namespace detail

// `weights` may be empty (unit weights) or hold one non-negative weight per point.
inline NllsResult fit_nlls(const ModelFn& model, Eigen::VectorXd initial, const std::vector<double>& x,
                           const std::vector<double>& y, const std::vector<double>& weights = {},
                           const NllsOptions& options = {}) {
    if (x.size() != y.size()) throw Error(ErrorKind::config, "fit data x and y differ in length");
    if (!weights.empty() && weights.size() != x.size())
        throw Error(ErrorKind::config, "fit weights differ in length from data");
    if (x.size() < static_cast<std::size_t>(initial.size()))
        throw Error(ErrorKind::rank_deficiency, "fewer data points than parameters");
    for (std::size_t i = 0; i < x.size(); ++i)
        if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw Error(ErrorKind::config, "fit data is not finite");

    const auto n = static_cast<Eigen::Index>(x.size());
    Eigen::VectorXd sqrt_w = Eigen::VectorXd::Ones(n);
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (!(weights[i] >= 0.0)) throw Error(ErrorKind::config, "fit weights must be non-negative");
        sqrt_w[static_cast<Eigen::Index>(i)] = std::sqrt(weights[i]);
    }

    Eigen::VectorXd p = std::move(initial);
    Eigen::VectorXd r = detail::residuals(model, x, y, sqrt_w, p);
    double cost = r.squaredNorm();
    double lambda = options.initial_damping;

    NllsResult result;
    result.cost_trace.push_back(cost);
    std::ostringstream trace;

    for (std::size_t iter = 1; iter <= options.max_iterations; ++iter) {
        result.iterations = iter;
        const Eigen::MatrixXd jac = detail::jacobian(model, x, sqrt_w, p);
        const Eigen::MatrixXd jtj = jac.transpose() * jac;
        const Eigen::VectorXd jtr = jac.transpose() * r;

        bool accepted = false;
        double step_norm = 0.0;
        double new_cost = cost;
        while (lambda < 1e16) {
            Eigen::MatrixXd a = jtj;
            for (Eigen::Index d = 0; d < a.rows(); ++d) a(d, d) += lambda * std::max(jtj(d, d), 1e-300);
            const Eigen::VectorXd step = a.ldlt().solve(jtr);
            if (!step.allFinite()) {
                lambda *= 10.0;
                continue;
            }
            const Eigen::VectorXd trial = p + step;
            const Eigen::VectorXd trial_r = detail::residuals(model, x, y, sqrt_w, trial);
            const double trial_cost = trial_r.squaredNorm();
            if (std::isfinite(trial_cost) && trial_cost <= cost) {
                step_norm = step.norm() / (p.norm() + 1e-30);
                p = trial;
                r = trial_r;
                new_cost = trial_cost;
                lambda = std::max(lambda / 10.0, 1e-12);
                accepted = true;
                break;
            }
            lambda *= 10.0;
        }
        trace << "iter " << iter << " cost " << new_cost << " lambda " << lambda << '\n';

        if (!accepted) {
            // No downhill step at any damping: p is a stationary point.
            result.converged = true;
            break;
        }
        const double cost_change = (cost - new_cost) / std::max(cost, 1e-300);
        cost = new_cost;
        result.cost_trace.push_back(cost);
        if ((step_norm < options.relative_step_tolerance && cost_change < options.relative_cost_tolerance) ||
            cost <= 1e-28 * static_cast<double>(n)) {
            result.converged = true;
            break;
        }
    }

    if (!result.converged)
        throw Error(ErrorKind::fit_nonconvergence,
                    "least-squares fit did not converge in " + std::to_string(options.max_iterations) +
                        " iterations\n" + trace.str());

    const Eigen::MatrixXd jac = detail::jacobian(model, x, sqrt_w, p);
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(jtj);
    lu.setThreshold(1e-12);
    if (lu.rank() < jtj.rows())
        throw Error(ErrorKind::rank_deficiency, "normal equations are singular at the optimum");

    result.parameters = p;
    result.cost = cost;
    result.residual_norm = std::sqrt(cost);
    result.covariance = lu.inverse();
    const auto dof = static_cast<double>(n - p.size());
    if (options.scale_covariance && dof > 0.0) result.covariance *= cost / dof;
    result.standard_errors = result.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
    return result;
}

}  // namespace antires
