#pragma once

// Shared generators and independent reference computations for the test suites.

#include <complex>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "antires/network.hpp"

namespace antires::testing {

// Random connected network with `n` modes. Frequencies and couplings are drawn
// from the given ranges; a spanning chain guarantees connectivity.
struct RandomNetworkSpec {
    std::size_t modes = 4;
    double frequency_span = 20.0;
    double coupling_min = 1.0;
    double coupling_max = 6.0;
    double decay_min = 0.05;
    double decay_max = 0.2;
    double extra_edge_probability = 0.3;
};

inline ModeNetwork random_network(std::mt19937_64& rng, const RandomNetworkSpec& spec = {}) {
    std::uniform_real_distribution<double> freq(-spec.frequency_span, spec.frequency_span);
    std::uniform_real_distribution<double> coupling(spec.coupling_min, spec.coupling_max);
    std::uniform_real_distribution<double> decay(spec.decay_min, spec.decay_max);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Mode> modes;
    for (std::size_t i = 0; i < spec.modes; ++i)
        modes.push_back({"n" + std::to_string(i + 1), i % 2 ? ModeKind::emitter : ModeKind::resonator, freq(rng),
                         decay(rng)});
    const auto n = static_cast<Eigen::Index>(spec.modes);
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index j = 0; j + 1 < n; ++j) c(j, j + 1) = c(j + 1, j) = coupling(rng);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index k = j + 2; k < n; ++k)
            if (unit(rng) < spec.extra_edge_probability) c(j, k) = c(k, j) = coupling(rng);
    Eigen::VectorXcd d = Eigen::VectorXcd::Zero(n);
    d[0] = 1.0;
    return ModeNetwork(std::move(modes), std::move(c), std::move(d));
}

// Roots of z^2 + b z + c (complex coefficients).
inline std::pair<std::complex<double>, std::complex<double>> quadratic_roots(std::complex<double> b,
                                                                             std::complex<double> c) {
    const std::complex<double> disc = std::sqrt(b * b - 4.0 * c);
    return {(-b + disc) / 2.0, (-b - disc) / 2.0};
}

// Cramer's-rule response of node `d` to a unit drive on node `d`:
// det(M with column d replaced by e_d) / det(M) = minor_dd / det(M).
inline std::complex<double> cramer_driven_response(const ModeNetwork& net, std::size_t d, double probe) {
    Eigen::MatrixXcd m = build_dynamical_matrix(net, probe);
    Eigen::MatrixXcd replaced = m;
    replaced.col(static_cast<Eigen::Index>(d)).setZero();
    replaced(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d)) = 1.0;
    return replaced.determinant() / m.determinant();
}

}  // namespace antires::testing
