#pragma once

// Resonances (poles) and antiresonances (zeros) of a driven mode network.
//
// The response of node d to a drive on node d is a_d = eta * det(M_dd) / det(M),
// where M_dd removes row and column d. With M(p) = p I - H, the poles are the
// eigenvalues of H and the zeros are the eigenvalues of H with the driven node
// deleted: the resonances the network would have if that node were held unexcited.
// Both are reported as (center, half_width) with eigenvalue = center - i half_width.

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "antires/network.hpp"
#include "antires/spectrum.hpp"

namespace antires {

struct ResonancePole {
    double center_mhz = 0.0;
    double half_width_mhz = 0.0;
    int multiplicity = 1;
};

struct AntiresonanceZero {
    std::string drive_label;
    double center_mhz = 0.0;
    double half_width_mhz = 0.0;
    // Numeric detection only.
    double prominence_db = 0.0;
    bool near_boundary = false;
    bool rational_refined = false;
};

namespace detail {

struct PoleValue {
    double center;
    double half_width;
};

inline std::vector<PoleValue> sorted_eigen_poles(const Eigen::MatrixXcd& h) {
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(h, false);
    if (solver.info() != Eigen::Success) throw Error(ErrorKind::numeric, "eigenvalue solver failed");
    std::vector<PoleValue> out;
    out.reserve(static_cast<std::size_t>(h.rows()));
    for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) {
        const cplx lambda = solver.eigenvalues()[i];
        if (!std::isfinite(lambda.real()) || !std::isfinite(lambda.imag()))
            throw Error(ErrorKind::numeric, "eigenvalue solver returned non-finite value");
        out.push_back({lambda.real(), -lambda.imag()});
    }
    std::sort(out.begin(), out.end(), [](const PoleValue& a, const PoleValue& b) {
        if (a.center != b.center) return a.center < b.center;
        return a.half_width < b.half_width;
    });
    return out;
}

inline Eigen::MatrixXcd delete_node(const Eigen::MatrixXcd& h, Eigen::Index d) {
    const Eigen::Index n = h.rows();
    Eigen::MatrixXcd out(n - 1, n - 1);
    for (Eigen::Index j = 0, r = 0; j < n; ++j) {
        if (j == d) continue;
        for (Eigen::Index k = 0, c = 0; k < n; ++k) {
            if (k == d) continue;
            out(r, c++) = h(j, k);
        }
        ++r;
    }
    return out;
}

inline double interpolate(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    if (it == xs.begin()) return ys.front();
    if (it == xs.end()) return ys.back();
    const auto k = static_cast<std::size_t>(it - xs.begin());
    const double t = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
    return ys[k - 1] + t * (ys[k] - ys[k - 1]);
}

}  // namespace detail

// Eigenvalues whose centers and widths agree within this tolerance are merged.
inline constexpr double kDegeneracyToleranceMhz = 1e-6;

inline std::vector<ResonancePole> resonances(const ModeNetwork& network) {
    const auto values = detail::sorted_eigen_poles(coupling_hamiltonian(network));
    std::vector<ResonancePole> poles;
    for (const auto& v : values) {
        if (!poles.empty() && std::abs(poles.back().center_mhz - v.center) <= kDegeneracyToleranceMhz &&
            std::abs(poles.back().half_width_mhz - v.half_width) <= kDegeneracyToleranceMhz) {
            ++poles.back().multiplicity;
            continue;
        }
        poles.push_back({v.center, v.half_width, 1});
    }
    return poles;
}

inline std::vector<AntiresonanceZero> antiresonances(const ModeNetwork& network,
                                                     const std::string& drive_label) {
    const auto d = static_cast<Eigen::Index>(network.index_of(drive_label));
    if (network.size() < 2) return {};
    const auto values = detail::sorted_eigen_poles(detail::delete_node(coupling_hamiltonian(network), d));
    std::vector<AntiresonanceZero> zeros;
    zeros.reserve(values.size());
    for (const auto& v : values) zeros.push_back({drive_label, v.center, v.half_width});
    return zeros;
}

// Drops pole/zero pairs that coincide: they cancel in the driven node's response
// (for example a mode that is decoupled from the driven node).
struct ObservablePolesZeros {
    std::vector<ResonancePole> poles;
    std::vector<AntiresonanceZero> zeros;
};

inline ObservablePolesZeros cancel_pole_zero_pairs(std::vector<ResonancePole> poles,
                                                   std::vector<AntiresonanceZero> zeros,
                                                   double tolerance_mhz = kDegeneracyToleranceMhz) {
    ObservablePolesZeros out;
    for (const auto& z : zeros) {
        bool cancelled = false;
        for (auto& p : poles) {
            if (p.multiplicity > 0 && std::abs(p.center_mhz - z.center_mhz) <= tolerance_mhz &&
                std::abs(p.half_width_mhz - z.half_width_mhz) <= tolerance_mhz) {
                --p.multiplicity;
                cancelled = true;
                break;
            }
        }
        if (!cancelled) out.zeros.push_back(z);
    }
    for (const auto& p : poles)
        if (p.multiplicity > 0) out.poles.push_back(p);
    return out;
}

struct NumericZeroOptions {
    double prominence_db = 3.0;
    // Candidates within this many grid points of either edge are flagged.
    std::size_t boundary_margin = 2;
    // Half-size of the rational refinement window in units of the phase width.
    double refine_window_widths = 2.5;
    std::size_t refine_min_points = 12;
};

namespace detail {

// Linearized (Levy) fit a(s) (1 + q1 s + ... + q_q s^q) = p0 + p1 s (+ p2 s^2)
// on s = (x - c) / w, numerator degree m in {1, 2}. Returns the numerator root
// nearest the window center mapped back to the probe axis, or nothing if the
// system is rank-deficient (the data are explained by a lower order).
inline std::optional<cplx> rational_zero(const std::vector<double>& x, const std::vector<cplx>& a, std::size_t lo,
                                         std::size_t hi, double c, double w, int m, int q) {
    const auto rows = static_cast<Eigen::Index>(hi - lo);
    const Eigen::Index cols = m + 1 + q;
    Eigen::MatrixXcd A(rows, cols);
    Eigen::VectorXcd b(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const std::size_t i = lo + static_cast<std::size_t>(r);
        const double s = (x[i] - c) / w;
        double sk = 1.0;
        for (int k = 0; k <= m; ++k, sk *= s) A(r, k) = sk;
        sk = s;
        for (int k = 1; k <= q; ++k, sk *= s) A(r, m + k) = -a[i] * sk;
        b[r] = a[i];
    }
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(A);
    if (qr.rank() < cols) return std::nullopt;
    const Eigen::VectorXcd coef = qr.solve(b);
    const cplx p0 = coef[0], p1 = coef[1], p2 = m >= 2 ? coef[2] : cplx(0.0);
    std::vector<cplx> roots;
    if (std::abs(p2) > 1e-14 * (std::abs(p1) + std::abs(p0))) {
        const cplx disc = std::sqrt(p1 * p1 - 4.0 * p2 * p0);
        roots = {(-p1 + disc) / (2.0 * p2), (-p1 - disc) / (2.0 * p2)};
    } else if (std::abs(p1) > 0.0) {
        roots = {-p0 / p1};
    }
    std::optional<cplx> best;
    for (const cplx r : roots) {
        if (!std::isfinite(r.real()) || !std::isfinite(r.imag())) continue;
        if (!best || std::abs(r) < std::abs(*best)) best = r;
    }
    if (!best) return std::nullopt;
    return c + w * *best;
}

}  // namespace detail

// Locates antiresonances directly in a swept spectrum of the driven node.
// Candidates are log-magnitude minima with sufficient prominence. A first
// estimate takes the center from parabolic refinement and the half-width from
// the central pi/2 fall of the unwrapped phase (pi/4 on each side of the phase
// at the center), which is w for a bare arctangent profile. The normal-mode
// background skews both, so they are then refined by a local rational fit of
// the complex amplitude whose numerator root is the zero.
inline std::vector<AntiresonanceZero> detect_antiresonances_numeric(
    const ComplexSpectrum& spectrum, const std::string& drive_label, const NumericZeroOptions& options = {}) {
    const ModeChannel& ch = spectrum.channel(drive_label);
    const auto& x = spectrum.probe_mhz;
    const std::size_t n = x.size();
    std::vector<AntiresonanceZero> found;
    if (n < 3) return found;

    std::vector<double> db(n);
    for (std::size_t i = 0; i < n; ++i)
        db[i] = ch.magnitude[i] > 0.0 ? 20.0 * std::log10(ch.magnitude[i]) : -1e300;
    const auto& phase = ch.phase_unwrapped;
    constexpr double quarter_pi = std::numbers::pi / 4.0;

    // Grid endpoints are never candidates: a response falling toward the edge of
    // the scan is not an antiresonance.
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (!(db[i] < db[i - 1] && db[i] <= db[i + 1])) continue;

        // Topographic prominence. A side that runs into the grid edge without
        // descending below the candidate is open and does not bound it.
        double left_max = db[i];
        bool left_open = true;
        for (std::size_t j = i; j-- > 0;) {
            if (db[j] < db[i]) {
                left_open = false;
                break;
            }
            left_max = std::max(left_max, db[j]);
        }
        double right_max = db[i];
        bool right_open = true;
        for (std::size_t j = i + 1; j < n; ++j) {
            if (db[j] < db[i]) {
                right_open = false;
                break;
            }
            right_max = std::max(right_max, db[j]);
        }
        double prominence;
        if (left_open && right_open)
            prominence = std::max(left_max, right_max) - db[i];
        else if (left_open)
            prominence = right_max - db[i];
        else if (right_open)
            prominence = left_max - db[i];
        else
            prominence = std::min(left_max, right_max) - db[i];
        if (prominence < options.prominence_db) continue;

        const double curvature = db[i - 1] - 2.0 * db[i] + db[i + 1];
        double offset = curvature > 0.0 ? 0.5 * (db[i - 1] - db[i + 1]) / curvature : 0.0;
        offset = std::clamp(offset, -0.5, 0.5);
        const double center = x[i] + offset * (x[i + 1] - x[i - 1]) / 2.0;
        const double phase_center = detail::interpolate(x, phase, center);

        bool hit_edge = false;
        double left = std::numeric_limits<double>::quiet_NaN();
        for (std::size_t k = i; k-- > 0;) {
            if (phase[k] >= phase_center + quarter_pi) {
                const double t = (phase_center + quarter_pi - phase[k + 1]) / (phase[k] - phase[k + 1]);
                left = x[k + 1] + t * (x[k] - x[k + 1]);
                break;
            }
            if (k == 0) hit_edge = true;
        }
        double right = std::numeric_limits<double>::quiet_NaN();
        for (std::size_t k = i + 1; k < n; ++k) {
            if (phase[k] <= phase_center - quarter_pi) {
                const double t = (phase_center - quarter_pi - phase[k - 1]) / (phase[k] - phase[k - 1]);
                right = x[k - 1] + t * (x[k] - x[k - 1]);
                break;
            }
            if (k + 1 == n) hit_edge = true;
        }

        double half_width = 0.0;
        if (std::isfinite(left) && std::isfinite(right))
            half_width = 0.5 * (right - left);
        else if (std::isfinite(left))
            half_width = center - left;
        else if (std::isfinite(right))
            half_width = right - center;

        AntiresonanceZero z;
        z.drive_label = drive_label;
        z.center_mhz = center;
        z.half_width_mhz = half_width;
        z.prominence_db = prominence;
        z.near_boundary = hit_edge || i < options.boundary_margin || i + options.boundary_margin >= n - 1;

        const double scale = half_width > 0.0 ? half_width : 10.0 * std::abs(x[1] - x[0]);
        const double reach = options.refine_window_widths * scale;
        const auto lo = static_cast<std::size_t>(std::lower_bound(x.begin(), x.end(), center - reach) - x.begin());
        const auto hi = static_cast<std::size_t>(std::upper_bound(x.begin(), x.end(), center + reach) - x.begin());
        if (hi > lo && hi - lo >= options.refine_min_points) {
            auto root = detail::rational_zero(x, ch.amplitude, lo, hi, center, scale, 2, 3);
            if (!root) root = detail::rational_zero(x, ch.amplitude, lo, hi, center, scale, 1, 2);
            if (root && -root->imag() > 0.0 && std::abs(root->real() - center) <= reach) {
                z.center_mhz = root->real();
                z.half_width_mhz = -root->imag();
                z.rational_refined = true;
            }
        }
        if (!(z.half_width_mhz > 0.0)) continue;
        found.push_back(z);
    }
    return found;
}

}  // namespace antires
