#pragma once

// Driven, damped, linearly coupled mode networks and their steady-state response.
//
// Units: every frequency and rate is w/2pi in MHz. Decays are amplitude
// half-widths (gamma for emitters, kappa for resonators). The steady state of
//
//     d a_j/dt = -i (w_j - w_p) a_j - decay_j a_j - i sum_k g_jk a_k - i drive_j
//
// in the frame rotating at the probe frequency w_p solves M a = drive with
//
//     M_jj = (probe - w_j) + i decay_j,    M_jk = -g_jk  (j != k).
//
// For a cavity coupled to one emitter and driven on the cavity, the cavity entry
// reduces to  eta (D_pa + i gamma) / ((D_pa + i gamma)(D_pc + i kappa) - g^2).

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "antires/error.hpp"

namespace antires {

using cplx = std::complex<double>;

enum class ModeKind { emitter, resonator };

inline const char* to_string(ModeKind kind) noexcept {
    return kind == ModeKind::emitter ? "emitter" : "resonator";
}

struct Mode {
    std::string label;
    ModeKind kind = ModeKind::resonator;
    double frequency_mhz = 0.0;
    double decay_mhz = 1.0;
};

class ModeNetwork {
public:
    ModeNetwork() = default;

    // Throws Error(invalid_network) unless decays > 0, frequencies finite,
    // labels unique, couplings square/symmetric/zero-diagonal and sized to match.
    ModeNetwork(std::vector<Mode> modes, Eigen::MatrixXd couplings, Eigen::VectorXcd drive)
        : modes_(std::move(modes)), couplings_(std::move(couplings)), drive_(std::move(drive)) {
        validate();
    }

    std::size_t size() const noexcept { return modes_.size(); }
    const std::vector<Mode>& modes() const noexcept { return modes_; }
    const Mode& mode(std::size_t i) const { return modes_.at(i); }
    const Eigen::MatrixXd& couplings() const noexcept { return couplings_; }
    const Eigen::VectorXcd& drive() const noexcept { return drive_; }

    std::optional<std::size_t> find(const std::string& label) const {
        for (std::size_t i = 0; i < modes_.size(); ++i)
            if (modes_[i].label == label) return i;
        return std::nullopt;
    }

    std::size_t index_of(const std::string& label) const {
        if (auto i = find(label)) return *i;
        throw Error(ErrorKind::invalid_network, "unknown mode label '" + label + "'");
    }

    bool has_drive() const {
        for (Eigen::Index i = 0; i < drive_.size(); ++i)
            if (drive_[i] != cplx{}) return true;
        return false;
    }

    // Copy of this network driven only on `label` with amplitude `eta`.
    ModeNetwork driven_at(const std::string& label, cplx eta = 1.0) const {
        Eigen::VectorXcd d = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(size()));
        d[static_cast<Eigen::Index>(index_of(label))] = eta;
        return ModeNetwork(modes_, couplings_, std::move(d));
    }

    ModeNetwork with_drive(Eigen::VectorXcd drive) const {
        return ModeNetwork(modes_, couplings_, std::move(drive));
    }

    ModeNetwork with_modes(std::vector<Mode> modes) const {
        return ModeNetwork(std::move(modes), couplings_, drive_);
    }

    ModeNetwork with_couplings(Eigen::MatrixXd couplings) const {
        return ModeNetwork(modes_, std::move(couplings), drive_);
    }

    // Label of the single driven node, if exactly one entry of the drive is nonzero.
    std::optional<std::string> single_drive_label() const {
        std::optional<std::string> found;
        for (std::size_t i = 0; i < size(); ++i) {
            if (drive_[static_cast<Eigen::Index>(i)] == cplx{}) continue;
            if (found) return std::nullopt;
            found = modes_[i].label;
        }
        return found;
    }

private:
    void validate() const {
        const auto n = static_cast<Eigen::Index>(modes_.size());
        if (n == 0) throw Error(ErrorKind::invalid_network, "network has no modes");
        if (couplings_.rows() != n || couplings_.cols() != n)
            throw Error(ErrorKind::invalid_network, "coupling matrix dimension does not match mode count");
        if (drive_.size() != n)
            throw Error(ErrorKind::invalid_network, "drive vector length does not match mode count");
        std::set<std::string> labels;
        for (const auto& m : modes_) {
            if (m.label.empty()) throw Error(ErrorKind::invalid_network, "mode label is empty");
            if (!labels.insert(m.label).second)
                throw Error(ErrorKind::invalid_network, "duplicate mode label '" + m.label + "'");
            if (!std::isfinite(m.frequency_mhz))
                throw Error(ErrorKind::invalid_network, "mode '" + m.label + "' has non-finite frequency");
            if (!(m.decay_mhz > 0.0) || !std::isfinite(m.decay_mhz))
                throw Error(ErrorKind::invalid_network, "mode '" + m.label + "' must have decay > 0");
        }
        for (Eigen::Index j = 0; j < n; ++j) {
            if (couplings_(j, j) != 0.0)
                throw Error(ErrorKind::invalid_network, "self coupling on mode '" + modes_[j].label + "'");
            for (Eigen::Index k = j + 1; k < n; ++k) {
                if (!std::isfinite(couplings_(j, k)) || couplings_(j, k) != couplings_(k, j))
                    throw Error(ErrorKind::invalid_network, "coupling matrix is not symmetric");
            }
        }
        for (Eigen::Index j = 0; j < n; ++j)
            if (!std::isfinite(drive_[j].real()) || !std::isfinite(drive_[j].imag()))
                throw Error(ErrorKind::invalid_network, "drive entry is not finite");
    }

    std::vector<Mode> modes_;
    Eigen::MatrixXd couplings_;
    Eigen::VectorXcd drive_;
};

struct ProbeGrid {
    double start_mhz = -25.0;
    double stop_mhz = 25.0;
    std::size_t points = 1001;

    void validate() const {
        if (!(start_mhz < stop_mhz) || !std::isfinite(start_mhz) || !std::isfinite(stop_mhz))
            throw Error(ErrorKind::config, "probe grid requires start < stop");
        if (points < 2) throw Error(ErrorKind::config, "probe grid requires at least 2 points");
    }

    double step() const { return (stop_mhz - start_mhz) / static_cast<double>(points - 1); }

    double at(std::size_t i) const {
        if (i + 1 == points) return stop_mhz;
        return start_mhz + step() * static_cast<double>(i);
    }

    std::vector<double> values() const {
        std::vector<double> v(points);
        for (std::size_t i = 0; i < points; ++i) v[i] = at(i);
        return v;
    }
};

struct SteadyState {
    double probe_mhz = 0.0;
    Eigen::VectorXcd amplitudes;
};

inline Eigen::MatrixXcd build_dynamical_matrix(const ModeNetwork& network, double probe_mhz) {
    const auto n = static_cast<Eigen::Index>(network.size());
    Eigen::MatrixXcd m(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index k = 0; k < n; ++k) {
            if (j == k) {
                const Mode& mode = network.mode(static_cast<std::size_t>(j));
                m(j, j) = cplx(probe_mhz - mode.frequency_mhz, mode.decay_mhz);
            } else {
                m(j, k) = -network.couplings()(j, k);
            }
        }
    }
    return m;
}

// The probe-independent part H, with M(probe) = probe * I - H. Its eigenvalues
// are the poles of the response (center - i * half_width).
inline Eigen::MatrixXcd coupling_hamiltonian(const ModeNetwork& network) {
    return -build_dynamical_matrix(network, 0.0);
}

inline SteadyState steady_state(const ModeNetwork& network, double probe_mhz) {
    const Eigen::MatrixXcd m = build_dynamical_matrix(network, probe_mhz);
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(m);
    if (!(lu.rcond() > 1e-15))
        throw Error(ErrorKind::singular_response, "dynamical matrix is singular at this probe");
    SteadyState s;
    s.probe_mhz = probe_mhz;
    s.amplitudes = lu.solve(network.drive());
    for (Eigen::Index i = 0; i < s.amplitudes.size(); ++i) {
        if (!std::isfinite(s.amplitudes[i].real()) || !std::isfinite(s.amplitudes[i].imag()))
            throw Error(ErrorKind::singular_response, "non-finite steady-state amplitude");
    }
    return s;
}

// Closed-form cavity amplitude of a single emitter coupled to a driven cavity.
inline cplx closed_form_two_mode(double delta_pa, double delta_pc, double gamma, double kappa,
                                 double g, double eta) {
    const cplx atom(delta_pa, gamma);
    const cplx cavity(delta_pc, kappa);
    return eta * atom / (atom * cavity - g * g);
}

// Cavity ("cavity", resonator at 0 MHz) coupled with strength g to an emitter
// ("atom") at frequency atom_cavity_detuning; drive eta on the cavity.
inline ModeNetwork atom_cavity_network(double g, double gamma, double kappa,
                                       double atom_cavity_detuning_mhz, cplx eta = 1.0) {
    std::vector<Mode> modes{{"cavity", ModeKind::resonator, 0.0, kappa},
                            {"atom", ModeKind::emitter, atom_cavity_detuning_mhz, gamma}};
    Eigen::MatrixXd c(2, 2);
    c << 0.0, g, g, 0.0;
    Eigen::VectorXcd d(2);
    d << eta, 0.0;
    return ModeNetwork(std::move(modes), std::move(c), std::move(d));
}

}  // namespace antires
