#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "antires/network.hpp"
#include "antires/parallel.hpp"

namespace antires {

// Sequential unwrapping: whenever consecutive samples jump by more than pi the
// remainder is folded back by a multiple of 2pi. Grids must be fine enough that
// true phase steps between samples stay below pi.
inline std::vector<double> unwrap_phase(const std::vector<double>& wrapped) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    std::vector<double> out(wrapped.size());
    if (wrapped.empty()) return out;
    out[0] = wrapped[0];
    double shift = 0.0;
    for (std::size_t i = 1; i < wrapped.size(); ++i) {
        const double jump = wrapped[i] - wrapped[i - 1];
        if (jump > std::numbers::pi || jump < -std::numbers::pi)
            shift -= two_pi * std::round(jump / two_pi);
        out[i] = wrapped[i] + shift;
    }
    return out;
}

// Per-mode channels of a swept response. Channels share the grid length.
struct ModeChannel {
    std::string label;
    std::vector<cplx> amplitude;
    std::vector<double> magnitude;
    std::vector<double> excitation;       // |a|^2
    std::vector<double> phase_unwrapped;  // radians
};

struct ComplexSpectrum {
    ProbeGrid grid;
    std::vector<double> probe_mhz;
    std::vector<ModeChannel> channels;

    const ModeChannel& channel(const std::string& label) const {
        for (const auto& c : channels)
            if (c.label == label) return c;
        throw Error(ErrorKind::invalid_network, "spectrum has no channel '" + label + "'");
    }

    // Fills the derived channels from the complex amplitudes.
    void derive_channels() {
        for (auto& c : channels) {
            const std::size_t n = c.amplitude.size();
            c.magnitude.resize(n);
            c.excitation.resize(n);
            std::vector<double> wrapped(n);
            for (std::size_t i = 0; i < n; ++i) {
                c.magnitude[i] = std::abs(c.amplitude[i]);
                c.excitation[i] = std::norm(c.amplitude[i]);
                wrapped[i] = std::arg(c.amplitude[i]);
            }
            c.phase_unwrapped = unwrap_phase(wrapped);
        }
    }
};

// Builds a spectrum from per-point amplitude vectors (row i = grid point i).
inline ComplexSpectrum assemble_spectrum(const ModeNetwork& network, const ProbeGrid& grid,
                                         const std::vector<Eigen::VectorXcd>& rows) {
    ComplexSpectrum s;
    s.grid = grid;
    s.probe_mhz = grid.values();
    s.channels.resize(network.size());
    for (std::size_t m = 0; m < network.size(); ++m) {
        s.channels[m].label = network.mode(m).label;
        s.channels[m].amplitude.resize(grid.points);
        for (std::size_t i = 0; i < grid.points; ++i)
            s.channels[m].amplitude[i] = rows[i][static_cast<Eigen::Index>(m)];
    }
    s.derive_channels();
    return s;
}

inline ComplexSpectrum sweep(const ModeNetwork& network, const ProbeGrid& grid) {
    grid.validate();
    std::vector<Eigen::VectorXcd> rows(grid.points);
    parallel_for(grid.points, [&](std::size_t i) {
        rows[i] = steady_state(network, grid.at(i)).amplitudes;
    });
    return assemble_spectrum(network, grid, rows);
}

}  // namespace antires
