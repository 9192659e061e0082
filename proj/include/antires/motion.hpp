#pragma once

// Phenomenological residual-motion model: each sample scales every coupling that
// touches an emitter by a coupling fraction drawn from a truncated Gaussian and
// jitters emitter frequencies with Gaussian noise. The averaged spectrum is the
// mean complex amplitude over samples.

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include "antires/network.hpp"
#include "antires/parallel.hpp"
#include "antires/spectrum.hpp"

namespace antires {

struct MotionEnsemble {
    double mean_fraction = 0.78;
    double sigma_fraction = 0.10;
    double lower_bound = 0.5;
    double upper_bound = 1.0;
    double stark_jitter_mhz = 0.5;
    std::size_t samples = 512;
    std::uint64_t seed = 1;

    void validate() const {
        if (!(lower_bound > 0.0 && lower_bound <= upper_bound && upper_bound <= 1.0))
            throw Error(ErrorKind::config, "motion ensemble bounds must lie in (0, 1]");
        if (!(mean_fraction > 0.0) || !(sigma_fraction >= 0.0) || !(stark_jitter_mhz >= 0.0))
            throw Error(ErrorKind::config, "motion ensemble requires mean > 0 and non-negative spreads");
        if (samples < 1) throw Error(ErrorKind::config, "motion ensemble requires at least one sample");
    }

    // A single motionless sample at full coupling.
    static MotionEnsemble motionless() {
        MotionEnsemble e;
        e.mean_fraction = 1.0;
        e.sigma_fraction = 0.0;
        e.stark_jitter_mhz = 0.0;
        e.samples = 1;
        return e;
    }
};

// One ensemble draw for every emitter in a network (non-emitters keep 1 / 0).
struct MotionSample {
    std::vector<double> coupling_fraction;
    std::vector<double> frequency_shift_mhz;
};

inline double draw_truncated_normal(std::mt19937_64& rng, double mean, double sigma, double lo, double hi) {
    if (sigma == 0.0) return std::clamp(mean, lo, hi);
    std::normal_distribution<double> normal(mean, sigma);
    for (int attempt = 0; attempt < 100000; ++attempt) {
        const double v = normal(rng);
        if (v >= lo && v <= hi) return v;
    }
    throw Error(ErrorKind::config, "truncated Gaussian has negligible mass inside its bounds");
}

// Draw `index` of the ensemble; depends only on (seed, index).
inline MotionSample draw_motion_sample(const ModeNetwork& network, const MotionEnsemble& ensemble,
                                       std::size_t index) {
    std::mt19937_64 rng(derive_seed(ensemble.seed, index));
    MotionSample s;
    s.coupling_fraction.assign(network.size(), 1.0);
    s.frequency_shift_mhz.assign(network.size(), 0.0);
    std::normal_distribution<double> jitter(0.0, 1.0);
    for (std::size_t m = 0; m < network.size(); ++m) {
        if (network.mode(m).kind != ModeKind::emitter) continue;
        s.coupling_fraction[m] = draw_truncated_normal(rng, ensemble.mean_fraction, ensemble.sigma_fraction,
                                                       ensemble.lower_bound, ensemble.upper_bound);
        s.frequency_shift_mhz[m] = ensemble.stark_jitter_mhz * jitter(rng);
    }
    return s;
}

inline ModeNetwork apply_motion(const ModeNetwork& network, const MotionSample& sample) {
    std::vector<Mode> modes = network.modes();
    for (std::size_t m = 0; m < modes.size(); ++m) modes[m].frequency_mhz += sample.frequency_shift_mhz[m];
    Eigen::MatrixXd c = network.couplings();
    for (Eigen::Index j = 0; j < c.rows(); ++j)
        for (Eigen::Index k = 0; k < c.cols(); ++k)
            c(j, k) *= sample.coupling_fraction[static_cast<std::size_t>(j)] *
                       sample.coupling_fraction[static_cast<std::size_t>(k)];
    return ModeNetwork(std::move(modes), std::move(c), network.drive());
}

inline std::vector<ModeNetwork> motion_realizations(const ModeNetwork& network, const MotionEnsemble& ensemble) {
    ensemble.validate();
    std::vector<ModeNetwork> out;
    out.reserve(ensemble.samples);
    for (std::size_t s = 0; s < ensemble.samples; ++s)
        out.push_back(apply_motion(network, draw_motion_sample(network, ensemble, s)));
    return out;
}

// Mean driven response of the ensemble at one probe frequency.
inline Eigen::VectorXcd motion_averaged_state(const std::vector<ModeNetwork>& realizations, double probe_mhz) {
    Eigen::VectorXcd sum = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(realizations.front().size()));
    for (const auto& net : realizations) sum += steady_state(net, probe_mhz).amplitudes;
    return sum / static_cast<double>(realizations.size());
}

inline ComplexSpectrum motion_average(const ModeNetwork& network, const ProbeGrid& grid,
                                      const MotionEnsemble& ensemble) {
    grid.validate();
    const auto realizations = motion_realizations(network, ensemble);
    std::vector<Eigen::VectorXcd> rows(grid.points);
    parallel_for(grid.points, [&](std::size_t i) { rows[i] = motion_averaged_state(realizations, grid.at(i)); });
    return assemble_spectrum(network, grid, rows);
}

}  // namespace antires
