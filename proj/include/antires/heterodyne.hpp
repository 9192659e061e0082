#pragma once

// Heterodyne detection chain: the transmitted field beats against a local
// oscillator offset by the intermediate frequency, the balanced detector's
// difference current is digitized, and IQ demodulation over whole IF periods
// recovers amplitude and phase per integration window.
//
// Convention: a field a gives current |a| cos(2 pi f_IF t + arg a), and the
// demodulated phase is atan2(-Q, I), so demodulate(synthesize(a)) = arg a.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "antires/fits.hpp"
#include "antires/network.hpp"
#include "antires/parallel.hpp"

namespace antires {

struct BeatNoteConfig {
    double intermediate_frequency_mhz = 1.0;
    double sample_rate_msps = 50.0;
    double window_us = 10.0;
    std::size_t windows = 1;
    // Per-window amplitude SNR for a field of magnitude reference_amplitude.
    // Zero or infinity disables noise.
    double snr = 0.0;
    double reference_amplitude = 1.0;
    std::uint64_t seed = 1;

    std::size_t samples_per_window() const {
        return static_cast<std::size_t>(std::llround(window_us * sample_rate_msps));
    }

    // Per-sample standard deviation of the additive white noise.
    double noise_sigma() const {
        if (!(snr > 0.0) || !std::isfinite(snr)) return 0.0;
        return reference_amplitude * std::sqrt(static_cast<double>(samples_per_window()) / 2.0) / snr;
    }

    // True when each window holds an integer number of IF periods.
    bool whole_periods() const {
        const double periods = static_cast<double>(samples_per_window()) * intermediate_frequency_mhz / sample_rate_msps;
        return std::abs(periods - std::round(periods)) < 1e-9;
    }

    void validate() const {
        if (!(intermediate_frequency_mhz > 0.0) || !(sample_rate_msps > 0.0))
            throw Error(ErrorKind::config, "beat note needs positive IF and sample rate");
        if (!(sample_rate_msps > 2.0 * intermediate_frequency_mhz))
            throw Error(ErrorKind::config, "sample rate must exceed twice the intermediate frequency (Nyquist)");
        if (window_us * intermediate_frequency_mhz < 5.0 - 1e-12)
            throw Error(ErrorKind::config, "integration window must span at least 5 IF periods");
        if (windows < 1) throw Error(ErrorKind::config, "beat note needs at least one window");
        if (snr < 0.0 || !(reference_amplitude > 0.0))
            throw Error(ErrorKind::config, "beat note needs snr >= 0 and a positive reference amplitude");
    }
};

struct BeatTrace {
    double sample_rate_msps = 0.0;
    std::vector<double> current;

    double time_us(std::size_t n) const { return static_cast<double>(n) / sample_rate_msps; }
};

struct IQSample {
    std::size_t window = 0;
    double in_phase = 0.0;
    double quadrature = 0.0;
    double amplitude = 0.0;
    double phase_rad = 0.0;  // in (-pi, pi]

    double phase_deg() const { return rad_to_deg(phase_rad); }
};

struct DemodulationResult {
    std::vector<IQSample> windows;
    bool leakage_warning = false;
};

inline BeatTrace synthesize(cplx field, const BeatNoteConfig& config) {
    config.validate();
    const std::size_t per_window = config.samples_per_window();
    const double omega = 2.0 * std::numbers::pi * config.intermediate_frequency_mhz;
    const double magnitude = std::abs(field);
    const double phase = std::arg(field);
    const double sigma = config.noise_sigma();

    BeatTrace trace;
    trace.sample_rate_msps = config.sample_rate_msps;
    trace.current.resize(per_window * config.windows);
    parallel_for(config.windows, [&](std::size_t w) {
        std::mt19937_64 rng(derive_seed(config.seed, w));
        std::normal_distribution<double> noise(0.0, 1.0);
        for (std::size_t k = 0; k < per_window; ++k) {
            const std::size_t n = w * per_window + k;
            const double t = static_cast<double>(n) / config.sample_rate_msps;
            double v = magnitude * std::cos(omega * t + phase);
            if (sigma > 0.0) v += sigma * noise(rng);
            trace.current[n] = v;
        }
    });
    return trace;
}

inline DemodulationResult demodulate(const BeatTrace& trace, const BeatNoteConfig& config) {
    config.validate();
    const std::size_t per_window = config.samples_per_window();
    if (trace.current.size() < per_window)
        throw Error(ErrorKind::config, "trace is shorter than one integration window");
    const std::size_t count = trace.current.size() / per_window;
    const double omega = 2.0 * std::numbers::pi * config.intermediate_frequency_mhz;

    DemodulationResult out;
    out.leakage_warning = !config.whole_periods();
    out.windows.resize(count);
    parallel_for(count, [&](std::size_t w) {
        double i_acc = 0.0, q_acc = 0.0;
        for (std::size_t k = 0; k < per_window; ++k) {
            const std::size_t n = w * per_window + k;
            const double t = static_cast<double>(n) / config.sample_rate_msps;
            i_acc += trace.current[n] * std::cos(omega * t);
            q_acc += trace.current[n] * std::sin(omega * t);
        }
        IQSample s;
        s.window = w;
        s.in_phase = i_acc;
        s.quadrature = q_acc;
        s.amplitude = 2.0 * std::hypot(i_acc, q_acc) / static_cast<double>(per_window);
        s.phase_rad = std::atan2(-q_acc, i_acc);
        if (s.phase_rad <= -std::numbers::pi) s.phase_rad = std::numbers::pi;
        out.windows[w] = s;
    });
    return out;
}

// Histogram of (phase - reference) wrapped into [-180, 180). `reference_deg`
// holds either one entry per phase or a single scalar reference.
inline PhaseHistogram accumulate_histogram(const std::vector<double>& phases_deg,
                                           const std::vector<double>& reference_deg,
                                           std::size_t bins = kDefaultHistogramBins,
                                           HistogramNormalization normalization = HistogramNormalization::raw) {
    if (phases_deg.empty()) throw Error(ErrorKind::config, "cannot histogram an empty phase stream");
    if (reference_deg.size() != phases_deg.size() && reference_deg.size() != 1)
        throw Error(ErrorKind::config, "reference stream must match the phase stream or be a scalar");
    PhaseHistogram h = PhaseHistogram::empty(bins);
    h.normalization = normalization;
    for (std::size_t i = 0; i < phases_deg.size(); ++i) {
        const double ref = reference_deg.size() == 1 ? reference_deg[0] : reference_deg[i];
        ++h.counts[h.bin_of(phases_deg[i] - ref)];
    }
    return h;
}

inline std::vector<double> phases_deg(const DemodulationResult& r) {
    std::vector<double> out;
    out.reserve(r.windows.size());
    for (const auto& w : r.windows) out.push_back(w.phase_deg());
    return out;
}

}  // namespace antires
