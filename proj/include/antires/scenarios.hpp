#pragma once

// Scenario configuration and the command implementations behind the `antires`
// CLI. Every command is a deterministic function of (config, seed) that writes
// its data files into the output directory and returns its results.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "antires/characterize.hpp"
#include "antires/fits.hpp"
#include "antires/heterodyne.hpp"
#include "antires/motion.hpp"
#include "antires/network_io.hpp"
#include "antires/oracle.hpp"
#include "antires/poles.hpp"
#include "antires/report.hpp"
#include "antires/spectrum.hpp"

namespace antires {

// Quoted parameters of the single-atom system (MHz).
struct AtomCavityPreset {
    static constexpr double g = 16.0;
    static constexpr double gamma = 3.0;
    static constexpr double kappa = 1.5;
    static constexpr double atom_cavity_detuning = -3.0;  // bare atom marker of the phase spectrum
};

inline std::vector<StarkPoint> reference_stark_points() { return {{1400.0, 12.0}, {950.0, -5.0}, {700.0, -14.0}}; }

// How scan2d row values map to the atom frequency relative to the cavity.
enum class RowConvention {
    figure,              // atom at -row: zero at D_pc = -row
    atom_minus_cavity,   // atom at +row
};

struct StarkScanConfig {
    double power_start_nw = 450.0;
    double power_stop_nw = 1700.0;
    std::size_t points = 126;
    std::vector<StarkPoint> calibration = reference_stark_points();
};

struct Scan2dConfig {
    std::vector<double> rows_mhz{12.0, -5.0, 0.0, -14.0};
    RowConvention convention = RowConvention::figure;
};

struct OracleConfig {
    std::vector<double> eta_over_kappa{0.3, 0.1, 0.03, 0.01};
    double delta_ac_mhz = 0.0;
    double deviation_threshold = 1e-3;
    double g2_ratio_threshold = 10.0;
    // Relative <n> change at which the photon cutoff stops growing.
    double cutoff_tolerance = 1e-6;
};

struct HeterodyneConfig {
    ProbeGrid probe{-25.0, 25.0, 51};
    double intermediate_frequency_mhz = 1.0;
    double sample_rate_msps = 50.0;
    double window_us = 10.0;
    std::size_t windows_per_point = 400;
    double snr = 5.0;  // 0 = noiseless
    std::size_t bins = kDefaultHistogramBins;
    bool motion = false;  // draw one motion sample per window for the coupled stream
};

struct CharacterizeConfig {
    std::vector<std::string> candidates;
    double relative_tolerance = 1e-3;
};

struct ScenarioConfig {
    std::string name = "default";
    std::optional<std::string> network_path;  // resolved; otherwise the preset is used
    double g_mhz = AtomCavityPreset::g;
    double gamma_mhz = AtomCavityPreset::gamma;
    double kappa_mhz = AtomCavityPreset::kappa;
    double atom_cavity_detuning_mhz = AtomCavityPreset::atom_cavity_detuning;
    std::string drive_label = "cavity";
    ProbeGrid probe{-25.0, 25.0, 1001};
    bool motion_enabled = false;
    MotionEnsemble motion{};
    StarkScanConfig stark{};
    Scan2dConfig scan2d{};
    OracleConfig oracle{};
    HeterodyneConfig heterodyne{};
    CharacterizeConfig characterize{};
    std::filesystem::path output_dir = "out";
    std::uint64_t seed = 1;

    ModeNetwork network() const {
        if (network_path) return load_network(*network_path);
        return atom_cavity_network(g_mhz, gamma_mhz, kappa_mhz, atom_cavity_detuning_mhz);
    }

    MotionEnsemble ensemble() const {
        MotionEnsemble e = motion;
        e.seed = seed;
        return e;
    }
};

namespace detail {

inline ProbeGrid parse_grid(const json& j, ProbeGrid grid) {
    grid.start_mhz = j.value("start_mhz", grid.start_mhz);
    grid.stop_mhz = j.value("stop_mhz", grid.stop_mhz);
    grid.points = j.value("points", grid.points);
    grid.validate();
    return grid;
}

}  // namespace detail

// `base_dir` resolves a relative "network" path (normally the config file's directory).
inline ScenarioConfig scenario_from_json(const json& j, const std::filesystem::path& base_dir = {}) {
    ScenarioConfig c;
    try {
        c.name = j.value("scenario", c.name);
        const std::string preset = j.value("preset", std::string("paper-atom-cavity"));
        if (preset != "paper-atom-cavity") throw Error(ErrorKind::config, "unknown preset '" + preset + "'");
        if (j.contains("network")) {
            std::filesystem::path p = j.at("network").get<std::string>();
            if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
            if (!std::filesystem::exists(p)) throw Error(ErrorKind::io, "network file '" + p.string() + "' not found");
            c.network_path = p.string();
        }
        c.g_mhz = j.value("g_mhz", c.g_mhz);
        c.gamma_mhz = j.value("gamma_mhz", c.gamma_mhz);
        c.kappa_mhz = j.value("kappa_mhz", c.kappa_mhz);
        c.atom_cavity_detuning_mhz = j.value("atom_cavity_detuning_mhz", c.atom_cavity_detuning_mhz);
        c.drive_label = j.value("drive", c.drive_label);
        if (j.contains("probe")) c.probe = detail::parse_grid(j.at("probe"), c.probe);
        if (j.contains("motion")) {
            const auto& m = j.at("motion");
            c.motion_enabled = m.value("enabled", c.motion_enabled);
            c.motion.mean_fraction = m.value("mean_fraction", c.motion.mean_fraction);
            c.motion.sigma_fraction = m.value("sigma_fraction", c.motion.sigma_fraction);
            c.motion.lower_bound = m.value("lower_bound", c.motion.lower_bound);
            c.motion.upper_bound = m.value("upper_bound", c.motion.upper_bound);
            c.motion.stark_jitter_mhz = m.value("stark_jitter_mhz", c.motion.stark_jitter_mhz);
            c.motion.samples = m.value("samples", c.motion.samples);
            c.motion.validate();
        }
        if (j.contains("stark")) {
            const auto& s = j.at("stark");
            c.stark.power_start_nw = s.value("power_start_nw", c.stark.power_start_nw);
            c.stark.power_stop_nw = s.value("power_stop_nw", c.stark.power_stop_nw);
            c.stark.points = s.value("points", c.stark.points);
            if (s.contains("calibration")) {
                c.stark.calibration.clear();
                for (const auto& p : s.at("calibration"))
                    c.stark.calibration.push_back(
                        {p.at("power_nw").get<double>(), p.at("detuning_mhz").get<double>(), p.value("weight", 1.0)});
            }
        }
        if (j.contains("scan2d")) {
            const auto& s = j.at("scan2d");
            if (s.contains("rows_mhz")) c.scan2d.rows_mhz = s.at("rows_mhz").get<std::vector<double>>();
            if (s.contains("rows")) {
                const ProbeGrid rows = detail::parse_grid(s.at("rows"), ProbeGrid{});
                c.scan2d.rows_mhz = rows.values();
            }
            const std::string conv = s.value("row_convention", std::string("figure"));
            if (conv == "figure") c.scan2d.convention = RowConvention::figure;
            else if (conv == "atom-minus-cavity") c.scan2d.convention = RowConvention::atom_minus_cavity;
            else throw Error(ErrorKind::config, "unknown scan2d row_convention '" + conv + "'");
            if (c.scan2d.rows_mhz.empty()) throw Error(ErrorKind::config, "scan2d needs at least one row");
        }
        if (j.contains("oracle")) {
            const auto& o = j.at("oracle");
            if (o.contains("eta_over_kappa")) c.oracle.eta_over_kappa = o.at("eta_over_kappa").get<std::vector<double>>();
            c.oracle.delta_ac_mhz = o.value("delta_ac_mhz", c.oracle.delta_ac_mhz);
            c.oracle.deviation_threshold = o.value("deviation_threshold", c.oracle.deviation_threshold);
            c.oracle.g2_ratio_threshold = o.value("g2_ratio_threshold", c.oracle.g2_ratio_threshold);
            c.oracle.cutoff_tolerance = o.value("cutoff_tolerance", c.oracle.cutoff_tolerance);
        }
        if (j.contains("heterodyne")) {
            const auto& h = j.at("heterodyne");
            if (h.contains("probe")) c.heterodyne.probe = detail::parse_grid(h.at("probe"), c.heterodyne.probe);
            c.heterodyne.intermediate_frequency_mhz = h.value("if_mhz", c.heterodyne.intermediate_frequency_mhz);
            c.heterodyne.sample_rate_msps = h.value("sample_rate_msps", c.heterodyne.sample_rate_msps);
            c.heterodyne.window_us = h.value("window_us", c.heterodyne.window_us);
            c.heterodyne.windows_per_point = h.value("windows_per_point", c.heterodyne.windows_per_point);
            c.heterodyne.snr = h.value("snr", c.heterodyne.snr);
            c.heterodyne.bins = h.value("bins", c.heterodyne.bins);
            c.heterodyne.motion = h.value("motion", c.heterodyne.motion);
        }
        if (j.contains("characterize")) {
            const auto& ch = j.at("characterize");
            if (ch.contains("candidates")) c.characterize.candidates = ch.at("candidates").get<std::vector<std::string>>();
            c.characterize.relative_tolerance = ch.value("relative_tolerance", c.characterize.relative_tolerance);
        }
        if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
        c.seed = j.value("seed", c.seed);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::config, std::string("malformed config: ") + e.what());
    }
    return c;
}

inline ScenarioConfig load_scenario(const std::filesystem::path& path) {
    return scenario_from_json(read_json_file(path.string()), path.parent_path());
}

// ------------------------------------------------------------------ spectrum

struct SpectrumRun {
    ComplexSpectrum spectrum;
    std::vector<ResonancePole> poles;      // observable (cancelled pairs removed)
    std::vector<AntiresonanceZero> zeros;  // observable
    std::vector<AntiresonanceZero> numeric_zeros;
};

inline SpectrumRun cmd_spectrum(const ScenarioConfig& config, std::ostream& log) {
    const ModeNetwork network = config.network().driven_at(config.drive_label);
    SpectrumRun run;
    run.spectrum = config.motion_enabled ? motion_average(network, config.probe, config.ensemble())
                                         : sweep(network, config.probe);
    auto observable = cancel_pole_zero_pairs(resonances(network), antiresonances(network, config.drive_label));
    run.poles = std::move(observable.poles);
    run.zeros = std::move(observable.zeros);
    run.numeric_zeros = detect_antiresonances_numeric(run.spectrum, config.drive_label);

    write_text_file(config.output_dir / "spectrum.csv", spectrum_to_csv(run.spectrum));
    json report{{"scenario", config.name},
                {"drive_label", config.drive_label},
                {"motion", config.motion_enabled},
                {"poles", poles_to_json(run.poles)},
                {"zeros", zeros_to_json(run.zeros)},
                {"numeric_zeros", numeric_zeros_to_json(run.numeric_zeros)}};
    write_text_file(config.output_dir / "poles_zeros.json", dump_json(report));

    log << "drive: " << config.drive_label << (config.motion_enabled ? " (motion averaged)" : "") << '\n';
    log << std::fixed << std::setprecision(4);
    log << "  kind   center_mhz  half_width_mhz\n";
    for (const auto& p : run.poles) log << "  pole " << std::setw(12) << p.center_mhz << std::setw(16) << p.half_width_mhz << '\n';
    for (const auto& z : run.zeros) log << "  zero " << std::setw(12) << z.center_mhz << std::setw(16) << z.half_width_mhz << '\n';
    for (const auto& z : run.numeric_zeros)
        log << "  zero*" << std::setw(12) << z.center_mhz << std::setw(16) << z.half_width_mhz
            << (z.near_boundary ? "  (near grid edge)" : "") << '\n';
    log << "  (* = located numerically in the swept spectrum)\n";
    log.unsetf(std::ios::floatfield);
    return run;
}

// -------------------------------------------------------------------- scan2d

struct Scan2dRow {
    double row_mhz = 0.0;
    double atom_frequency_mhz = 0.0;
    std::vector<double> phase_deg;
    std::optional<double> algebraic_center_mhz;
    std::optional<double> numeric_center_mhz;
    bool tracks_diagonal = false;
};

struct Scan2dRun {
    std::vector<double> probe_mhz;
    std::vector<Scan2dRow> rows;
    double max_abs_phase_deg = 0.0;
    bool all_track = false;
};

inline Scan2dRun cmd_scan2d(const ScenarioConfig& config, std::ostream& log) {
    Scan2dRun run;
    run.probe_mhz = config.probe.values();
    const double step = config.probe.step();
    run.rows.resize(config.scan2d.rows_mhz.size());
    parallel_for(run.rows.size(), [&](std::size_t r) {
        Scan2dRow row;
        row.row_mhz = config.scan2d.rows_mhz[r];
        row.atom_frequency_mhz = config.scan2d.convention == RowConvention::figure ? -row.row_mhz : row.row_mhz;
        const ModeNetwork net =
            atom_cavity_network(config.g_mhz, config.gamma_mhz, config.kappa_mhz, row.atom_frequency_mhz);
        ComplexSpectrum s;
        if (config.motion_enabled) {
            MotionEnsemble e = config.ensemble();
            s = motion_average(net, config.probe, e);
        } else {
            s = sweep(net, config.probe);
        }
        for (double ph : s.channel("cavity").phase_unwrapped) row.phase_deg.push_back(rad_to_deg(ph));
        const auto zeros = antiresonances(net, "cavity");
        if (!zeros.empty()) row.algebraic_center_mhz = zeros.front().center_mhz;
        const auto numeric = detect_antiresonances_numeric(s, "cavity");
        double best = std::numeric_limits<double>::infinity();
        for (const auto& z : numeric) {
            if (std::abs(z.center_mhz - row.atom_frequency_mhz) < best) {
                best = std::abs(z.center_mhz - row.atom_frequency_mhz);
                row.numeric_center_mhz = z.center_mhz;
            }
        }
        row.tracks_diagonal = row.numeric_center_mhz && best <= step;
        run.rows[r] = std::move(row);
    });

    run.all_track = true;
    std::string csv = "row_mhz,atom_frequency_mhz,probe_mhz,phase_deg\n";
    for (const auto& row : run.rows) {
        run.all_track = run.all_track && row.tracks_diagonal;
        for (std::size_t i = 0; i < run.probe_mhz.size(); ++i) {
            run.max_abs_phase_deg = std::max(run.max_abs_phase_deg, std::abs(row.phase_deg[i]));
            csv += format_number(row.row_mhz) + ',' + format_number(row.atom_frequency_mhz) + ',' +
                   format_number(run.probe_mhz[i]) + ',' + format_number(row.phase_deg[i]) + '\n';
        }
    }
    write_text_file(config.output_dir / "scan2d.csv", csv);

    json rows = json::array();
    for (const auto& row : run.rows) {
        rows.push_back({{"row_mhz", row.row_mhz},
                        {"atom_frequency_mhz", row.atom_frequency_mhz},
                        {"algebraic_center_mhz", row.algebraic_center_mhz ? json(*row.algebraic_center_mhz) : json()},
                        {"numeric_center_mhz", row.numeric_center_mhz ? json(*row.numeric_center_mhz) : json()},
                        {"tracks_diagonal", row.tracks_diagonal}});
    }
    write_text_file(config.output_dir / "scan2d_zeros.json",
                    dump_json({{"scenario", config.name},
                               {"row_convention", config.scan2d.convention == RowConvention::figure ? "figure"
                                                                                                    : "atom-minus-cavity"},
                               {"grid_step_mhz", step},
                               {"rows", rows},
                               {"all_track_diagonal", run.all_track},
                               {"max_abs_phase_deg", run.max_abs_phase_deg}}));

    log << "  row_mhz  zero_center_mhz  tracks\n";
    for (const auto& row : run.rows) {
        log << "  " << std::setw(7) << row.row_mhz << "  " << std::setw(15)
            << (row.numeric_center_mhz ? format_number(std::round(*row.numeric_center_mhz * 1e4) / 1e4) : "none")
            << "  " << (row.tracks_diagonal ? "yes" : "NO") << '\n';
    }
    return run;
}

// ---------------------------------------------------------------- stark-scan

struct StarkScanRun {
    StarkCalibration calibration;
    std::vector<double> power_nw;
    std::vector<double> delta_ac_mhz;
    std::vector<double> delta_pa_mhz;
    std::vector<double> phase_deg;
    double data_swing_deg = 0.0;  // peak-to-trough of the simulated phase
    ArctanFitResult fit;          // fitted against delta_pa (ascending)
};

inline StarkScanRun cmd_stark_scan(const ScenarioConfig& config, std::ostream& log) {
    const auto& sc = config.stark;
    if (!(sc.power_start_nw < sc.power_stop_nw) || sc.points < 6)
        throw Error(ErrorKind::config, "stark scan needs power_start < power_stop and at least 6 points");
    StarkScanRun run;
    run.calibration = stark_calibration(sc.calibration);
    const ProbeGrid powers{sc.power_start_nw, sc.power_stop_nw, sc.points};
    run.power_nw = powers.values();
    const std::size_t n = run.power_nw.size();
    run.delta_ac_mhz.resize(n);
    run.delta_pa_mhz.resize(n);
    std::vector<cplx> field(n);
    parallel_for(n, [&](std::size_t i) {
        const double dac = run.calibration.power_to_detuning(run.power_nw[i]);
        run.delta_ac_mhz[i] = dac;
        run.delta_pa_mhz[i] = -dac;  // probe held on the empty-cavity resonance
        const ModeNetwork net = atom_cavity_network(config.g_mhz, config.gamma_mhz, config.kappa_mhz, dac);
        if (config.motion_enabled) {
            field[i] = motion_averaged_state(motion_realizations(net, config.ensemble()), 0.0)[0];
        } else {
            field[i] = steady_state(net, 0.0).amplitudes[0];
        }
    });
    std::vector<double> wrapped(n);
    for (std::size_t i = 0; i < n; ++i) wrapped[i] = std::arg(field[i]);
    const auto unwrapped = unwrap_phase(wrapped);
    for (double v : unwrapped) run.phase_deg.push_back(rad_to_deg(v));
    const auto [lo, hi] = std::minmax_element(run.phase_deg.begin(), run.phase_deg.end());
    run.data_swing_deg = *hi - *lo;

    std::vector<double> x = run.delta_pa_mhz, y = run.phase_deg;
    if (x.front() > x.back()) {
        std::reverse(x.begin(), x.end());
        std::reverse(y.begin(), y.end());
    }
    run.fit = fit_arctan_phase(x, y);

    std::string csv = "power_nw,delta_ac_mhz,delta_pa_mhz,phase_deg\n";
    for (std::size_t i = 0; i < n; ++i)
        csv += format_number(run.power_nw[i]) + ',' + format_number(run.delta_ac_mhz[i]) + ',' +
               format_number(run.delta_pa_mhz[i]) + ',' + format_number(run.phase_deg[i]) + '\n';
    write_text_file(config.output_dir / "stark_scan.csv", csv);

    json cal{{"slope_mhz_per_nw", run.calibration.slope_mhz_per_nw},
             {"intercept_mhz", run.calibration.intercept_mhz},
             {"residuals_mhz", run.calibration.residuals_mhz}};
    write_text_file(config.output_dir / "stark_fit.json",
                    dump_json({{"scenario", config.name},
                               {"motion", config.motion_enabled},
                               {"calibration", cal},
                               {"data_swing_deg", run.data_swing_deg},
                               {"fit", arctan_fit_to_json(run.fit)}}));

    log << "calibration: detuning = " << run.calibration.slope_mhz_per_nw << " MHz/nW * P + "
        << run.calibration.intercept_mhz << " MHz\n";
    log << "phase swing: " << run.fit.observed_swing_deg << " deg (data " << run.data_swing_deg << " deg)\n";
    log << "arctan width: " << run.fit.width << " +/- " << run.fit.width_error << " MHz\n";
    return run;
}

// -------------------------------------------------------------- characterize

struct CharacterizeRun {
    std::vector<DriveWidthRow> table;
    std::vector<std::vector<ResonancePole>> poles_per_drive;
    bool poles_identical = false;
    std::optional<std::string> verdict;
    std::vector<std::string> ambiguous;
};

// Throws AmbiguityError (after writing the report) when no single lossy node stands out.
inline CharacterizeRun cmd_characterize(const ScenarioConfig& config, std::ostream& log) {
    const ModeNetwork base = config.network();
    if (base.size() < 2) throw Error(ErrorKind::invalid_network, "characterize needs a network with >= 2 nodes");
    CharacterizeRun run;
    run.table = antiresonance_width_table(base, config.characterize.candidates);

    json drives = json::array();
    std::string first_poles;
    run.poles_identical = true;
    for (const auto& row : run.table) {
        const auto poles = resonances(base.driven_at(row.drive_label));
        const std::string dumped = poles_to_json(poles).dump();
        if (first_poles.empty()) first_poles = dumped;
        run.poles_identical = run.poles_identical && dumped == first_poles;
        run.poles_per_drive.push_back(poles);
        drives.push_back({{"drive_label", row.drive_label},
                          {"poles", poles_to_json(poles)},
                          {"zeros", zeros_to_json(row.zeros)},
                          {"mean_zero_half_width_mhz", row.mean_half_width_mhz}});
    }

    std::optional<AmbiguityError> ambiguity;
    try {
        run.verdict = lossy_component_identify(base, config.characterize.candidates, config.characterize.relative_tolerance)
                          .label;
    } catch (const AmbiguityError& e) {
        run.ambiguous = e.candidates();
        ambiguity = e;
    }

    write_text_file(config.output_dir / "characterize.json",
                    dump_json({{"scenario", config.name},
                               {"drives", drives},
                               {"poles_identical_across_drives", run.poles_identical},
                               {"lossy_component", run.verdict ? json(*run.verdict) : json()},
                               {"ambiguous_candidates", run.ambiguous}}));

    log << "  drive       mean zero half-width (MHz)\n";
    for (const auto& row : run.table)
        log << "  " << std::left << std::setw(10) << row.drive_label << std::right << "  " << row.mean_half_width_mhz
            << '\n';
    log << "poles identical across drives: " << (run.poles_identical ? "yes" : "NO") << '\n';
    if (ambiguity) throw *ambiguity;
    log << "lossy component: " << *run.verdict << '\n';
    return run;
}

// -------------------------------------------------------------- oracle-check

struct OracleCheckRun {
    LinearLimitReport linear;
    OracleResult antiresonance;
    std::vector<OracleResult> normal_modes;
    std::vector<double> normal_mode_probes_mhz;
    double min_g2_ratio = 0.0;
    bool passed = false;
};

inline OracleCheckRun cmd_oracle_check(const ScenarioConfig& config, std::ostream& log) {
    const auto& oc = config.oracle;
    if (oc.eta_over_kappa.empty()) throw Error(ErrorKind::config, "oracle check needs eta_over_kappa values");
    OracleCheckRun run;
    JCParams base;
    base.g = config.g_mhz;
    base.gamma = config.gamma_mhz;
    base.kappa = config.kappa_mhz;
    // Probe on the bare atom (the cavity-driven antiresonance).
    base.delta_pa = 0.0;
    base.delta_pc = oc.delta_ac_mhz;
    std::vector<double> etas;
    for (double r : oc.eta_over_kappa) etas.push_back(r * config.kappa_mhz);
    run.linear = linear_limit_check(base, etas, oc.cutoff_tolerance);

    JCParams weak = base;
    weak.eta = etas.back();
    run.antiresonance = lindblad_steady_state(weak, oc.cutoff_tolerance);
    const ModeNetwork net = atom_cavity_network(config.g_mhz, config.gamma_mhz, config.kappa_mhz, oc.delta_ac_mhz);
    run.min_g2_ratio = std::numeric_limits<double>::infinity();
    for (const auto& pole : resonances(net)) {
        JCParams p = weak;
        p.delta_pc = pole.center_mhz;
        p.delta_pa = pole.center_mhz - oc.delta_ac_mhz;
        run.normal_mode_probes_mhz.push_back(pole.center_mhz);
        run.normal_modes.push_back(lindblad_steady_state(p, oc.cutoff_tolerance));
        run.min_g2_ratio = std::min(run.min_g2_ratio, run.antiresonance.g2_zero / run.normal_modes.back().g2_zero);
    }

    bool valid = run.linear.all_states_valid && run.antiresonance.diagnostics.valid();
    for (const auto& r : run.normal_modes) valid = valid && r.diagnostics.valid();
    const bool g2_ok = config.g_mhz == 0.0 || run.min_g2_ratio >= oc.g2_ratio_threshold;
    run.passed = run.linear.monotone && run.linear.final_deviation < oc.deviation_threshold && valid && g2_ok;

    json rows = json::array();
    for (const auto& r : run.linear.rows) {
        JCParams p = base;
        p.eta = r.eta;
        rows.push_back({{"eta", r.eta},
                        {"eta_over_kappa", r.eta / config.kappa_mhz},
                        {"linear_field", complex_to_json(r.linear_field)},
                        {"deviation", r.deviation},
                        {"oracle", oracle_to_json(p, r.oracle)}});
    }
    json modes = json::array();
    for (std::size_t k = 0; k < run.normal_modes.size(); ++k) {
        JCParams p = weak;
        p.delta_pc = run.normal_mode_probes_mhz[k];
        p.delta_pa = p.delta_pc - oc.delta_ac_mhz;
        modes.push_back(oracle_to_json(p, run.normal_modes[k]));
    }
    write_text_file(config.output_dir / "oracle_report.json",
                    dump_json({{"scenario", config.name},
                               {"linear_limit", rows},
                               {"monotone", run.linear.monotone},
                               {"final_deviation", run.linear.final_deviation},
                               {"weak_drive_scaling_deviation", run.linear.weak_drive_scaling_deviation},
                               {"antiresonance", oracle_to_json(weak, run.antiresonance)},
                               {"normal_modes", modes},
                               {"min_g2_ratio", run.min_g2_ratio},
                               {"passed", run.passed}}));

    log << "  eta/kappa   deviation\n";
    for (const auto& r : run.linear.rows) log << "  " << std::setw(9) << r.eta / config.kappa_mhz << "   " << r.deviation << '\n';
    log << "g2(0) antiresonance: " << run.antiresonance.g2_zero << '\n';
    for (std::size_t k = 0; k < run.normal_modes.size(); ++k)
        log << "g2(0) normal mode at " << run.normal_mode_probes_mhz[k] << " MHz: " << run.normal_modes[k].g2_zero << '\n';
    log << (run.passed ? "PASS" : "FAIL") << '\n';
    return run;
}

// ---------------------------------------------------------- heterodyne-demo

struct HeterodynePoint {
    double probe_mhz = 0.0;
    double model_empty_deg = 0.0;
    double model_coupled_deg = 0.0;
    double model_additional_deg = 0.0;
    PhaseHistogram empty_histogram;       // referenced to the drive
    PhaseHistogram additional_histogram;  // coupled minus empty, per window
    PeriodicGaussianFit additional_fit;
    double fitted_overall_deg = 0.0;
};

struct HeterodyneRun {
    std::vector<HeterodynePoint> points;
};

namespace detail {

inline std::vector<double> demodulated_stream(const std::vector<cplx>& fields, const HeterodyneConfig& hc,
                                              std::uint64_t seed) {
    std::vector<double> out(fields.size());
    for (std::size_t w = 0; w < fields.size(); ++w) {
        BeatNoteConfig bc;
        bc.intermediate_frequency_mhz = hc.intermediate_frequency_mhz;
        bc.sample_rate_msps = hc.sample_rate_msps;
        bc.window_us = hc.window_us;
        bc.windows = 1;
        bc.snr = hc.snr;
        bc.reference_amplitude = std::abs(fields[w]) > 0.0 ? std::abs(fields[w]) : 1.0;
        bc.seed = derive_seed(seed, w);
        out[w] = demodulate(synthesize(fields[w], bc), bc).windows.front().phase_deg();
    }
    return out;
}

}  // namespace detail

inline HeterodyneRun cmd_heterodyne_demo(const ScenarioConfig& config, std::ostream& log) {
    const auto& hc = config.heterodyne;
    const ModeNetwork coupled = atom_cavity_network(config.g_mhz, config.gamma_mhz, config.kappa_mhz,
                                                    config.atom_cavity_detuning_mhz);
    std::vector<Mode> cavity_only{{"cavity", ModeKind::resonator, 0.0, config.kappa_mhz}};
    Eigen::VectorXcd d(1);
    d << 1.0;
    const ModeNetwork empty(cavity_only, Eigen::MatrixXd::Zero(1, 1), d);
    std::vector<ModeNetwork> realizations;
    if (hc.motion) {
        MotionEnsemble e = config.ensemble();
        e.samples = hc.windows_per_point;
        realizations = motion_realizations(coupled, e);
    }

    HeterodyneRun run;
    const ProbeGrid& grid = hc.probe;
    run.points.resize(grid.points);
    parallel_for(grid.points, [&](std::size_t i) {
        HeterodynePoint pt;
        pt.probe_mhz = grid.at(i);
        const cplx empty_field = steady_state(empty, pt.probe_mhz).amplitudes[0];
        const cplx coupled_field = hc.motion ? motion_averaged_state(realizations, pt.probe_mhz)[0]
                                             : steady_state(coupled, pt.probe_mhz).amplitudes[0];
        pt.model_empty_deg = rad_to_deg(std::arg(empty_field));
        pt.model_coupled_deg = rad_to_deg(std::arg(coupled_field));
        pt.model_additional_deg = wrap_degrees(pt.model_coupled_deg - pt.model_empty_deg);

        std::vector<cplx> empty_fields(hc.windows_per_point, empty_field);
        std::vector<cplx> coupled_fields(hc.windows_per_point, coupled_field);
        if (hc.motion)
            for (std::size_t w = 0; w < hc.windows_per_point; ++w)
                coupled_fields[w] = steady_state(realizations[w], pt.probe_mhz).amplitudes[0];
        const std::uint64_t point_seed = derive_seed(config.seed, i);
        const auto empty_phases = detail::demodulated_stream(empty_fields, hc, derive_seed(point_seed, 0));
        const auto coupled_phases = detail::demodulated_stream(coupled_fields, hc, derive_seed(point_seed, 1));

        pt.empty_histogram = accumulate_histogram(empty_phases, {0.0}, hc.bins, HistogramNormalization::per_max);
        pt.additional_histogram = accumulate_histogram(coupled_phases, empty_phases, hc.bins);
        pt.additional_fit = fit_periodic_gaussian(pt.additional_histogram);
        pt.fitted_overall_deg = pt.model_empty_deg + pt.additional_fit.mean_deg;
        run.points[i] = std::move(pt);
    });

    std::string hist = "probe_mhz,kind,bin_center_deg,count,normalized\n";
    std::string phases =
        "probe_mhz,model_empty_deg,model_coupled_deg,model_additional_deg,fitted_additional_deg,"
        "additional_error_deg,fitted_overall_deg\n";
    for (const auto& pt : run.points) {
        for (const auto* h : {&pt.empty_histogram, &pt.additional_histogram}) {
            const auto norm = h->normalized();
            const char* kind = h == &pt.empty_histogram ? "empty" : "additional";
            for (std::size_t b = 0; b < h->bins(); ++b)
                hist += format_number(pt.probe_mhz) + ',' + kind + ',' + format_number(h->center(b)) + ',' +
                        std::to_string(h->counts[b]) + ',' + format_number(norm[b]) + '\n';
        }
        phases += format_number(pt.probe_mhz) + ',' + format_number(pt.model_empty_deg) + ',' +
                  format_number(pt.model_coupled_deg) + ',' + format_number(pt.model_additional_deg) + ',' +
                  format_number(pt.additional_fit.mean_deg) + ',' + format_number(pt.additional_fit.combined_error_deg()) +
                  ',' + format_number(pt.fitted_overall_deg) + '\n';
    }
    // One raw window of the coupled-system beat note at the probe nearest the bare atom.
    std::size_t nearest = 0;
    for (std::size_t i = 1; i < grid.points; ++i)
        if (std::abs(grid.at(i) - config.atom_cavity_detuning_mhz) <
            std::abs(grid.at(nearest) - config.atom_cavity_detuning_mhz))
            nearest = i;
    BeatNoteConfig trace_config;
    trace_config.intermediate_frequency_mhz = hc.intermediate_frequency_mhz;
    trace_config.sample_rate_msps = hc.sample_rate_msps;
    trace_config.window_us = hc.window_us;
    trace_config.windows = 1;
    trace_config.snr = hc.snr;
    trace_config.seed = derive_seed(config.seed, grid.points);
    const cplx trace_field = steady_state(coupled, grid.at(nearest)).amplitudes[0];
    trace_config.reference_amplitude = std::abs(trace_field) > 0.0 ? std::abs(trace_field) : 1.0;
    write_text_file(config.output_dir / "heterodyne_trace.csv", trace_to_csv(synthesize(trace_field, trace_config)));

    write_text_file(config.output_dir / "heterodyne_histograms.csv", hist);
    write_text_file(config.output_dir / "heterodyne_phases.csv", phases);
    log << "heterodyne demo: " << run.points.size() << " probe settings x " << hc.windows_per_point
        << " windows, SNR " << hc.snr << '\n';
    return run;
}

}  // namespace antires
