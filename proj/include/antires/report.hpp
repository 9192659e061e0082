#pragma once

// CSV and JSON serialization of spectra, pole/zero tables, fits and histograms.
// Numbers are written with 17 significant digits so files re-parse exactly.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "antires/fits.hpp"
#include "antires/heterodyne.hpp"
#include "antires/network_io.hpp"
#include "antires/oracle.hpp"
#include "antires/poles.hpp"
#include "antires/spectrum.hpp"

namespace antires {

inline std::string format_number(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::io, "cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw Error(ErrorKind::io, "write failed for '" + path.string() + "'");
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, "cannot open '" + path.string() + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

// Columns: probe_mhz, then per mode <label>_re, _im, _magnitude, _excitation, _phase_unwrapped_rad.
inline std::string spectrum_to_csv(const ComplexSpectrum& s) {
    std::ostringstream os;
    os << "probe_mhz";
    for (const auto& c : s.channels)
        os << ',' << c.label << "_re," << c.label << "_im," << c.label << "_magnitude," << c.label << "_excitation,"
           << c.label << "_phase_unwrapped_rad";
    os << '\n';
    for (std::size_t i = 0; i < s.probe_mhz.size(); ++i) {
        os << format_number(s.probe_mhz[i]);
        for (const auto& c : s.channels) {
            os << ',' << format_number(c.amplitude[i].real()) << ',' << format_number(c.amplitude[i].imag()) << ','
               << format_number(c.magnitude[i]) << ',' << format_number(c.excitation[i]) << ','
               << format_number(c.phase_unwrapped[i]);
        }
        os << '\n';
    }
    return os.str();
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) out.push_back(cell);
    return out;
}

// Inverse of spectrum_to_csv. The grid is rebuilt from the first/last probe values.
inline ComplexSpectrum spectrum_from_csv(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line)) throw Error(ErrorKind::io, "empty spectrum CSV");
    const auto header = split_csv_line(line);
    if (header.empty() || header[0] != "probe_mhz" || (header.size() - 1) % 5 != 0)
        throw Error(ErrorKind::io, "spectrum CSV header is malformed");
    ComplexSpectrum s;
    const std::size_t modes = (header.size() - 1) / 5;
    s.channels.resize(modes);
    for (std::size_t m = 0; m < modes; ++m) {
        const std::string& h = header[1 + 5 * m];
        s.channels[m].label = h.substr(0, h.size() - 3);
    }
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size()) throw Error(ErrorKind::io, "spectrum CSV row has wrong column count");
        s.probe_mhz.push_back(std::stod(cells[0]));
        for (std::size_t m = 0; m < modes; ++m) {
            auto& c = s.channels[m];
            c.amplitude.emplace_back(std::stod(cells[1 + 5 * m]), std::stod(cells[2 + 5 * m]));
            c.magnitude.push_back(std::stod(cells[3 + 5 * m]));
            c.excitation.push_back(std::stod(cells[4 + 5 * m]));
            c.phase_unwrapped.push_back(std::stod(cells[5 + 5 * m]));
        }
    }
    if (s.probe_mhz.size() >= 2) {
        s.grid.start_mhz = s.probe_mhz.front();
        s.grid.stop_mhz = s.probe_mhz.back();
        s.grid.points = s.probe_mhz.size();
    }
    return s;
}

inline json poles_to_json(const std::vector<ResonancePole>& poles) {
    json arr = json::array();
    for (const auto& p : poles)
        arr.push_back({{"center_mhz", p.center_mhz}, {"half_width_mhz", p.half_width_mhz}, {"multiplicity", p.multiplicity}});
    return arr;
}

inline json zeros_to_json(const std::vector<AntiresonanceZero>& zeros) {
    json arr = json::array();
    for (const auto& z : zeros)
        arr.push_back({{"center_mhz", z.center_mhz}, {"half_width_mhz", z.half_width_mhz}, {"drive_label", z.drive_label}});
    return arr;
}

inline json numeric_zeros_to_json(const std::vector<AntiresonanceZero>& zeros) {
    json arr = json::array();
    for (const auto& z : zeros)
        arr.push_back({{"center_mhz", z.center_mhz},
                       {"half_width_mhz", z.half_width_mhz},
                       {"drive_label", z.drive_label},
                       {"prominence_db", z.prominence_db},
                       {"near_boundary", z.near_boundary},
                       {"rational_refined", z.rational_refined}});
    return arr;
}

inline json arctan_fit_to_json(const ArctanFitResult& f) {
    return {{"model", "arctan_phase"},
            {"parameters",
             {{"center", f.center},
              {"width", f.width},
              {"swing_deg", f.swing_deg},
              {"offset_deg", f.offset_deg},
              {"background_slope_deg", f.background_slope}}},
            {"standard_errors",
             {{"center", f.center_error},
              {"width", f.width_error},
              {"swing_deg", f.swing_error},
              {"offset_deg", f.offset_error},
              {"background_slope_deg", f.slope_error}}},
            {"observed_swing_deg", f.observed_swing_deg},
            {"residual_norm", f.residual_norm},
            {"iterations", f.iterations},
            {"converged", f.converged},
            {"poorly_conditioned", f.poorly_conditioned}};
}

inline json periodic_gaussian_to_json(const PeriodicGaussianFit& f) {
    return {{"model", "periodic_gaussian"},
            {"parameters", {{"mean_deg", f.mean_deg}, {"sigma_deg", f.sigma_deg}, {"amplitude", f.amplitude}}},
            {"standard_errors", {{"mean_deg", f.mean_uncertainty_deg}}},
            {"standard_error_of_mean_deg", f.standard_error_of_mean_deg},
            {"combined_error_deg", f.combined_error_deg()}};
}

inline json complex_to_json(cplx z) { return {{"re", z.real()}, {"im", z.imag()}}; }

inline json oracle_to_json(const JCParams& p, const OracleResult& r) {
    return {{"params",
             {{"g_mhz", p.g},
              {"gamma_mhz", p.gamma},
              {"kappa_mhz", p.kappa},
              {"delta_pa_mhz", p.delta_pa},
              {"delta_pc_mhz", p.delta_pc},
              {"eta", p.eta},
              {"initial_cutoff", p.cutoff}}},
            {"field", complex_to_json(r.field)},
            {"dipole", complex_to_json(r.dipole)},
            {"photon_number", r.photon_number},
            {"g2_zero", r.g2_zero},
            {"cutoff", r.cutoff},
            {"convergence_delta", r.convergence_delta},
            {"diagnostics",
             {{"hermiticity_error", r.diagnostics.hermiticity_error},
              {"trace_error", r.diagnostics.trace_error},
              {"min_eigenvalue", r.diagnostics.min_eigenvalue},
              {"valid", r.diagnostics.valid()}}}};
}

// Columns: bin_center_deg, count, normalized.
inline std::string histogram_to_csv(const PhaseHistogram& h) {
    std::ostringstream os;
    os << "bin_center_deg,count,normalized\n";
    const auto norm = h.normalized();
    for (std::size_t b = 0; b < h.bins(); ++b)
        os << format_number(h.center(b)) << ',' << h.counts[b] << ',' << format_number(norm[b]) << '\n';
    return os.str();
}

// Columns: t_us, current.
inline std::string trace_to_csv(const BeatTrace& trace) {
    std::ostringstream os;
    os << "t_us,current\n";
    for (std::size_t n = 0; n < trace.current.size(); ++n)
        os << format_number(trace.time_us(n)) << ',' << format_number(trace.current[n]) << '\n';
    return os.str();
}

inline std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

}  // namespace antires
