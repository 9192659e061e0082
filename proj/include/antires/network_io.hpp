#pragma once

// Network files (JSON):
//
//   {
//     "modes":     [{"label": "cavity", "kind": "resonator", "frequency_mhz": 0.0, "decay_mhz": 1.5}, ...],
//     "couplings": [{"a": "cavity", "b": "atom", "g_mhz": 16.0}, ...],
//     "drive":     [{"label": "cavity", "re": 1.0, "im": 0.0}]
//   }
//
// Each coupling is listed once per unordered pair; listing a pair again with a
// different value (asymmetric) or coupling a mode to itself is rejected.

#include <cmath>
#include <fstream>
#include <map>
#include <string>
#include <utility>

#include "antires/network.hpp"
#include "json.hpp"

namespace antires {

using json = nlohmann::json;

inline ModeKind parse_mode_kind(const std::string& s) {
    if (s == "emitter" || s == "qubit" || s == "atom") return ModeKind::emitter;
    if (s == "resonator" || s == "cavity") return ModeKind::resonator;
    throw Error(ErrorKind::invalid_network, "unknown mode kind '" + s + "'");
}

inline ModeNetwork network_from_json(const json& doc) {
    try {
        std::vector<Mode> modes;
        for (const auto& m : doc.at("modes")) {
            modes.push_back({m.at("label").get<std::string>(), parse_mode_kind(m.at("kind").get<std::string>()),
                             m.at("frequency_mhz").get<double>(), m.at("decay_mhz").get<double>()});
        }
        std::map<std::string, Eigen::Index> index;
        for (std::size_t i = 0; i < modes.size(); ++i) {
            if (!index.emplace(modes[i].label, static_cast<Eigen::Index>(i)).second)
                throw Error(ErrorKind::invalid_network, "duplicate mode label '" + modes[i].label + "'");
        }
        auto lookup = [&](const std::string& label) {
            auto it = index.find(label);
            if (it == index.end()) throw Error(ErrorKind::invalid_network, "unknown mode label '" + label + "'");
            return it->second;
        };

        const auto n = static_cast<Eigen::Index>(modes.size());
        Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, n);
        Eigen::MatrixXi seen = Eigen::MatrixXi::Zero(n, n);
        if (doc.contains("couplings")) {
            for (const auto& e : doc.at("couplings")) {
                const Eigen::Index a = lookup(e.at("a").get<std::string>());
                const Eigen::Index b = lookup(e.at("b").get<std::string>());
                const double g = e.at("g_mhz").get<double>();
                if (a == b) throw Error(ErrorKind::invalid_network, "self coupling on '" + modes[a].label + "'");
                if (!std::isfinite(g)) throw Error(ErrorKind::invalid_network, "coupling is not finite");
                if (seen(a, b)) {
                    if (c(a, b) != g)
                        throw Error(ErrorKind::invalid_network, "asymmetric coupling between '" + modes[a].label +
                                                                    "' and '" + modes[b].label + "'");
                    continue;
                }
                c(a, b) = c(b, a) = g;
                seen(a, b) = seen(b, a) = 1;
            }
        }

        Eigen::VectorXcd drive = Eigen::VectorXcd::Zero(n);
        if (doc.contains("drive")) {
            for (const auto& e : doc.at("drive")) {
                drive[lookup(e.at("label").get<std::string>())] += cplx(e.value("re", 0.0), e.value("im", 0.0));
            }
        }
        return ModeNetwork(std::move(modes), std::move(c), std::move(drive));
    } catch (const json::exception& e) {
        throw Error(ErrorKind::invalid_network, std::string("malformed network document: ") + e.what());
    }
}

inline json network_to_json(const ModeNetwork& network) {
    json doc;
    doc["modes"] = json::array();
    for (const auto& m : network.modes()) {
        doc["modes"].push_back(
            {{"label", m.label}, {"kind", to_string(m.kind)}, {"frequency_mhz", m.frequency_mhz}, {"decay_mhz", m.decay_mhz}});
    }
    doc["couplings"] = json::array();
    const auto n = static_cast<Eigen::Index>(network.size());
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index k = j + 1; k < n; ++k)
            if (network.couplings()(j, k) != 0.0)
                doc["couplings"].push_back({{"a", network.mode(static_cast<std::size_t>(j)).label},
                                            {"b", network.mode(static_cast<std::size_t>(k)).label},
                                            {"g_mhz", network.couplings()(j, k)}});
    doc["drive"] = json::array();
    for (Eigen::Index j = 0; j < n; ++j)
        if (network.drive()[j] != cplx{})
            doc["drive"].push_back({{"label", network.mode(static_cast<std::size_t>(j)).label},
                                    {"re", network.drive()[j].real()},
                                    {"im", network.drive()[j].imag()}});
    return doc;
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::config, "'" + path + "' is not valid JSON: " + e.what());
    }
}

inline ModeNetwork load_network(const std::string& path) { return network_from_json(read_json_file(path)); }

}  // namespace antires
