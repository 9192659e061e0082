#pragma once

// Antiresonance characterization: drive each node in turn and read off the
// antiresonances. Poles do not depend on the drive; zeros exclude the driven
// node, so driving a much lossier node than the rest makes every zero narrow.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "antires/poles.hpp"

namespace antires {

struct DriveWidthRow {
    std::string drive_label;
    std::vector<AntiresonanceZero> zeros;
    double mean_half_width_mhz = 0.0;
};

struct LossyVerdict {
    std::string label;
    std::vector<DriveWidthRow> table;
};

// Zeros for a drive on each candidate (all nodes when `candidates` is empty).
inline std::vector<DriveWidthRow> antiresonance_width_table(const ModeNetwork& network,
                                                            const std::vector<std::string>& candidates = {}) {
    std::vector<std::string> labels = candidates;
    if (labels.empty())
        for (const auto& m : network.modes()) labels.push_back(m.label);
    std::vector<DriveWidthRow> table;
    table.reserve(labels.size());
    for (const auto& label : labels) {
        DriveWidthRow row;
        row.drive_label = label;
        row.zeros = antiresonances(network, label);
        double sum = 0.0;
        for (const auto& z : row.zeros) sum += z.half_width_mhz;
        row.mean_half_width_mhz = row.zeros.empty() ? 0.0 : sum / static_cast<double>(row.zeros.size());
        table.push_back(std::move(row));
    }
    return table;
}

// Picks the node whose drive minimizes the mean antiresonance half-width.
// Throws AmbiguityError when another candidate's mean is within
// `relative_tolerance` of the minimum.
inline LossyVerdict lossy_component_identify(const ModeNetwork& network,
                                             const std::vector<std::string>& candidates = {},
                                             double relative_tolerance = 1e-3) {
    if (network.size() < 2)
        throw Error(ErrorKind::invalid_network, "lossy-component identification needs at least 2 nodes");
    LossyVerdict verdict;
    verdict.table = antiresonance_width_table(network, candidates);
    if (verdict.table.size() < 2)
        throw Error(ErrorKind::config, "lossy-component identification needs at least 2 drive candidates");

    double best = std::numeric_limits<double>::infinity();
    for (const auto& row : verdict.table) best = std::min(best, row.mean_half_width_mhz);
    std::vector<std::string> tied;
    for (const auto& row : verdict.table)
        if (row.mean_half_width_mhz - best <= relative_tolerance * best) tied.push_back(row.drive_label);
    if (tied.size() > 1) {
        std::string names;
        for (const auto& t : tied) names += (names.empty() ? "" : ", ") + t;
        throw AmbiguityError("lossy component is ambiguous between: " + names, tied);
    }
    verdict.label = tied.front();
    return verdict;
}

}  // namespace antires
