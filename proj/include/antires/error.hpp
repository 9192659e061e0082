#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace antires {

// Failure categories. The CLI maps each kind onto its own exit code.
enum class ErrorKind {
    invalid_network,
    singular_response,
    numeric,
    fit_nonconvergence,
    rank_deficiency,
    non_identifiable,
    ambiguity,
    config,
    io,
    oracle,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

// Raised when two or more candidates tie for the lossy-component verdict.
class AmbiguityError : public Error {
public:
    AmbiguityError(const std::string& what, std::vector<std::string> candidates)
        : Error(ErrorKind::ambiguity, what), candidates_(std::move(candidates)) {}

    const std::vector<std::string>& candidates() const noexcept { return candidates_; }

private:
    std::vector<std::string> candidates_;
};

inline const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::invalid_network: return "invalid-network";
        case ErrorKind::singular_response: return "singular-response";
        case ErrorKind::numeric: return "numeric";
        case ErrorKind::fit_nonconvergence: return "fit-nonconvergence";
        case ErrorKind::rank_deficiency: return "rank-deficiency";
        case ErrorKind::non_identifiable: return "non-identifiable";
        case ErrorKind::ambiguity: return "ambiguity";
        case ErrorKind::config: return "config";
        case ErrorKind::io: return "io";
        case ErrorKind::oracle: return "oracle";
    }
    return "unknown";
}

}  // namespace antires
