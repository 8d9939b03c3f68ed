#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mdqed {

enum class ErrorCode {
    invalid_argument,
    geometry,
    mode_index,
    outside_domain,
    coincident_points,
    on_axis,
    pole,
    layout,
    atom_in_medium,
    schema,
    non_convergence,
    non_markovian,
    norm_drift,
};

inline std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::geometry: return "geometry";
    case ErrorCode::mode_index: return "mode-index";
    case ErrorCode::outside_domain: return "outside-domain";
    case ErrorCode::coincident_points: return "coincident-points";
    case ErrorCode::on_axis: return "on-axis";
    case ErrorCode::pole: return "pole";
    case ErrorCode::layout: return "layout";
    case ErrorCode::atom_in_medium: return "atom-in-medium";
    case ErrorCode::schema: return "schema";
    case ErrorCode::non_convergence: return "non-convergence";
    case ErrorCode::non_markovian: return "non-markovian";
    case ErrorCode::norm_drift: return "norm-drift";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

inline void require(bool ok, ErrorCode code, const std::string& msg) {
    if (!ok) throw Error(code, msg);
}

} // namespace mdqed
