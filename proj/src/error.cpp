#include "tocsim/error.hpp"

namespace tocsim {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::invalid_calibration: return "invalid calibration";
        case ErrorKind::invalid_parameter: return "invalid parameter";
        case ErrorKind::encode_error: return "encode error";
        case ErrorKind::unknown_message: return "unknown message";
        case ErrorKind::malformed_payload: return "malformed payload";
        case ErrorKind::invalid_layout: return "invalid layout";
        case ErrorKind::invalid_config: return "invalid config";
        case ErrorKind::no_spot: return "no safe spot";
        case ErrorKind::infeasible_schedule: return "infeasible schedule";
        case ErrorKind::degenerate_geometry: return "degenerate geometry";
        case ErrorKind::stuck_run: return "stuck run";
        case ErrorKind::empty_input: return "empty input";
    }
    return "error";
}

}  // namespace tocsim
