#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tocsim {

enum class ErrorKind {
    invalid_calibration,
    invalid_parameter,
    encode_error,
    unknown_message,
    malformed_payload,
    invalid_layout,
    invalid_config,
    no_spot,
    infeasible_schedule,
    degenerate_geometry,
    stuck_run,
    empty_input,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries one of the kinds above so
/// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace tocsim
