#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace obsdyn {

enum class ErrorCode {
    InvalidArgument,
    DegenerateSystem,
    ClosureResidualExceeded,
    SingularEvaluationMatrix,
    NoAdmissibleDelays,
    InsufficientHistory,
    NonFiniteState,
    ParseError,
    ConfigError,
};

[[nodiscard]] std::string_view to_string(ErrorCode code) noexcept;

// All library failures are reported through this type; code() identifies the
// violated contract so callers (and the CLI exit-code mapping) can branch on it.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message);

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace obsdyn
