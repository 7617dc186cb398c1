#include "obsdyn/errors.hpp"

namespace obsdyn {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DegenerateSystem: return "DegenerateSystem";
    case ErrorCode::ClosureResidualExceeded: return "ClosureResidualExceeded";
    case ErrorCode::SingularEvaluationMatrix: return "SingularEvaluationMatrix";
    case ErrorCode::NoAdmissibleDelays: return "NoAdmissibleDelays";
    case ErrorCode::InsufficientHistory: return "InsufficientHistory";
    case ErrorCode::NonFiniteState: return "NonFiniteState";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

} // namespace obsdyn
