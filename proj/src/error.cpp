#include "chainstage/error.hpp"

namespace chainstage {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::ParseError: return "PARSE_ERROR";
        case ErrorCode::SchemaError: return "SCHEMA_ERROR";
        case ErrorCode::InvalidDesign: return "INVALID_DESIGN";
        case ErrorCode::InvalidScenario: return "INVALID_SCENARIO";
        case ErrorCode::EmptyCandidates: return "EMPTY_CANDIDATES";
        case ErrorCode::EmptyMessage: return "EMPTY_MESSAGE";
        case ErrorCode::EmptyExamples: return "EMPTY_EXAMPLES";
        case ErrorCode::EmptyContext: return "EMPTY_CONTEXT";
        case ErrorCode::EmptyComment: return "EMPTY_COMMENT";
        case ErrorCode::MissingContext: return "MISSING_CONTEXT";
        case ErrorCode::SessionNotFound: return "SESSION_NOT_FOUND";
        case ErrorCode::DesignNotFound: return "DESIGN_NOT_FOUND";
        case ErrorCode::VersionConflict: return "VERSION_CONFLICT";
        case ErrorCode::PreconditionRequired: return "PRECONDITION_REQUIRED";
        case ErrorCode::InvalidArgument: return "INVALID_ARGUMENT";
        case ErrorCode::ProviderUnavailable: return "PROVIDER_UNAVAILABLE";
        case ErrorCode::AuthError: return "AUTH_ERROR";
        case ErrorCode::RateLimited: return "RATE_LIMITED";
        case ErrorCode::PromptTooLarge: return "PROMPT_TOO_LARGE";
        case ErrorCode::IoError: return "IO_ERROR";
        case ErrorCode::TurnLimit: return "TURN_LIMIT";
    }
    return "UNKNOWN";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(message), code_(code) {}

Error Error::schema(std::string field, const std::string& message) {
    Error e(ErrorCode::SchemaError, field + ": " + message);
    e.field_ = std::move(field);
    return e;
}

Error Error::parse(int line, int column, const std::string& message) {
    Error e(ErrorCode::ParseError, "line " + std::to_string(line) + ", column " +
                                       std::to_string(column) + ": " + message);
    e.line_ = line;
    e.column_ = column;
    return e;
}

Error Error::rate_limited(std::optional<double> retry_after, const std::string& message) {
    Error e(ErrorCode::RateLimited, message);
    e.retry_after_ = retry_after;
    return e;
}

}  // namespace chainstage
