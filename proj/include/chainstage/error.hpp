#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace chainstage {

// Machine-readable failure codes shared by every module. The string form
// (see to_string) is what appears in CLI output and HTTP error bodies.
enum class ErrorCode {
    ParseError,
    SchemaError,
    InvalidDesign,
    InvalidScenario,
    EmptyCandidates,
    EmptyMessage,
    EmptyExamples,
    EmptyContext,
    EmptyComment,
    MissingContext,
    SessionNotFound,
    DesignNotFound,
    VersionConflict,
    PreconditionRequired,
    InvalidArgument,
    ProviderUnavailable,
    AuthError,
    RateLimited,
    PromptTooLarge,
    IoError,
    TurnLimit,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message);

    ErrorCode code() const { return code_; }
    std::string_view code_name() const { return to_string(code_); }

    // SCHEMA_ERROR: offending field path.
    const std::string& field() const { return field_; }
    // PARSE_ERROR: 1-based line/column.
    int line() const { return line_; }
    int column() const { return column_; }
    // RATE_LIMITED: seconds, when the provider said so.
    std::optional<double> retry_after() const { return retry_after_; }

    static Error schema(std::string field, const std::string& message);
    static Error parse(int line, int column, const std::string& message);
    static Error rate_limited(std::optional<double> retry_after, const std::string& message);

private:
    ErrorCode code_;
    std::string field_;
    int line_ = 0;
    int column_ = 0;
    std::optional<double> retry_after_;
};

}  // namespace chainstage
