#pragma once

#include "chainstage/conversation_engine.hpp"
#include "chainstage/dialogue_graph.hpp"
#include "chainstage/error.hpp"
#include "chainstage/llm_gateway.hpp"
#include "chainstage/persona_sim.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

namespace chainstage {

inline constexpr std::string_view kVersion = "0.1.0";

// Ids usable as file names: [A-Za-z0-9][A-Za-z0-9._-]{0,63}
bool is_valid_id(std::string_view id);

// A design failed validate_design; carries the full report.
class DesignRejected : public Error {
public:
    explicit DesignRejected(ValidationReport report);
    const ValidationReport& report() const { return report_; }

private:
    ValidationReport report_;
};

struct StoredDesign {
    std::shared_ptr<const DialogueDesign> design;
    std::string document;  // canonical serialization
    std::uint64_t version = 0;
};

// One canonical file per design version under <root>/<id>/<version>.json.
// Deleting writes a tombstone; old versions stay readable for pinned sessions.
class DesignStore {
public:
    explicit DesignStore(std::filesystem::path root);

    std::optional<StoredDesign> latest(std::string_view id) const;
    std::optional<StoredDesign> at_version(std::string_view id, std::uint64_t version) const;
    std::vector<StoredDesign> list() const;

    struct PutResult {
        std::uint64_t version = 0;
        bool created = false;
        bool changed = false;
    };
    // Existing designs need if_match (PRECONDITION_REQUIRED) equal to the
    // current version (VERSION_CONFLICT). An identical document is a no-op.
    // Throws DesignRejected if the design does not validate.
    PutResult put(const DialogueDesign& design, std::optional<std::uint64_t> if_match);
    void remove(std::string_view id, std::optional<std::uint64_t> if_match);

private:
    struct Record {
        std::map<std::uint64_t, StoredDesign> versions;
        bool deleted = false;
    };
    std::filesystem::path root_;
    mutable std::shared_mutex mu_;
    std::map<std::string, Record, std::less<>> records_;
};

// Append-only JSONL event log: create / commit / reset per session.
// A torn final line (crash mid-append) is dropped on replay.
class SessionLog {
public:
    SessionLog(std::filesystem::path file, bool sync_writes);
    ~SessionLog();
    SessionLog(const SessionLog&) = delete;
    SessionLog& operator=(const SessionLog&) = delete;

    std::vector<SessionState> replay() const;
    static std::vector<SessionState> replay_file(const std::filesystem::path& file);
    // Writes all events in one append; throws IO_ERROR.
    void append(const std::vector<nlohmann::ordered_json>& events);

    static nlohmann::ordered_json create_event(const SessionState& session);
    static nlohmann::ordered_json commit_event(const SessionState& session, std::size_t new_turns);
    static nlohmann::ordered_json reset_event(const SessionState& session);

private:
    std::filesystem::path file_;
    bool sync_;
    std::mutex mu_;
    int fd_ = -1;
};

// Read-only view of a stored session transcript (no service, no provider).
std::optional<SessionState> load_session(const std::filesystem::path& data_dir, std::string_view session_id);

struct ServiceConfig {
    std::filesystem::path data_dir;
    GatewayConfig gateway;
    std::optional<MockRules> mock_rules;         // overrides gateway.mock_rules_path
    std::shared_ptr<HttpTransport> transport;    // http mode only; null = real client
    Clock clock = system_now;
    std::size_t max_student_turns = 200;
    std::size_t continuation_window = 6;
    bool sync_writes = true;
};

class StudioService {
public:
    explicit StudioService(ServiceConfig config);

    const ServiceConfig& config() const { return config_; }
    const LlmGateway& gateway() const { return *gateway_; }
    DesignStore& designs() { return designs_; }

    // Designs. Bodies are design documents; PARSE_ERROR / SCHEMA_ERROR / INVALID_ARGUMENT
    // for malformed input, DesignRejected for invalid trees.
    DesignStore::PutResult put_design(std::string_view id, std::string_view body, std::optional<std::uint64_t> if_match);
    StoredDesign get_design(std::string_view id) const;
    void delete_design(std::string_view id, std::optional<std::uint64_t> if_match);
    // Validates `body`, or the stored design when body is blank. Never persists.
    ValidationReport validate(std::string_view id, std::string_view body) const;
    Suggestion suggest_comment(std::string_view design_id, const PersonaSpec& spec) const;

    // Sessions. Each session is pinned to the design version it started with.
    std::pair<SessionState, StepOutcome> start_session(std::string_view design_id, std::string_view comment,
                                                       std::string session_id = {});
    std::pair<SessionState, StepOutcome> post_message(std::string_view session_id, std::string_view text);
    SessionState reset_session(std::string_view session_id);
    SessionState session(std::string_view session_id) const;
    // COMMENT phase while the session awaits its comment, REPLY afterwards.
    Suggestion suggestion(std::string_view session_id, const PersonaSpec& spec) const;
    std::size_t session_count() const;

    std::shared_ptr<const ConversationEngine> engine_for(std::string_view design_id, std::uint64_t version) const;

private:
    struct Slot {
        std::mutex mu;
        SessionState state;
    };
    std::shared_ptr<Slot> slot(std::string_view session_id) const;

    ServiceConfig config_;
    std::shared_ptr<LlmGateway> gateway_;
    DesignStore designs_;
    SessionLog log_;

    mutable std::shared_mutex sessions_mu_;
    std::map<std::string, std::shared_ptr<Slot>, std::less<>> sessions_;

    mutable std::mutex engines_mu_;
    mutable std::map<std::pair<std::string, std::uint64_t>, std::shared_ptr<const ConversationEngine>> engines_;
};

// JSON views used by the HTTP API and the CLI.
nlohmann::ordered_json position_to_json(const Position& position);
nlohmann::ordered_json session_to_json(const SessionState& session, bool with_transcript = false);
nlohmann::ordered_json outcome_to_json(const StepOutcome& outcome);
nlohmann::ordered_json suggestion_to_json(const Suggestion& suggestion);

}  // namespace chainstage
