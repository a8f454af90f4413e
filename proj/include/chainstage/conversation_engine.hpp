#pragma once

#include "chainstage/dialogue_graph.hpp"
#include "chainstage/llm_gateway.hpp"
#include "chainstage/prompt_kit.hpp"
#include "chainstage/util.hpp"

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace chainstage {

// Where a session stands in the tree.
//   AwaitingComment   fresh or reset; the next message is the opening comment
//   AtRoot            comment received but never routed; next message is classified against the roots
//   AtReaction(n)     n has behavior children; next message is classified against them
//   LeafContinuation(n) n is a leaf; replies are generated from n without classification
enum class PositionKind { AwaitingComment, AtRoot, AtReaction, LeafContinuation };

std::string_view to_string(PositionKind kind);

struct Position {
    PositionKind kind = PositionKind::AwaitingComment;
    std::string node_id;

    bool operator==(const Position&) const = default;
};

inline constexpr std::string_view kOriginFallback = "FALLBACK";
inline constexpr std::string_view kOriginContinuation = "CONTINUATION";

std::string_view to_string(Speaker speaker);

// Student turns carry the matched behavior id, chatbot turns the reaction id;
// unrouted exchanges carry FALLBACK, leaf exchanges CONTINUATION.
struct Turn {
    Speaker speaker;
    std::string text;
    std::string origin;
    Timestamp ts{};

    bool operator==(const Turn&) const = default;
};

struct SessionState {
    std::string session_id;
    std::string design_id;
    std::uint64_t design_version = 0;
    Position position;
    std::vector<Turn> transcript;
    std::uint64_t fallback_count = 0;
    Timestamp created_at{};

    bool operator==(const SessionState&) const = default;
};

enum class StepMode { Routed, Fallback, Continuation };

std::string_view to_string(StepMode mode);

struct StepOutcome {
    std::string reply;
    std::optional<std::string> route;  // matched behavior label; absent = NONE
    StepMode mode = StepMode::Fallback;
    std::vector<PromptBundle> prompt_audit;
    Position position;  // after the step
};

std::vector<TranscriptLine> transcript_lines(std::span<const Turn> turns);

// One JSON object per line: {"speaker","text","origin","ts"}.
std::string transcript_to_jsonl(std::span<const Turn> turns);
std::string transcript_to_markdown(std::span<const Turn> turns, std::string_view chatbot_name = "Chatbot",
                                   std::string_view student_name = "Student");

struct EngineOptions {
    std::size_t continuation_window = 6;  // transcript turns fed back at leaves
    std::string chatbot_name = "Chatbot";
    std::string student_name = "Student";
    Clock clock = system_now;
};

// Routes student messages through one validated design. Immutable after
// construction; sessions are plain values owned by the caller.
class ConversationEngine {
public:
    // Throws INVALID_DESIGN if validate_design reports anything.
    ConversationEngine(DialogueDesign design, std::shared_ptr<const LlmGateway> gateway, EngineOptions options = {});

    const DialogueDesign& design() const { return *design_; }
    const DesignIndex& index() const { return index_; }
    const EngineOptions& options() const { return options_; }

    SessionState new_session(std::string session_id = {}) const;

    // New session plus the chatbot's answer to the opening comment.
    std::pair<SessionState, StepOutcome> start_session(std::string_view comment, std::string session_id = {}) const;

    // Advances `session` by one student message. All-or-nothing: if anything
    // throws (provider errors included) `session` is left untouched.
    StepOutcome step(SessionState& session, std::string_view message) const;

    SessionState reset_session(const SessionState& session) const;

    // 0 before the first route, otherwise the number of behaviors along the path.
    std::size_t depth(const Position& position) const;

    // Labels a message would be classified against from `position`; empty at leaves.
    std::vector<const BehaviorNode*> candidates_at(const Position& position) const;

private:
    struct Generation {
        std::string reply;
        PromptBundle prompt;
    };

    Generation generate(const BehaviorNode& parent, const ReactionNode& reaction, std::string_view context) const;

    std::shared_ptr<const DialogueDesign> design_;
    DesignIndex index_;
    std::shared_ptr<const LlmGateway> gateway_;
    EngineOptions options_;
    BehaviorNode root_context_;   // all root examples, used as contexts for the opening nudge
    ReactionNode opening_nudge_;  // synthetic reaction for unroutable opening comments
};

}  // namespace chainstage
