#pragma once

#include "chainstage/conversation_engine.hpp"
#include "chainstage/dialogue_graph.hpp"
#include "chainstage/error.hpp"
#include "chainstage/llm_gateway.hpp"
#include "chainstage/prompt_kit.hpp"

#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace chainstage {

// A simulated student's proposed comment or reply. Word count is reported,
// not enforced; the length bound lives in the prompt only.
struct Suggestion {
    PersonaKind persona;
    PersonaPhase phase;
    std::string text;
    std::size_t word_count = 0;
    PromptBundle prompt;
};

// Throws INVALID_SCENARIO for a scenario failing its invariants; provider errors propagate.
Suggestion suggest_comment(const LlmGateway& gateway, const PersonaSpec& spec, const Scenario& scenario);

// Throws MISSING_CONTEXT when the comment is blank or the transcript has no chatbot turn.
Suggestion suggest_reply(const LlmGateway& gateway, const PersonaSpec& spec, const Scenario& scenario,
                         std::string_view comment, std::span<const TranscriptLine> transcript,
                         std::string_view chatbot_name = "Chatbot");

// Trims, keeps the first non-empty line, drops a leading "<name>:" echo and wrapping quotes.
std::string clean_suggestion(std::string_view raw, std::string_view student_name);

struct RehearsalStep {
    Position before;
    std::string student_text;
    StepOutcome outcome;
};

struct Rehearsal {
    PersonaKind persona;
    SessionState session;
    std::vector<RehearsalStep> steps;
    std::optional<ErrorCode> error;  // set when a step failed; session holds the turns before it
    std::string error_message;
};

// Lets a persona talk to the engine for `turns` student messages: one
// suggested comment opens the session, suggested replies follow.
// Provider and engine errors stop the run and are recorded, not thrown.
Rehearsal rehearse(const ConversationEngine& engine, const LlmGateway& gateway, const PersonaSpec& spec,
                   std::size_t turns, std::string session_id = {});

}  // namespace chainstage
