#pragma once

#include "chainstage/dialogue_graph.hpp"

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace chainstage {

// Bumped on any byte change to a template below; golden files pin the bytes.
inline constexpr std::string_view kTemplateVersion = "chainstage-prompts/1";

enum class PromptKind { BehaviorClassifier, ReactionGenerator, PersonaComment, PersonaReply };

std::string_view to_string(PromptKind kind);

struct PromptBundle {
    PromptKind kind;
    std::string rendered;
    // Every interpolated value. Per-example slots are indexed: "example[3]", "response[1]", ...
    std::map<std::string, std::string> slots;
    std::string template_version{kTemplateVersion};
};

struct ClassDecision {
    std::optional<std::string> matched;  // absent = 'none'
    std::string raw;
};

enum class Speaker { Student, Chatbot };

struct TranscriptLine {
    Speaker speaker;
    std::string text;
};

enum class PersonaKind { Aggressive, Upstander, Passive };
enum class Stance { Agree, Disagree };
enum class PersonaPhase { Comment, Reply };

std::string_view to_string(PersonaKind kind);
std::optional<PersonaKind> parse_persona_kind(std::string_view text);

struct PersonaSpec {
    PersonaKind kind = PersonaKind::Aggressive;
    std::string student_name = "John";

    Stance stance() const { return kind == PersonaKind::Aggressive ? Stance::Disagree : Stance::Agree; }
};

// "Post by <victim>: <post>\nComment by <bully>: <comment>[\nImage: <note>]"
std::string render_general_context(const Scenario& scenario);

// Few-shot classifier over sibling behavior labels. Example numbering runs
// globally across candidates; the query takes the next number with an empty
// category cue. Throws EMPTY_CANDIDATES / EMPTY_MESSAGE.
PromptBundle render_classifier_prompt(const Scenario& scenario, std::span<const BehaviorNode* const> candidates,
                                      std::string_view message);
PromptBundle render_classifier_prompt(const Scenario& scenario, std::span<const BehaviorNode> candidates,
                                      std::string_view message);

// Total: never throws. Unknown or 'none' output yields an absent match.
ClassDecision parse_class_decision(std::string_view raw, std::span<const std::string> candidate_labels);

// One Example block per reaction example; contexts cycle through the parent
// behavior's examples. Throws EMPTY_EXAMPLES / EMPTY_CONTEXT.
PromptBundle render_reaction_prompt(const Scenario& scenario, const BehaviorNode& parent_behavior,
                                    const ReactionNode& reaction, std::string_view context_text);

std::string render_transcript(std::span<const TranscriptLine> turns, std::string_view chatbot_name,
                              std::string_view student_name);

// REPLY requires both comment and transcript_view (MISSING_CONTEXT otherwise).
PromptBundle render_persona_prompt(const PersonaSpec& spec, const Scenario& scenario, PersonaPhase phase,
                                   std::optional<std::string_view> comment = std::nullopt,
                                   std::optional<std::string_view> transcript_view = std::nullopt);

}  // namespace chainstage
