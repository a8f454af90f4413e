#include "chainstage/prompt_kit.hpp"

#include "chainstage/error.hpp"

#include <array>

namespace chainstage {

namespace {

// Templates. Placeholders are {name}; {victim_name}, {bully_name} and
// {student_name} stand where the original prompts hard-code Alex, Leslie
// and John. Stray quote characters are part of the original prompt text.

constexpr std::string_view kClassifierHeader =
    "Victim's name is {victim_name}. Bully's name is {bully_name}.\n"
    "Classify the user inputs into one of the following categories:\n"
    "{prompt_classes}\n"
    "\n"
    "Only give the name of the category. If none of these categories match, output 'none' as category'.\n"
    "\n";
constexpr std::string_view kClassifierExample =
    "Input {example_num}: {example}\n"
    "Category {example_num}: {class_name}\n"
    "\n";
constexpr std::string_view kClassifierQuery =
    "Input {example_num}: {student_message_to_classify}\n"
    "Category {example_num}:";

constexpr std::string_view kReactionHeader =
    "The student sees a cyberbully on social media.\n"
    "The bully's name is {bully_name} and the victim's name is {victim_name}.\n"
    "The student makes a comment in response to the post.\n"
    "You are talking to that student whose name is not {victim_name} or {bully_name} so don't call him/her "
    "{victim_name} or {bully_name}.\n"
    "Teach that student to counteract cyberbullies based on the following examples:\"\n"
    "\n";
constexpr std::string_view kReactionExample =
    "Example: {example_num}\n"
    "Context: {context_example}\n"
    "Response: {response}\"\n"
    "\n";
constexpr std::string_view kReactionQuery =
    "Now fill in a new response based on the examples.\n"
    "Give answers very similar to the examples:\n"
    "\n"
    "Context: {student_message_to_answer}\n"
    "Response:";

struct PersonaTemplates {
    std::string_view intro;
    std::string_view comment;
    std::string_view reply;
};

constexpr PersonaTemplates kAggressive{
    "You are {student_name}, an aggressive student, and you see the following on Instagram: {general_context}",
    "Give a comment that the student {student_name} would post under the Instagram post in which "
    "{student_name} insults the bully. Be aggressive. Answer in the language style of a teenager.\n"
    "Give an answer that is no longer than 10 words.",
    "You commented under this Instagram post the following comment {comment}.\n"
    "Based on your comment, a chatbot is trying to teach you how to best act with a cyberbullying situation. "
    "This is your conversation so far: {messages}.\n"
    "\n"
    "Give the next answer of the student to this conversation where you tend to not agree with the chatbot.\n"
    "Answer in the language style of a teenager. Give an answer that is no longer than 10 words.\n"
    "{student_name}:",
};

constexpr PersonaTemplates kUpstander{
    "You are {student_name}, a supportive student, and you see the following on Instagram: {general_context}",
    "Give a comment that the student {student_name} would post under the Instagram post in which "
    "{student_name} comforts and supports {victim_name} (the victim). Be gentle and sweet. Answer in the "
    "language style of  a teenager. Give an answer that is no longer than 10 words.",
    "You commented under this Instagram post the following comment {comment}.\n"
    "Based on your comment, a chatbot is trying to teach you how to best act with a cyberbullying situation. "
    "This is your conversation so far: {messages}.\n"
    "\n"
    "Give the next answer of the student to this conversation where you tend to agree with the chatbot.\n"
    "Answer in the language style of a teenager. Give an answer that is no longer than 10 words.\n"
    "{student_name}:",
};

constexpr PersonaTemplates kPassive{
    "You are {student_name}, a student who ignores the bullying and just comments on the original post, and "
    "you see the following on Instagram: {general_context}",
    "Give a comment that the student {student_name} would post under the Instagram post in which "
    "{student_name} is looking forward to seeing the ballet recital. Be gentle and sweet.\n"
    "Answer in the language style of a teenager. Give an answer that is no longer than 10 words.",
    "You commented under this Instagram post the following comment {comment}. Based on your comment, a "
    "chatbot is trying to teach you how to best act with a cyberbullying situation. This is your "
    "conversation so far: {messages}.\n"
    "\n"
    "Give the next answer of the student to this conversation where you tend to agree with the chatbot.\n"
    "Answer in the language style of a teenager. Give an answer that is no longer than 10 words.\n"
    "{student_name}:",
};

const PersonaTemplates& templates_for(PersonaKind kind) {
    switch (kind) {
        case PersonaKind::Aggressive: return kAggressive;
        case PersonaKind::Upstander: return kUpstander;
        case PersonaKind::Passive: return kPassive;
    }
    return kAggressive;
}

using SlotValues = std::map<std::string, std::string, std::less<>>;

// Single pass: substituted values are never re-scanned for placeholders.
void append_filled(std::string& out, std::string_view tmpl, const SlotValues& values) {
    std::size_t pos = 0;
    while (pos < tmpl.size()) {
        auto open = tmpl.find('{', pos);
        if (open == std::string_view::npos) break;
        auto close = tmpl.find('}', open);
        if (close == std::string_view::npos) break;
        auto it = values.find(tmpl.substr(open + 1, close - open - 1));
        if (it == values.end()) {
            out.append(tmpl.substr(pos, close + 1 - pos));
        } else {
            out.append(tmpl.substr(pos, open - pos));
            out.append(it->second);
        }
        pos = close + 1;
    }
    out.append(tmpl.substr(pos));
}

std::string indexed(std::string_view name, std::size_t k) {
    return std::string(name) + "[" + std::to_string(k) + "]";
}

bool strip_one_wrapper(std::string_view& s) {
    static constexpr std::array<std::string_view, 8> kWrappers = {"\"", "'", "`", ".", "\xE2\x80\x9C", "\xE2\x80\x9D",
                                                                  "\xE2\x80\x98", "\xE2\x80\x99"};
    bool changed = false;
    for (auto w : kWrappers) {
        if (s.size() >= w.size() && s.substr(0, w.size()) == w) {
            s.remove_prefix(w.size());
            changed = true;
        }
        if (s.size() >= w.size() && s.substr(s.size() - w.size()) == w) {
            s.remove_suffix(w.size());
            changed = true;
        }
    }
    return changed;
}

std::string normalize_label(std::string_view s) {
    s = trim(s);
    while (strip_one_wrapper(s)) s = trim(s);
    return to_lower_ascii(s);
}

}  // namespace

std::string_view to_string(PromptKind kind) {
    switch (kind) {
        case PromptKind::BehaviorClassifier: return "BEHAVIOR_CLASSIFIER";
        case PromptKind::ReactionGenerator: return "REACTION_GENERATOR";
        case PromptKind::PersonaComment: return "PERSONA_COMMENT";
        case PromptKind::PersonaReply: return "PERSONA_REPLY";
    }
    return "UNKNOWN";
}

std::string_view to_string(PersonaKind kind) {
    switch (kind) {
        case PersonaKind::Aggressive: return "aggressive";
        case PersonaKind::Upstander: return "upstander";
        case PersonaKind::Passive: return "passive";
    }
    return "unknown";
}

std::optional<PersonaKind> parse_persona_kind(std::string_view text) {
    auto t = to_lower_ascii(trim(text));
    if (t == "aggressive") return PersonaKind::Aggressive;
    if (t == "upstander") return PersonaKind::Upstander;
    if (t == "passive") return PersonaKind::Passive;
    return std::nullopt;
}

std::string render_general_context(const Scenario& s) {
    std::string out = "Post by " + s.victim_name + ": " + s.post_text + "\nComment by " + s.bully_name + ": " +
                      s.bully_comment;
    if (s.post_image_note && !is_blank(*s.post_image_note)) out += "\nImage: " + *s.post_image_note;
    return out;
}

PromptBundle render_classifier_prompt(const Scenario& scenario, std::span<const BehaviorNode* const> candidates,
                                      std::string_view message) {
    if (candidates.empty()) throw Error(ErrorCode::EmptyCandidates, "classifier needs at least one category");
    if (is_blank(message)) throw Error(ErrorCode::EmptyMessage, "student message is empty");

    PromptBundle bundle{PromptKind::BehaviorClassifier, {}, {}};
    std::string classes;
    for (const auto* c : candidates) {
        if (!classes.empty()) classes += "\n";
        classes += c->label;
    }
    SlotValues header{{"victim_name", scenario.victim_name},
                      {"bully_name", scenario.bully_name},
                      {"prompt_classes", classes}};
    append_filled(bundle.rendered, kClassifierHeader, header);
    bundle.slots.insert(header.begin(), header.end());

    std::size_t k = 0;
    for (const auto* c : candidates) {
        for (const auto& example : c->examples) {
            ++k;
            SlotValues pair{{"example_num", std::to_string(k)}, {"example", example}, {"class_name", c->label}};
            append_filled(bundle.rendered, kClassifierExample, pair);
            for (const auto& [name, value] : pair) bundle.slots[indexed(name, k)] = value;
        }
    }
    ++k;
    SlotValues query{{"example_num", std::to_string(k)}, {"student_message_to_classify", std::string(message)}};
    append_filled(bundle.rendered, kClassifierQuery, query);
    bundle.slots[indexed("example_num", k)] = std::to_string(k);
    bundle.slots["student_message_to_classify"] = std::string(message);
    return bundle;
}

PromptBundle render_classifier_prompt(const Scenario& scenario, std::span<const BehaviorNode> candidates,
                                      std::string_view message) {
    std::vector<const BehaviorNode*> ptrs;
    for (const auto& c : candidates) ptrs.push_back(&c);
    return render_classifier_prompt(scenario, std::span<const BehaviorNode* const>(ptrs), message);
}

ClassDecision parse_class_decision(std::string_view raw, std::span<const std::string> candidate_labels) {
    ClassDecision decision{std::nullopt, std::string(raw)};
    auto normalized = normalize_label(raw);
    if (normalized.empty() || normalized == "none") return decision;
    for (const auto& label : candidate_labels) {
        if (normalize_label(label) == normalized) {
            decision.matched = label;
            break;
        }
    }
    return decision;
}

PromptBundle render_reaction_prompt(const Scenario& scenario, const BehaviorNode& parent_behavior,
                                    const ReactionNode& reaction, std::string_view context_text) {
    if (reaction.examples.empty())
        throw Error(ErrorCode::EmptyExamples, "reaction " + reaction.node_id + " has no examples");
    if (parent_behavior.examples.empty())
        throw Error(ErrorCode::EmptyExamples, "behavior " + parent_behavior.node_id + " has no examples");
    if (is_blank(context_text)) throw Error(ErrorCode::EmptyContext, "generation context is empty");

    PromptBundle bundle{PromptKind::ReactionGenerator, {}, {}};
    SlotValues names{{"victim_name", scenario.victim_name}, {"bully_name", scenario.bully_name}};
    append_filled(bundle.rendered, kReactionHeader, names);
    bundle.slots.insert(names.begin(), names.end());

    const auto& contexts = parent_behavior.examples;
    for (std::size_t i = 0; i < reaction.examples.size(); ++i) {
        std::size_t k = i + 1;
        SlotValues block{{"example_num", std::to_string(k)},
                         {"context_example", contexts[i % contexts.size()]},
                         {"response", reaction.examples[i]}};
        append_filled(bundle.rendered, kReactionExample, block);
        for (const auto& [name, value] : block) bundle.slots[indexed(name, k)] = value;
    }
    SlotValues query{{"student_message_to_answer", std::string(context_text)}};
    append_filled(bundle.rendered, kReactionQuery, query);
    bundle.slots.insert(query.begin(), query.end());
    return bundle;
}

std::string render_transcript(std::span<const TranscriptLine> turns, std::string_view chatbot_name,
                              std::string_view student_name) {
    std::string out;
    for (const auto& turn : turns) {
        if (!out.empty()) out += "\n";
        out += turn.speaker == Speaker::Chatbot ? chatbot_name : student_name;
        out += ": ";
        out += turn.text;
    }
    return out;
}

PromptBundle render_persona_prompt(const PersonaSpec& spec, const Scenario& scenario, PersonaPhase phase,
                                   std::optional<std::string_view> comment,
                                   std::optional<std::string_view> transcript_view) {
    const auto& t = templates_for(spec.kind);
    SlotValues values{{"student_name", spec.student_name},
                      {"victim_name", scenario.victim_name},
                      {"general_context", render_general_context(scenario)}};
    PromptBundle bundle{phase == PersonaPhase::Comment ? PromptKind::PersonaComment : PromptKind::PersonaReply,
                        {},
                        {}};
    if (phase == PersonaPhase::Reply) {
        if (!comment || is_blank(*comment) || !transcript_view || is_blank(*transcript_view))
            throw Error(ErrorCode::MissingContext, "reply prompt needs the student's comment and the conversation");
        values.emplace("comment", std::string(*comment));
        values.emplace("messages", std::string(*transcript_view));
    }

    append_filled(bundle.rendered, t.intro, values);
    bundle.rendered += "\n\n";
    append_filled(bundle.rendered, phase == PersonaPhase::Comment ? t.comment : t.reply, values);
    bundle.slots.insert(values.begin(), values.end());
    return bundle;
}

}  // namespace chainstage
