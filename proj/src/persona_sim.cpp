#include "chainstage/persona_sim.hpp"

#include "chainstage/error.hpp"

#include <algorithm>

namespace chainstage {

std::string clean_suggestion(std::string_view raw, std::string_view student_name) {
    std::string_view s = trim(raw);
    while (!s.empty()) {
        auto nl = s.find('\n');
        std::string_view line = trim(s.substr(0, nl));
        if (!line.empty() || nl == std::string_view::npos) {
            s = line;
            break;
        }
        s = s.substr(nl + 1);
    }
    std::string prefix = to_lower_ascii(student_name) + ":";
    if (s.size() >= prefix.size() && to_lower_ascii(s.substr(0, prefix.size())) == prefix)
        s = trim(s.substr(prefix.size()));
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = trim(s.substr(1, s.size() - 2));
    return std::string(s);
}

namespace {

Suggestion run(const LlmGateway& gateway, const PersonaSpec& spec, PersonaPhase phase, PromptBundle prompt) {
    auto result = gateway.complete(Purpose::Persona, prompt.rendered);
    Suggestion out{spec.kind, phase, clean_suggestion(result.text, spec.student_name), 0, std::move(prompt)};
    out.word_count = word_count(out.text);
    return out;
}

}  // namespace

Suggestion suggest_comment(const LlmGateway& gateway, const PersonaSpec& spec, const Scenario& scenario) {
    if (auto v = check_scenario(scenario); !v.empty())
        throw Error(ErrorCode::InvalidScenario, v.front().path + ": " + v.front().message);
    return run(gateway, spec, PersonaPhase::Comment, render_persona_prompt(spec, scenario, PersonaPhase::Comment));
}

Suggestion suggest_reply(const LlmGateway& gateway, const PersonaSpec& spec, const Scenario& scenario,
                         std::string_view comment, std::span<const TranscriptLine> transcript,
                         std::string_view chatbot_name) {
    if (is_blank(comment)) throw Error(ErrorCode::MissingContext, "reply suggestion needs the student's comment");
    bool has_chatbot = std::any_of(transcript.begin(), transcript.end(),
                                   [](const TranscriptLine& t) { return t.speaker == Speaker::Chatbot; });
    if (!has_chatbot) throw Error(ErrorCode::MissingContext, "reply suggestion needs at least one chatbot turn");
    if (auto v = check_scenario(scenario); !v.empty())
        throw Error(ErrorCode::InvalidScenario, v.front().path + ": " + v.front().message);

    auto messages = render_transcript(transcript, chatbot_name, spec.student_name);
    return run(gateway, spec, PersonaPhase::Reply,
               render_persona_prompt(spec, scenario, PersonaPhase::Reply, comment, messages));
}

Rehearsal rehearse(const ConversationEngine& engine, const LlmGateway& gateway, const PersonaSpec& spec,
                   std::size_t turns, std::string session_id) {
    const auto& scenario = engine.design().scenario;
    Rehearsal out{spec.kind, engine.new_session(std::move(session_id)), {}, std::nullopt, {}};
    std::string comment;
    try {
        for (std::size_t i = 0; i < turns; ++i) {
            std::string text;
            if (i == 0) {
                comment = text = suggest_comment(gateway, spec, scenario).text;
            } else {
                auto lines = transcript_lines(out.session.transcript);
                text = suggest_reply(gateway, spec, scenario, comment, lines, engine.options().chatbot_name).text;
            }
            Position before = out.session.position;
            auto outcome = engine.step(out.session, text);
            out.steps.push_back({std::move(before), std::move(text), std::move(outcome)});
        }
    } catch (const Error& e) {
        out.error = e.code();
        out.error_message = e.what();
    }
    return out;
}

}  // namespace chainstage
