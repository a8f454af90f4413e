#include "chainstage/conversation_engine.hpp"

#include "chainstage/error.hpp"

#include <nlohmann/json.hpp>

namespace chainstage {

std::string_view to_string(PositionKind kind) {
    switch (kind) {
        case PositionKind::AwaitingComment: return "AWAITING_COMMENT";
        case PositionKind::AtRoot: return "AT_ROOT";
        case PositionKind::AtReaction: return "AT_REACTION";
        case PositionKind::LeafContinuation: return "LEAF_CONTINUATION";
    }
    return "UNKNOWN";
}

std::string_view to_string(Speaker speaker) { return speaker == Speaker::Student ? "STUDENT" : "CHATBOT"; }

std::string_view to_string(StepMode mode) {
    switch (mode) {
        case StepMode::Routed: return "ROUTED";
        case StepMode::Fallback: return "FALLBACK";
        case StepMode::Continuation: return "CONTINUATION";
    }
    return "UNKNOWN";
}

std::vector<TranscriptLine> transcript_lines(std::span<const Turn> turns) {
    std::vector<TranscriptLine> out;
    out.reserve(turns.size());
    for (const auto& t : turns) out.push_back({t.speaker, t.text});
    return out;
}

std::string transcript_to_jsonl(std::span<const Turn> turns) {
    std::string out;
    for (const auto& t : turns) {
        nlohmann::ordered_json j;
        j["speaker"] = to_string(t.speaker);
        j["text"] = t.text;
        j["origin"] = t.origin;
        j["ts"] = format_timestamp(t.ts);
        out += j.dump(-1, ' ', false, nlohmann::ordered_json::error_handler_t::replace);
        out += "\n";
    }
    return out;
}

std::string transcript_to_markdown(std::span<const Turn> turns, std::string_view chatbot_name,
                                   std::string_view student_name) {
    std::string out;
    for (const auto& t : turns) {
        out += "**";
        out += t.speaker == Speaker::Chatbot ? chatbot_name : student_name;
        out += ":** ";
        out += t.text;
        out += "\n\n";
    }
    return out;
}

namespace {

// Completion models tend to echo the stray closing quote of the examples.
std::string clean_reply(std::string_view raw) {
    std::string_view s = trim(raw);
    if (!s.empty() && s.back() == '"') {
        std::size_t quotes = 0;
        for (char c : s) quotes += c == '"';
        if (quotes % 2 == 1) s = trim(s.substr(0, s.size() - 1));
    }
    return std::string(s);
}

void throw_if_invalid(const DialogueDesign& design) {
    auto report = validate_design(design);
    if (report.ok()) return;
    std::string msg = "design " + design.design_id + " is invalid:";
    for (const auto& v : report.violations) msg += " " + std::string(to_string(v.code)) + "@" + v.path;
    throw Error(ErrorCode::InvalidDesign, msg);
}

}  // namespace

ConversationEngine::ConversationEngine(DialogueDesign design, std::shared_ptr<const LlmGateway> gateway,
                                       EngineOptions options)
    : design_(std::make_shared<const DialogueDesign>(std::move(design))),
      index_(*design_),
      gateway_(std::move(gateway)),
      options_(std::move(options)) {
    throw_if_invalid(*design_);
    if (!gateway_) throw Error(ErrorCode::InvalidArgument, "engine needs a gateway");
    if (!options_.clock) options_.clock = system_now;

    root_context_.node_id = "root";
    root_context_.label = "opening comment";
    for (const auto* root : index_.roots())
        root_context_.examples.insert(root_context_.examples.end(), root->examples.begin(), root->examples.end());
    opening_nudge_.node_id = "opening-nudge";
    opening_nudge_.instruction_label = "opening nudge";
    opening_nudge_.examples = design_->opening_nudge;
}

SessionState ConversationEngine::new_session(std::string session_id) const {
    SessionState s;
    s.session_id = session_id.empty() ? new_ulid() : std::move(session_id);
    s.design_id = design_->design_id;
    s.created_at = options_.clock();
    return s;
}

std::pair<SessionState, StepOutcome> ConversationEngine::start_session(std::string_view comment,
                                                                       std::string session_id) const {
    if (is_blank(comment)) throw Error(ErrorCode::EmptyComment, "opening comment is empty");
    SessionState session = new_session(std::move(session_id));
    StepOutcome outcome = step(session, comment);
    return {std::move(session), std::move(outcome)};
}

SessionState ConversationEngine::reset_session(const SessionState& session) const {
    SessionState s = session;
    s.transcript.clear();
    s.position = Position{};
    s.fallback_count = 0;
    return s;
}

std::size_t ConversationEngine::depth(const Position& position) const {
    if (position.kind == PositionKind::AwaitingComment || position.kind == PositionKind::AtRoot) return 0;
    return index_.depth_of(position.node_id);
}

std::vector<const BehaviorNode*> ConversationEngine::candidates_at(const Position& position) const {
    switch (position.kind) {
        case PositionKind::AwaitingComment:
        case PositionKind::AtRoot: return index_.roots();
        case PositionKind::AtReaction: {
            const auto* r = index_.reaction(position.node_id);
            if (!r) throw Error(ErrorCode::InvalidArgument, "session position names unknown node " + position.node_id);
            return index_.children_of(*r);
        }
        case PositionKind::LeafContinuation: return {};
    }
    return {};
}

ConversationEngine::Generation ConversationEngine::generate(const BehaviorNode& parent, const ReactionNode& reaction,
                                                            std::string_view context) const {
    Generation g{{}, render_reaction_prompt(design_->scenario, parent, reaction, context)};
    g.reply = clean_reply(gateway_->complete(Purpose::Generate, g.prompt.rendered).text);
    // A blank completion would stall the rehearsal; fall back to the teacher's own wording.
    if (g.reply.empty()) g.reply = reaction.examples.front();
    return g;
}

StepOutcome ConversationEngine::step(SessionState& session, std::string_view message) const {
    const bool opening = session.position.kind == PositionKind::AwaitingComment;
    if (is_blank(message))
        throw Error(opening ? ErrorCode::EmptyComment : ErrorCode::EmptyMessage, "student message is empty");
    if (session.design_id != design_->design_id)
        throw Error(ErrorCode::InvalidArgument,
                    "session " + session.session_id + " belongs to design " + session.design_id);

    StepOutcome out;
    std::string student_origin;
    std::string chatbot_origin;
    Position next = session.position;
    if (opening) next.kind = PositionKind::AtRoot;

    if (session.position.kind == PositionKind::LeafContinuation) {
        const auto* reaction = index_.reaction(session.position.node_id);
        const auto* parent = reaction ? index_.parent_of(reaction->node_id) : nullptr;
        if (!reaction || !parent)
            throw Error(ErrorCode::InvalidArgument, "session position names unknown node " + session.position.node_id);

        std::size_t window = std::min(options_.continuation_window, session.transcript.size());
        auto lines = transcript_lines(std::span<const Turn>(session.transcript).last(window));
        lines.push_back({Speaker::Student, std::string(message)});
        auto context = render_transcript(lines, options_.chatbot_name, options_.student_name);

        auto g = generate(*parent, *reaction, context);
        out.reply = std::move(g.reply);
        out.prompt_audit.push_back(std::move(g.prompt));
        out.mode = StepMode::Continuation;
        student_origin = chatbot_origin = std::string(kOriginContinuation);
    } else {
        const bool at_root = session.position.kind != PositionKind::AtReaction;
        auto candidates = candidates_at(session.position);
        std::vector<std::string> labels;
        for (const auto* c : candidates) labels.push_back(c->label);

        auto classifier = render_classifier_prompt(design_->scenario, candidates, message);
        auto raw = gateway_->complete(Purpose::Classify, classifier.rendered).text;
        auto decision = parse_class_decision(raw, labels);
        out.prompt_audit.push_back(std::move(classifier));

        const BehaviorNode* matched = nullptr;
        if (decision.matched) {
            for (const auto* c : candidates)
                if (c->label == *decision.matched) matched = c;
        }

        if (matched) {
            const auto* reaction = index_.reaction(matched->reaction_child);
            auto g = generate(*matched, *reaction, message);
            out.reply = std::move(g.reply);
            out.prompt_audit.push_back(std::move(g.prompt));
            out.mode = StepMode::Routed;
            out.route = matched->label;
            student_origin = matched->node_id;
            chatbot_origin = reaction->node_id;
            next = Position{reaction->is_leaf() ? PositionKind::LeafContinuation : PositionKind::AtReaction,
                            reaction->node_id};
        } else {
            const BehaviorNode* parent = &root_context_;
            const ReactionNode* reaction = &opening_nudge_;
            if (!at_root) {
                reaction = index_.reaction(session.position.node_id);
                parent = index_.parent_of(session.position.node_id);
            }
            auto g = generate(*parent, *reaction, message);
            out.reply = std::move(g.reply);
            out.prompt_audit.push_back(std::move(g.prompt));
            out.mode = StepMode::Fallback;
            student_origin = chatbot_origin = std::string(kOriginFallback);
        }
    }

    Turn student{Speaker::Student, std::string(message), std::move(student_origin), options_.clock()};
    Turn chatbot{Speaker::Chatbot, out.reply, std::move(chatbot_origin), options_.clock()};
    out.position = next;
    session.transcript.reserve(session.transcript.size() + 2);

    // Commit: only non-throwing operations from here on.
    session.transcript.push_back(std::move(student));
    session.transcript.push_back(std::move(chatbot));
    if (out.mode == StepMode::Fallback) ++session.fallback_count;
    session.position = std::move(next);
    return out;
}

}  // namespace chainstage
