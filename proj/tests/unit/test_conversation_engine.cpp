#include "chainstage/conversation_engine.hpp"
#include "chainstage/error.hpp"
#include "chainstage/persona_sim.hpp"

#include "fixtures.hpp"

#include <catch_amalgamated.hpp>

using namespace chainstage;
using namespace chainstage::testing;

namespace {

const Timestamp kOrigin = *parse_timestamp("2024-01-15T09:00:00Z");

EngineOptions fixed_clock() {
    EngineOptions o;
    o.clock = stepping_clock(kOrigin);
    return o;
}

ConversationEngine ballet_engine(MockRules rules) {
    return ConversationEngine(ballet_design(), mock_gateway(std::move(rules)), fixed_clock());
}

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error thrown");
    return ErrorCode::IoError;
}

}  // namespace

TEST_CASE("opening comment routes to a root reaction", "[engine]") {
    auto engine = ballet_engine(ballet_rules());
    auto [session, out] = engine.start_session(kFrozenComment, "s1");
    CHECK(out.mode == StepMode::Routed);
    CHECK(out.route == "If student bullies the bully");
    CHECK(out.position == Position{PositionKind::AtReaction, "r-reflect"});
    CHECK(out.reply == "Do you really think insulting Leslie will make things better for Alex?");
    REQUIRE(session.transcript.size() == 2);
    CHECK(session.transcript[0].origin == "b-bully");
    CHECK(session.transcript[1].origin == "r-reflect");
    CHECK(format_timestamp(session.transcript[1].ts) == "2024-01-15T09:00:02Z");
    REQUIRE(out.prompt_audit.size() == 2);
    CHECK(out.prompt_audit[0].kind == PromptKind::BehaviorClassifier);
    CHECK(out.prompt_audit[1].kind == PromptKind::ReactionGenerator);
    CHECK(engine.depth(session.position) == 1);
}

TEST_CASE("second message routes among the reaction's children", "[engine]") {
    auto engine = ballet_engine(ballet_rules());
    auto [session, first] = engine.start_session(kFrozenComment);
    auto out = engine.step(session, "Maybe not, but what else can I do?");
    CHECK(out.route == "If student agrees that attacking is not ideal");
    CHECK(out.position == Position{PositionKind::LeafContinuation, "r-alternatives"});
    CHECK(engine.depth(session.position) == 2);
}

TEST_CASE("unroutable opening comment gets the opening nudge", "[engine]") {
    auto engine = ballet_engine(all_none_rules());
    auto [session, out] = engine.start_session("what a nice day");
    CHECK(out.mode == StepMode::Fallback);
    CHECK_FALSE(out.route);
    CHECK(session.position.kind == PositionKind::AtRoot);
    CHECK(out.prompt_audit[1].slots.at("response[1]") == ballet_design().opening_nudge[0]);
    CHECK(session.transcript[0].origin == kOriginFallback);
    CHECK(session.fallback_count == 1);
    // Still classified against the roots next time.
    CHECK(engine.candidates_at(session.position).size() == 3);
}

TEST_CASE("fallback mid-tree keeps the position and reuses the reaction", "[engine]") {
    auto engine = ballet_engine(ballet_rules());
    auto [session, first] = engine.start_session(kFrozenComment);
    auto out = engine.step(session, "I like turtles");
    CHECK(out.mode == StepMode::Fallback);
    CHECK(out.position == Position{PositionKind::AtReaction, "r-reflect"});
    CHECK(out.prompt_audit[1].slots.at("response[1]") == engine.index().reaction("r-reflect")->examples[0]);
}

TEST_CASE("classifier output naming a non-candidate is a fallback", "[engine]") {
    auto gw = std::make_shared<LlmGateway>(GatewayConfig{}, std::make_shared<ScriptedProvider>([](const CompletionRequest& r) {
        return r.purpose == Purpose::Classify ? std::string("If student dismisses the bullying") : std::string("ok");
    }));
    ConversationEngine engine(ballet_design(), gw, fixed_clock());
    auto [session, out] = engine.start_session("hmm");
    CHECK(out.mode == StepMode::Fallback);
}

TEST_CASE("blank generations fall back to the teacher example", "[engine]") {
    auto gw = std::make_shared<LlmGateway>(GatewayConfig{}, std::make_shared<ScriptedProvider>([](const CompletionRequest& r) {
        return r.purpose == Purpose::Classify ? std::string("If student supports the victim") : std::string("  \n");
    }));
    ConversationEngine engine(ballet_design(), gw, fixed_clock());
    auto [session, out] = engine.start_session("you'll be great Alex");
    CHECK(out.reply == engine.index().reaction("r-congrats")->examples[0]);
}

TEST_CASE("leaf continuation feeds back recent turns", "[engine]") {
    auto rec = std::make_shared<RecordingProvider>(std::make_shared<MockProvider>(ballet_rules()));
    EngineOptions options = fixed_clock();
    options.continuation_window = 2;
    ConversationEngine engine(ballet_design(), std::make_shared<LlmGateway>(GatewayConfig{}, rec), options);
    auto [session, a] = engine.start_session(kFrozenComment);
    engine.step(session, "Maybe not, but what else can I do?");
    rec->clear();
    auto out = engine.step(session, "ok I'll message Alex");
    CHECK(out.mode == StepMode::Continuation);
    CHECK(out.position == Position{PositionKind::LeafContinuation, "r-alternatives"});
    auto entries = rec->entries();
    REQUIRE(entries.size() == 1);  // no classification at a leaf
    CHECK(entries[0].request.purpose == Purpose::Generate);
    CHECK(out.prompt_audit[0].slots.at("student_message_to_answer") ==
          "Student: Maybe not, but what else can I do?\nChatbot: " + session.transcript[3].text +
              "\nStudent: ok I'll message Alex");
    CHECK(session.transcript[4].origin == kOriginContinuation);
}

TEST_CASE("empty messages are rejected without touching state", "[engine]") {
    auto engine = ballet_engine(ballet_rules());
    auto s = engine.new_session("x");
    CHECK(code_of([&] { engine.step(s, "   "); }) == ErrorCode::EmptyComment);
    CHECK(code_of([&] { engine.start_session(""); }) == ErrorCode::EmptyComment);
    engine.step(s, kFrozenComment);
    auto snapshot = s;
    CHECK(code_of([&] { engine.step(s, "\n"); }) == ErrorCode::EmptyMessage);
    CHECK(s == snapshot);
}

TEST_CASE("invalid designs are refused", "[engine]") {
    auto d = ballet_design();
    d.root_behaviors.clear();
    CHECK(code_of([&] { ConversationEngine(d, mock_gateway({})); }) == ErrorCode::InvalidDesign);
}

TEST_CASE("provider failure leaves the session untouched", "[engine][atomicity]") {
    auto faulty = std::make_shared<FaultyProvider>(std::make_shared<MockProvider>(ballet_rules()));
    ConversationEngine engine(ballet_design(), std::make_shared<LlmGateway>(GatewayConfig{}, faulty), fixed_clock());
    auto session = engine.new_session("atomic");
    std::vector<std::string> script = {kFrozenComment.data(), "Maybe not, but what else can I do?", "ok", "sure"};
    for (const auto& msg : script) {
        int calls = session.position.kind == PositionKind::LeafContinuation ? 1 : 2;
        for (int failing_call = 1; failing_call <= calls; ++failing_call) {
            auto snapshot = session;
            faulty->fail_on_call(failing_call);
            CHECK(code_of([&] { engine.step(session, msg); }) == ErrorCode::ProviderUnavailable);
            CHECK(session == snapshot);
        }
        faulty->disarm();
        engine.step(session, msg);
    }
    CHECK(session.transcript.size() == 8);
}

TEST_CASE("reset returns to awaiting the comment", "[engine]") {
    auto engine = ballet_engine(ballet_rules());
    auto [session, out] = engine.start_session(kFrozenComment, "r");
    auto fresh = engine.reset_session(session);
    CHECK(fresh.session_id == "r");
    CHECK(fresh.transcript.empty());
    CHECK(fresh.position.kind == PositionKind::AwaitingComment);
    CHECK(engine.step(fresh, "Can't wait to see your recital!!").route == "If student ignores the bullying");
}

TEST_CASE("sessions for another design are refused", "[engine]") {
    auto engine = ballet_engine(ballet_rules());
    auto s = engine.new_session();
    s.design_id = "other";
    CHECK(code_of([&] { engine.step(s, "hi"); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("routing only ever follows legal edges on random trees", "[engine][property]") {
    std::mt19937 rng(21);
    for (int t = 0; t < 30; ++t) {
        auto design = random_design(rng, {4, 3, 3});
        // Classifier answers with a random candidate label (or garbage).
        auto gw = std::make_shared<LlmGateway>(
            GatewayConfig{}, std::make_shared<ScriptedProvider>([seed = rng()](const CompletionRequest& r) mutable {
                if (r.purpose != Purpose::Classify) return std::string("reply");
                std::mt19937 local(seed++);
                auto start = r.prompt.find(":\n") + 2;
                auto end = r.prompt.find("\n\nOnly give");
                std::vector<std::string> labels;
                std::string block = r.prompt.substr(start, end - start);
                for (std::size_t p = 0, q; p <= block.size(); p = q + 1) {
                    q = block.find('\n', p);
                    if (q == std::string::npos) q = block.size();
                    labels.push_back(block.substr(p, q - p));
                }
                auto k = std::uniform_int_distribution<std::size_t>(0, labels.size())(local);
                return k == labels.size() ? std::string("none") : labels[k];
            }));
        ConversationEngine engine(design, gw, fixed_clock());
        auto s = engine.new_session();
        for (int i = 0; i < 8; ++i) {
            auto before = s.position;
            auto legal = engine.candidates_at(before);
            auto out = engine.step(s, "message " + std::to_string(i));
            if (out.mode == StepMode::Routed) {
                auto it = std::find_if(legal.begin(), legal.end(), [&](auto* b) { return b->label == *out.route; });
                REQUIRE(it != legal.end());
                CHECK(s.position.node_id == (*it)->reaction_child);
                CHECK(engine.depth(s.position) == engine.depth(before) + 1);
            } else if (out.mode == StepMode::Fallback) {
                CHECK(s.position.node_id == before.node_id);
            } else {
                CHECK(before.kind == PositionKind::LeafContinuation);
                CHECK(s.position == before);
            }
        }
        // Strict alternation of speakers.
        for (std::size_t i = 0; i < s.transcript.size(); ++i)
            CHECK(s.transcript[i].speaker == (i % 2 == 0 ? Speaker::Student : Speaker::Chatbot));
    }
}

TEST_CASE("transcript exports", "[engine]") {
    auto engine = ballet_engine(ballet_rules());
    auto [session, out] = engine.start_session("Leslie ur so lame fr");
    auto jsonl = transcript_to_jsonl(session.transcript);
    CHECK(jsonl.starts_with(R"({"speaker":"STUDENT","text":"Leslie ur so lame fr","origin":"b-bully","ts":"2024-01-15T09:00:01Z"})"
                            "\n"));
    auto md = transcript_to_markdown(session.transcript);
    CHECK(md.starts_with("**Student:** Leslie ur so lame fr\n\n**Chatbot:** "));
}

TEST_CASE("scripted persona rehearsals reach the expected leaves", "[engine][persona]") {
    auto gw = mock_gateway(ballet_rules());
    ConversationEngine engine(ballet_design(), gw, fixed_clock());
    std::map<PersonaKind, std::string> expected_leaf = {{PersonaKind::Aggressive, "r-escalation"},
                                                        {PersonaKind::Upstander, "r-report"},
                                                        {PersonaKind::Passive, "r-encourage"}};
    for (auto [kind, leaf] : expected_leaf) {
        auto r = rehearse(engine, *gw, {kind, "John"}, 6, "p");
        REQUIRE(r.steps.size() == 6);
        CHECK(r.steps[0].outcome.mode == StepMode::Routed);
        CHECK(r.steps[1].outcome.mode == StepMode::Routed);
        for (std::size_t i = 2; i < 6; ++i) CHECK(r.steps[i].outcome.mode == StepMode::Continuation);
        CHECK(r.session.position == Position{PositionKind::LeafContinuation, leaf});
        CHECK(r.session.fallback_count == 0);
    }
}
