#include "chainstage/error.hpp"
#include "chainstage/prompt_kit.hpp"

#include "fixtures.hpp"

#include <catch_amalgamated.hpp>

#include <regex>

using namespace chainstage;
using namespace chainstage::testing;

TEST_CASE("rendered prompts equal the golden files byte for byte", "[prompt][golden]") {
    for (const auto& [name, rendered] : render_golden_set()) {
        DYNAMIC_SECTION(name) {
            auto expected = read_file(testdata_dir() / "golden" / name);
            CHECK(rendered == expected);
        }
    }
}

TEST_CASE("every slot value appears in the rendered text", "[prompt][property]") {
    std::mt19937 rng(3);
    for (int i = 0; i < 50; ++i) {
        auto d = random_design(rng, {3, 4, 6});
        DesignIndex idx(d);
        auto msg = random_text(rng, 1, 6);
        auto bundles = std::vector<PromptBundle>{render_classifier_prompt(d.scenario, idx.roots(), msg)};
        auto* root = idx.roots().front();
        bundles.push_back(render_reaction_prompt(d.scenario, *root, *idx.reaction(root->reaction_child), msg));
        for (auto kind : {PersonaKind::Aggressive, PersonaKind::Upstander, PersonaKind::Passive}) {
            bundles.push_back(render_persona_prompt({kind, "Sam"}, d.scenario, PersonaPhase::Comment));
            bundles.push_back(render_persona_prompt({kind, "Sam"}, d.scenario, PersonaPhase::Reply, msg, "Chatbot: hi"));
        }
        for (const auto& b : bundles) {
            CHECK(b.template_version == kTemplateVersion);
            for (const auto& [slot, value] : b.slots) {
                INFO(slot);
                CHECK(b.rendered.find(value) != std::string::npos);
            }
        }
    }
}

TEST_CASE("placeholders inside values are not expanded", "[prompt]") {
    auto d = ballet_design();
    DesignIndex idx(d);
    auto b = render_classifier_prompt(d.scenario, idx.roots(), "try {victim_name} and {bully_name}");
    CHECK(b.rendered.ends_with("try {victim_name} and {bully_name}\nCategory 8:"));
}

TEST_CASE("classifier numbering is a bijection onto 1..N+1", "[prompt][property]") {
    std::mt19937 rng(5);
    std::regex input_re("^Input (\\d+): ");
    std::regex category_re("^Category (\\d+):");
    for (int i = 0; i < 50; ++i) {
        auto d = random_design(rng, {2, 4, 6});
        DesignIndex idx(d);
        auto roots = idx.roots();
        std::size_t total = 0;
        for (auto* r : roots) total += r->examples.size();
        auto text = render_classifier_prompt(d.scenario, roots, "query").rendered;

        std::vector<int> inputs, categories;
        std::size_t start = 0;
        while (start <= text.size()) {
            auto end = text.find('\n', start);
            auto line = text.substr(start, end == std::string::npos ? std::string::npos : end - start);
            std::smatch m;
            if (std::regex_search(line, m, input_re)) inputs.push_back(std::stoi(m[1]));
            if (std::regex_search(line, m, category_re)) categories.push_back(std::stoi(m[1]));
            if (end == std::string::npos) break;
            start = end + 1;
        }
        REQUIRE(inputs.size() == total + 1);
        REQUIRE(categories == inputs);
        for (std::size_t k = 0; k < inputs.size(); ++k) CHECK(inputs[k] == static_cast<int>(k + 1));
    }
}

TEST_CASE("classifier input errors", "[prompt]") {
    auto d = ballet_design();
    DesignIndex idx(d);
    std::vector<const BehaviorNode*> none;
    CHECK_THROWS_MATCHES(render_classifier_prompt(d.scenario, none, "hi"), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                             return e.code() == ErrorCode::EmptyCandidates;
                         }));
    CHECK_THROWS_MATCHES(render_classifier_prompt(d.scenario, idx.roots(), "  "), Error,
                         Catch::Matchers::Predicate<Error>([](const Error& e) {
                             return e.code() == ErrorCode::EmptyMessage;
                         }));
}

TEST_CASE("reaction prompt cycles parent examples as contexts", "[prompt]") {
    BehaviorNode parent{"b", "If x", {"c1", "c2"}, "r"};
    ReactionNode reaction{"r", "do y", {"r1", "r2", "r3"}, {}};
    auto b = render_reaction_prompt(Scenario{}, parent, reaction, "ctx");
    CHECK(b.slots.at("context_example[3]") == "c1");
    CHECK(b.slots.at("response[3]") == "r3");
    CHECK(b.rendered.ends_with("Context: ctx\nResponse:"));

    ReactionNode empty{"r", "do y", {}, {}};
    CHECK_THROWS_AS(render_reaction_prompt(Scenario{}, parent, empty, "ctx"), Error);
    try {
        render_reaction_prompt(Scenario{}, parent, reaction, "\n");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::EmptyContext);
    }
}

TEST_CASE("reply prompt needs comment and transcript", "[prompt]") {
    try {
        render_persona_prompt({}, ballet_design().scenario, PersonaPhase::Reply, "hey");
        FAIL("expected MISSING_CONTEXT");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::MissingContext);
    }
}

TEST_CASE("persona prompts substitute names", "[prompt]") {
    Scenario s;
    s.victim_name = "Mia";
    s.bully_name = "Rob";
    s.post_text = "p";
    s.bully_comment = "c";
    auto b = render_persona_prompt({PersonaKind::Upstander, "Sam"}, s, PersonaPhase::Comment);
    CHECK(b.rendered.starts_with("You are Sam, a supportive student"));
    CHECK(b.rendered.find("comforts and supports Mia (the victim)") != std::string::npos);
    CHECK(b.rendered.find("Post by Mia: p\nComment by Rob: c\n\n") != std::string::npos);
}

TEST_CASE("class decision parsing", "[prompt]") {
    std::vector<std::string> labels = {"If student bullies the bully", "If student supports the victim"};
    CHECK(parse_class_decision(" If student bullies the bully\n", labels).matched == labels[0]);
    CHECK(parse_class_decision("\"if student supports the victim.\"", labels).matched == labels[1]);
    CHECK(parse_class_decision("'none'", labels).matched == std::nullopt);
    CHECK(parse_class_decision("", labels).matched == std::nullopt);
    CHECK(parse_class_decision("If student bullies", labels).matched == std::nullopt);
    CHECK(parse_class_decision("Category 4: If student bullies the bully", labels).raw ==
          "Category 4: If student bullies the bully");
}

TEST_CASE("class decision parsing is total", "[prompt][property]") {
    std::mt19937 rng(9);
    std::vector<std::string> labels = {"If a", "If b", "none"};
    std::uniform_int_distribution<int> byte(0, 255), len(0, 64);
    for (int i = 0; i < 5000; ++i) {
        std::string raw(static_cast<std::size_t>(len(rng)), '\0');
        for (auto& c : raw) c = static_cast<char>(byte(rng));
        ClassDecision d;
        REQUIRE_NOTHROW(d = parse_class_decision(raw, labels));
        CHECK(d.raw == raw);
        if (d.matched) CHECK(std::find(labels.begin(), labels.end(), *d.matched) != labels.end());
    }
}
