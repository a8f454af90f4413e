#include "fixtures.hpp"

#include "chainstage/design_io.hpp"
#include "chainstage/error.hpp"

#include <fstream>
#include <cstdio>
#include <sstream>

#include <sys/wait.h>

#include <unistd.h>

namespace chainstage::testing {

std::filesystem::path testdata_dir() { return CHAINSTAGE_TESTDATA_DIR; }

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

DialogueDesign ballet_design() { return deserialize_design(read_file(testdata_dir() / "designs" / "ballet.json")); }

MockRules ballet_rules() { return load_mock_rules_file((testdata_dir() / "rules" / "ballet_rules.json").string()); }

MockRules all_none_rules() { return load_mock_rules_file((testdata_dir() / "rules" / "all_none_rules.json").string()); }

std::shared_ptr<LlmGateway> mock_gateway(MockRules rules) {
    return make_gateway(GatewayConfig{}, std::move(rules));
}

namespace {

const std::vector<std::string> kWords = {
    "hey",  "Alex", "Leslie", "that's", "mean", "\"quoted\"", "back\\slash", "café", "naïve", "🩰",
    "ok",   "why",  "stop",   "nice",   "{slot}", "tab\there", "100%",      "über", "lol",  "report",
};

int pick(std::mt19937& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

struct Builder {
    std::mt19937& rng;
    TreeShape shape;
    DialogueDesign& design;
    int counter = 0;

    std::vector<std::string> examples() {
        std::vector<std::string> out(static_cast<std::size_t>(pick(rng, 1, shape.max_examples)));
        for (auto& e : out) e = random_text(rng, 1, 8);
        return out;
    }

    std::string behavior(int depth) {
        BehaviorNode b;
        b.node_id = "b" + std::to_string(counter++);
        b.label = "If student " + random_text(rng, 1, 4) + " #" + b.node_id;
        b.examples = examples();

        ReactionNode r;
        r.node_id = "r" + std::to_string(counter++);
        r.instruction_label = random_text(rng, 1, 5);
        r.examples = examples();
        b.reaction_child = r.node_id;

        if (depth < shape.max_depth) {
            int kids = pick(rng, 0, shape.max_branching);
            for (int i = 0; i < kids; ++i) r.behavior_children.push_back(behavior(depth + 1));
        }
        design.nodes.emplace_back(std::move(b));
        design.nodes.emplace_back(std::move(r));
        return std::get<BehaviorNode>(design.nodes[design.nodes.size() - 2]).node_id;
    }
};

}  // namespace

std::string random_text(std::mt19937& rng, int min_words, int max_words) {
    int n = pick(rng, min_words, max_words);
    std::string out;
    for (int i = 0; i < n; ++i) {
        if (i) out += ' ';
        out += kWords[static_cast<std::size_t>(pick(rng, 0, static_cast<int>(kWords.size()) - 1))];
    }
    return out;
}

DialogueDesign random_design(std::mt19937& rng, TreeShape shape) {
    DialogueDesign d;
    d.design_id = "rand-" + std::to_string(rng());
    d.title = random_text(rng, 1, 4);
    d.scenario.scenario_id = "s";
    d.scenario.post_text = random_text(rng, 3, 10);
    d.scenario.bully_comment = random_text(rng, 3, 10);
    if (pick(rng, 0, 1)) d.scenario.post_image_note = random_text(rng, 2, 6);
    d.created_at = d.updated_at = Timestamp{std::chrono::seconds(1700000000 + pick(rng, 0, 1000000))};
    Builder b{rng, shape, d};
    int roots = pick(rng, 1, shape.max_branching);
    for (int i = 0; i < roots; ++i) d.root_behaviors.push_back(b.behavior(1));
    return d;
}

CompletionResult ScriptedProvider::complete(const CompletionRequest& request) {
    ++calls_;
    CompletionResult r;
    r.text = script_(request);
    r.provider = "scripted";
    r.purpose = request.purpose;
    return r;
}

CompletionResult FaultyProvider::complete(const CompletionRequest& request) {
    int n = ++calls_;
    if (n == fail_at_.load()) throw Error(ErrorCode::ProviderUnavailable, "injected failure");
    return inner_->complete(request);
}

std::vector<std::pair<std::string, std::string>> render_golden_set() {
    auto d = ballet_design();
    DesignIndex idx(d);
    std::vector<std::pair<std::string, std::string>> out;
    out.emplace_back("classifier.txt", render_classifier_prompt(d.scenario, idx.roots(), kFrozenComment).rendered);
    out.emplace_back("reaction.txt", render_reaction_prompt(d.scenario, *idx.behavior("b-bully"),
                                                            *idx.reaction("r-reflect"), kFrozenComment)
                                         .rendered);
    std::vector<TranscriptLine> lines = {
        {Speaker::Chatbot, "Do you think attacking Leslie is the best way to handle this situation?"},
        {Speaker::Student, "Maybe not, but what else can I do?"},
        {Speaker::Chatbot,
         "You could send Alex a kind message or report Leslie's comment instead. Which one feels right to you?"},
    };
    for (auto kind : {PersonaKind::Aggressive, PersonaKind::Upstander, PersonaKind::Passive}) {
        PersonaSpec spec{kind, "John"};
        std::string stem = "persona_" + to_lower_ascii(to_string(kind));
        out.emplace_back(stem + "_comment.txt", render_persona_prompt(spec, d.scenario, PersonaPhase::Comment).rendered);
        out.emplace_back(stem + "_reply.txt",
                         render_persona_prompt(spec, d.scenario, PersonaPhase::Reply, kFrozenComment,
                                               render_transcript(lines, "Chatbot", "John"))
                             .rendered);
    }
    return out;
}

CommandResult run_command(const std::string& command) {
    CommandResult r;
    FILE* pipe = ::popen(command.c_str(), "r");
    if (!pipe) throw Error(ErrorCode::IoError, "cannot run " + command);
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.output.append(buf, n);
    int status = ::pclose(pipe);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string cli_path() { return std::string("'") + CHAINSTAGE_CLI_PATH + "'"; }

TempDir::TempDir() {
    static std::atomic<int> seq{0};
    path_ = std::filesystem::temp_directory_path() /
            ("chainstage-test-" + std::to_string(::getpid()) + "-" + std::to_string(seq++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
}

}  // namespace chainstage::testing
