#pragma once

#include "chainstage/dialogue_graph.hpp"
#include "chainstage/llm_gateway.hpp"
#include "chainstage/prompt_kit.hpp"

#include <atomic>
#include <filesystem>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace chainstage::testing {

std::filesystem::path testdata_dir();
std::string read_file(const std::filesystem::path& path);

// testdata/designs/ballet.json, the ballet recital tree.
DialogueDesign ballet_design();
MockRules ballet_rules();
MockRules all_none_rules();

std::shared_ptr<LlmGateway> mock_gateway(MockRules rules);

struct TreeShape {
    int max_depth = 5;      // behaviors along any path
    int max_branching = 4;  // children per reaction
    int max_examples = 6;
};

// A random design that validate_design accepts. Text includes quotes,
// backslashes, and non-ASCII so round trips exercise escaping.
DialogueDesign random_design(std::mt19937& rng, TreeShape shape = {});
std::string random_text(std::mt19937& rng, int min_words, int max_words);

// Answers with a function of the request; counts calls.
class ScriptedProvider final : public CompletionProvider {
public:
    using Script = std::function<std::string(const CompletionRequest&)>;
    explicit ScriptedProvider(Script script) : script_(std::move(script)) {}
    CompletionResult complete(const CompletionRequest& request) override;
    std::string_view name() const override { return "scripted"; }
    int calls() const { return calls_.load(); }

private:
    Script script_;
    std::atomic<int> calls_{0};
};

// Wraps another provider and throws PROVIDER_UNAVAILABLE on the chosen call (1-based).
class FaultyProvider final : public CompletionProvider {
public:
    explicit FaultyProvider(std::shared_ptr<CompletionProvider> inner) : inner_(std::move(inner)) {}
    CompletionResult complete(const CompletionRequest& request) override;
    std::string_view name() const override { return inner_->name(); }
    void fail_on_call(int n) { fail_at_ = calls_.load() + n; }
    void disarm() { fail_at_ = -1; }

private:
    std::shared_ptr<CompletionProvider> inner_;
    std::atomic<int> calls_{0};
    std::atomic<int> fail_at_{-1};
};

// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

}  // namespace chainstage::testing

namespace chainstage::testing {

// Golden file name -> prompt rendered from the frozen ballet recital inputs.
std::vector<std::pair<std::string, std::string>> render_golden_set();

inline constexpr std::string_view kFrozenComment = "Leslie, shut up. Nobody cares about your opinion.";

}  // namespace chainstage::testing

namespace chainstage::testing {

struct CommandResult {
    int exit_code = -1;
    std::string output;  // stdout only
};

// Runs a shell command line; stderr goes to the test log.
CommandResult run_command(const std::string& command);
// The chainstage CLI binary, shell-quoted.
std::string cli_path();

}  // namespace chainstage::testing
