#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

namespace chainstage {

enum class Purpose { Classify, Generate, Persona };

std::string_view to_string(Purpose purpose);

struct GenerationParams {
    std::string model_id;
    double temperature = 0.0;
    int max_tokens = 256;
    std::vector<std::string> stop_sequences;

    // temperature in [0, 2], max_tokens in [1, 1024]; throws INVALID_ARGUMENT.
    void check() const;
};

struct CompletionRequest {
    std::string prompt;
    GenerationParams params;
    Purpose purpose = Purpose::Generate;
};

struct CompletionResult {
    std::string text;
    std::chrono::milliseconds latency{0};
    std::string provider;
    Purpose purpose = Purpose::Generate;
    std::optional<int> prompt_tokens;
    std::optional<int> completion_tokens;
};

class CompletionProvider {
public:
    virtual ~CompletionProvider() = default;
    virtual CompletionResult complete(const CompletionRequest& request) = 0;
    virtual std::string_view name() const = 0;
};

// ---- Deterministic mock -------------------------------------------------

enum class MatchKind { Contains, Prefix, Suffix, Exact, Regex };

struct MockRule {
    MatchKind kind = MatchKind::Contains;
    // Every pattern must match (conjunction).
    std::vector<std::string> patterns;
    std::string response;

    bool matches(std::string_view prompt) const;
    // Builds `compiled` for MatchKind::Regex; throws PARSE_ERROR on a bad pattern.
    void compile();

    std::vector<std::regex> compiled;
};

// First matching rule wins; default_response applies when none does.
struct MockRules {
    std::vector<MockRule> rules;
    std::string default_response;

    const std::string& respond(std::string_view prompt) const;
};

// JSON: {"rules": [{"match_kind": "contains"|"prefix"|"suffix"|"exact"|"regex",
//                   "pattern": "text" | ["text", ...], "response": "text"}, ...],
//        "default_response": "text"}
// Throws PARSE_ERROR on malformed input.
MockRules load_mock_rules(std::string_view document);
MockRules load_mock_rules_file(const std::string& path);

class MockProvider final : public CompletionProvider {
public:
    explicit MockProvider(MockRules rules);

    CompletionResult complete(const CompletionRequest& request) override;
    std::string_view name() const override { return "mock"; }
    const MockRules& rules() const { return rules_; }

private:
    MockRules rules_;
};

// Keeps every request/result pair that passes through; for audits and tests.
class RecordingProvider final : public CompletionProvider {
public:
    struct Entry {
        CompletionRequest request;
        CompletionResult result;
    };

    explicit RecordingProvider(std::shared_ptr<CompletionProvider> inner) : inner_(std::move(inner)) {}

    CompletionResult complete(const CompletionRequest& request) override;
    std::string_view name() const override { return inner_->name(); }
    std::vector<Entry> entries() const;
    void clear();

private:
    std::shared_ptr<CompletionProvider> inner_;
    mutable std::mutex mu_;
    std::vector<Entry> entries_;
};

// ---- HTTP provider --------------------------------------------------------

struct HttpResponse {
    int status = 0;  // 0 = transport failure (no response)
    std::string body;
    std::map<std::string, std::string> headers;  // lower-case names
    std::string error;                           // transport failure detail
};

class HttpTransport {
public:
    virtual ~HttpTransport() = default;
    virtual HttpResponse post_json(const std::string& path, const std::string& body,
                                   const std::map<std::string, std::string>& headers) = 0;
};

// cpp-httplib client for an "https://host[:port]/prefix" base URL.
std::shared_ptr<HttpTransport> make_httplib_transport(const std::string& api_base);

struct RetryPolicy {
    std::vector<std::chrono::milliseconds> backoff{std::chrono::milliseconds(500), std::chrono::milliseconds(1000),
                                                   std::chrono::milliseconds(2000)};
    std::function<void(std::chrono::milliseconds)> sleep;  // defaults to std::this_thread::sleep_for
};

// OpenAI-style API: CLASSIFY/GENERATE go to /completions, PERSONA to /chat/completions.
class HttpProvider final : public CompletionProvider {
public:
    HttpProvider(std::string api_key, std::shared_ptr<HttpTransport> transport, RetryPolicy retry = {});

    CompletionResult complete(const CompletionRequest& request) override;
    std::string_view name() const override { return "http"; }

private:
    std::string api_key_;
    std::shared_ptr<HttpTransport> transport_;
    RetryPolicy retry_;
};

// ---- Gateway ------------------------------------------------------------

enum class ProviderKind { Mock, Http };

struct GatewayConfig {
    ProviderKind provider = ProviderKind::Mock;
    std::string api_key;
    std::string api_base = "https://api.openai.com/v1";
    std::string completion_model = "text-davinci-003";
    std::string persona_model = "gpt-3.5-turbo";
    std::string mock_rules_path;
    std::size_t max_prompt_chars = 16000;

    // CHAINSTAGE_PROVIDER, CHAINSTAGE_API_KEY, CHAINSTAGE_API_BASE,
    // CHAINSTAGE_MODEL_COMPLETION, CHAINSTAGE_MODEL_PERSONA, CHAINSTAGE_MOCK_RULES.
    static GatewayConfig from_env();
};

std::optional<ProviderKind> parse_provider_kind(std::string_view text);

class LlmGateway {
public:
    LlmGateway(GatewayConfig config, std::shared_ptr<CompletionProvider> provider);

    // Default sampling parameters for a purpose, with the model chosen by purpose.
    GenerationParams params_for(Purpose purpose) const;

    CompletionResult complete(Purpose purpose, std::string prompt) const;
    // An empty model_id is filled from the purpose.
    CompletionResult complete(CompletionRequest request) const;

    const GatewayConfig& config() const { return config_; }
    std::string_view provider_name() const { return provider_->name(); }

private:
    GatewayConfig config_;
    std::shared_ptr<CompletionProvider> provider_;
};

// Builds the provider named by config. In mock mode the transport is never used;
// in http mode a null transport means a real cpp-httplib client.
std::shared_ptr<LlmGateway> make_gateway(const GatewayConfig& config, std::optional<MockRules> rules = std::nullopt,
                                         std::shared_ptr<HttpTransport> transport = nullptr);

}  // namespace chainstage
