#include "chainstage/llm_gateway.hpp"

#include "chainstage/error.hpp"
#include "chainstage/util.hpp"

#include <nlohmann/json.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

namespace chainstage {

using json = nlohmann::json;

std::string_view to_string(Purpose purpose) {
    switch (purpose) {
        case Purpose::Classify: return "CLASSIFY";
        case Purpose::Generate: return "GENERATE";
        case Purpose::Persona: return "PERSONA";
    }
    return "UNKNOWN";
}

void GenerationParams::check() const {
    if (!(temperature >= 0.0 && temperature <= 2.0))
        throw Error(ErrorCode::InvalidArgument, "temperature must be within [0, 2]");
    if (max_tokens < 1 || max_tokens > 1024)
        throw Error(ErrorCode::InvalidArgument, "max_tokens must be within [1, 1024]");
}

// ---- Mock -----------------------------------------------------------------

bool MockRule::matches(std::string_view prompt) const {
    if (patterns.empty()) return false;
    for (std::size_t i = 0; i < patterns.size(); ++i) {
        const auto& p = patterns[i];
        bool ok = false;
        switch (kind) {
            case MatchKind::Contains: ok = prompt.find(p) != std::string_view::npos; break;
            case MatchKind::Prefix: ok = prompt.substr(0, p.size()) == p; break;
            case MatchKind::Suffix: ok = prompt.size() >= p.size() && prompt.substr(prompt.size() - p.size()) == p; break;
            case MatchKind::Exact: ok = prompt == p; break;
            case MatchKind::Regex:
                ok = i < compiled.size() ? std::regex_search(prompt.begin(), prompt.end(), compiled[i])
                                         : std::regex_search(prompt.begin(), prompt.end(), std::regex(p));
                break;
        }
        if (!ok) return false;
    }
    return true;
}

void MockRule::compile() {
    compiled.clear();
    if (kind != MatchKind::Regex) return;
    for (const auto& p : patterns) {
        try {
            compiled.emplace_back(p, std::regex::ECMAScript);
        } catch (const std::regex_error& e) {
            throw Error::parse(0, 0, "invalid regex pattern '" + p + "': " + e.what());
        }
    }
}

const std::string& MockRules::respond(std::string_view prompt) const {
    for (const auto& rule : rules)
        if (rule.matches(prompt)) return rule.response;
    return default_response;
}

namespace {

MatchKind parse_match_kind(const std::string& s) {
    if (s == "contains") return MatchKind::Contains;
    if (s == "prefix") return MatchKind::Prefix;
    if (s == "suffix") return MatchKind::Suffix;
    if (s == "exact") return MatchKind::Exact;
    if (s == "regex") return MatchKind::Regex;
    throw Error::parse(0, 0, "unknown match_kind '" + s + "'");
}

}  // namespace

MockRules load_mock_rules(std::string_view document) {
    json j;
    try {
        j = json::parse(document.begin(), document.end());
    } catch (const json::parse_error& e) {
        throw Error::parse(0, static_cast<int>(e.byte), e.what());
    }
    auto fail = [](const std::string& what) { return Error::parse(0, 0, "mock rules: " + what); };
    if (!j.is_object()) throw fail("expected an object");

    MockRules out;
    if (j.contains("default_response")) {
        if (!j["default_response"].is_string()) throw fail("default_response must be a string");
        out.default_response = j["default_response"].get<std::string>();
    }
    if (!j.contains("rules")) return out;
    if (!j["rules"].is_array()) throw fail("rules must be an array");
    for (const auto& r : j["rules"]) {
        if (!r.is_object() || !r.contains("pattern") || !r.contains("response"))
            throw fail("each rule needs pattern and response");
        MockRule rule;
        rule.kind = parse_match_kind(r.value("match_kind", std::string("contains")));
        const auto& p = r["pattern"];
        if (p.is_string()) {
            rule.patterns.push_back(p.get<std::string>());
        } else if (p.is_array() && !p.empty()) {
            for (const auto& item : p) {
                if (!item.is_string()) throw fail("pattern list must hold strings");
                rule.patterns.push_back(item.get<std::string>());
            }
        } else {
            throw fail("pattern must be a string or a non-empty list of strings");
        }
        if (!r["response"].is_string()) throw fail("response must be a string");
        rule.response = r["response"].get<std::string>();
        rule.compile();
        out.rules.push_back(std::move(rule));
    }
    return out;
}

MockRules load_mock_rules_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot read mock rules file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return load_mock_rules(ss.str());
}

MockProvider::MockProvider(MockRules rules) : rules_(std::move(rules)) {
    for (auto& rule : rules_.rules)
        if (rule.compiled.size() != rule.patterns.size()) rule.compile();
}

CompletionResult MockProvider::complete(const CompletionRequest& request) {
    CompletionResult result;
    result.text = rules_.respond(request.prompt);
    result.provider = "mock";
    result.purpose = request.purpose;
    return result;
}

CompletionResult RecordingProvider::complete(const CompletionRequest& request) {
    auto result = inner_->complete(request);
    std::lock_guard lock(mu_);
    entries_.push_back({request, result});
    return result;
}

std::vector<RecordingProvider::Entry> RecordingProvider::entries() const {
    std::lock_guard lock(mu_);
    return entries_;
}

void RecordingProvider::clear() {
    std::lock_guard lock(mu_);
    entries_.clear();
}

// ---- HTTP -----------------------------------------------------------------

HttpProvider::HttpProvider(std::string api_key, std::shared_ptr<HttpTransport> transport, RetryPolicy retry)
    : api_key_(std::move(api_key)), transport_(std::move(transport)), retry_(std::move(retry)) {
    if (!retry_.sleep) retry_.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

namespace {

bool is_transient(int status) {
    return status == 0 || status == 408 || status == 500 || status == 502 || status == 503 || status == 504;
}

std::optional<double> retry_after_seconds(const HttpResponse& r) {
    auto it = r.headers.find("retry-after");
    if (it == r.headers.end()) return std::nullopt;
    char* end = nullptr;
    double v = std::strtod(it->second.c_str(), &end);
    if (end == it->second.c_str()) return std::nullopt;
    return v;
}

std::string error_message(const HttpResponse& r) {
    if (r.status == 0) return r.error.empty() ? "no response" : r.error;
    auto j = json::parse(r.body, nullptr, false);
    if (!j.is_discarded() && j.contains("error") && j["error"].is_object() && j["error"].contains("message") &&
        j["error"]["message"].is_string())
        return "HTTP " + std::to_string(r.status) + ": " + j["error"]["message"].get<std::string>();
    return "HTTP " + std::to_string(r.status);
}

bool is_context_overflow(const HttpResponse& r) {
    if (r.status == 413) return true;
    if (r.status != 400) return false;
    return r.body.find("context_length_exceeded") != std::string::npos ||
           r.body.find("maximum context length") != std::string::npos;
}

}  // namespace

CompletionResult HttpProvider::complete(const CompletionRequest& request) {
    bool chat = request.purpose == Purpose::Persona;
    json body;
    body["model"] = request.params.model_id;
    if (chat) {
        body["messages"] = json::array({{{"role", "user"}, {"content", request.prompt}}});
    } else {
        body["prompt"] = request.prompt;
    }
    body["temperature"] = request.params.temperature;
    body["max_tokens"] = request.params.max_tokens;
    if (!request.params.stop_sequences.empty()) body["stop"] = request.params.stop_sequences;

    const std::string path = chat ? "/chat/completions" : "/completions";
    const std::map<std::string, std::string> headers{{"Authorization", "Bearer " + api_key_}};
    const std::string payload = body.dump();

    auto started = std::chrono::steady_clock::now();
    HttpResponse response;
    for (std::size_t attempt = 0;; ++attempt) {
        response = transport_->post_json(path, payload, headers);
        if (!is_transient(response.status) || attempt >= retry_.backoff.size()) break;
        retry_.sleep(retry_.backoff[attempt]);
    }

    if (response.status == 401 || response.status == 403)
        throw Error(ErrorCode::AuthError, error_message(response));
    if (response.status == 429) throw Error::rate_limited(retry_after_seconds(response), error_message(response));
    if (is_context_overflow(response)) throw Error(ErrorCode::PromptTooLarge, error_message(response));
    if (response.status < 200 || response.status >= 300)
        throw Error(ErrorCode::ProviderUnavailable, error_message(response));

    auto j = json::parse(response.body, nullptr, false);
    if (j.is_discarded() || !j.contains("choices") || !j["choices"].is_array() || j["choices"].empty())
        throw Error(ErrorCode::ProviderUnavailable, "malformed completion response");
    const auto& choice = j["choices"][0];

    CompletionResult result;
    if (chat && choice.contains("message") && choice["message"].contains("content") &&
        choice["message"]["content"].is_string()) {
        result.text = choice["message"]["content"].get<std::string>();
    } else if (!chat && choice.contains("text") && choice["text"].is_string()) {
        result.text = choice["text"].get<std::string>();
    } else {
        throw Error(ErrorCode::ProviderUnavailable, "completion response has no text");
    }
    if (j.contains("usage") && j["usage"].is_object()) {
        const auto& u = j["usage"];
        if (u.contains("prompt_tokens") && u["prompt_tokens"].is_number_integer())
            result.prompt_tokens = u["prompt_tokens"].get<int>();
        if (u.contains("completion_tokens") && u["completion_tokens"].is_number_integer())
            result.completion_tokens = u["completion_tokens"].get<int>();
    }
    result.provider = "http";
    result.purpose = request.purpose;
    result.latency =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started);
    return result;
}

// ---- Gateway --------------------------------------------------------------

std::optional<ProviderKind> parse_provider_kind(std::string_view text) {
    auto t = to_lower_ascii(trim(text));
    if (t == "mock") return ProviderKind::Mock;
    if (t == "http") return ProviderKind::Http;
    return std::nullopt;
}

GatewayConfig GatewayConfig::from_env() {
    GatewayConfig c;
    auto env = [](const char* name) -> std::optional<std::string> {
        const char* v = std::getenv(name);
        if (!v || !*v) return std::nullopt;
        return std::string(v);
    };
    if (auto v = env("CHAINSTAGE_PROVIDER")) {
        auto kind = parse_provider_kind(*v);
        if (!kind) throw Error(ErrorCode::InvalidArgument, "CHAINSTAGE_PROVIDER must be mock or http");
        c.provider = *kind;
    }
    if (auto v = env("CHAINSTAGE_API_KEY")) c.api_key = *v;
    if (auto v = env("CHAINSTAGE_API_BASE")) c.api_base = *v;
    if (auto v = env("CHAINSTAGE_MODEL_COMPLETION")) c.completion_model = *v;
    if (auto v = env("CHAINSTAGE_MODEL_PERSONA")) c.persona_model = *v;
    if (auto v = env("CHAINSTAGE_MOCK_RULES")) c.mock_rules_path = *v;
    return c;
}

LlmGateway::LlmGateway(GatewayConfig config, std::shared_ptr<CompletionProvider> provider)
    : config_(std::move(config)), provider_(std::move(provider)) {
    if (!provider_) throw Error(ErrorCode::InvalidArgument, "gateway needs a provider");
}

GenerationParams LlmGateway::params_for(Purpose purpose) const {
    switch (purpose) {
        case Purpose::Classify: return {config_.completion_model, 0.0, 16, {"\n"}};
        case Purpose::Generate: return {config_.completion_model, 0.7, 256, {"\nContext:", "\n\nExample"}};
        case Purpose::Persona: return {config_.persona_model, 0.7, 64, {}};
    }
    return {};
}

CompletionResult LlmGateway::complete(Purpose purpose, std::string prompt) const {
    return complete(CompletionRequest{std::move(prompt), params_for(purpose), purpose});
}

CompletionResult LlmGateway::complete(CompletionRequest request) const {
    if (request.prompt.empty()) throw Error(ErrorCode::InvalidArgument, "prompt is empty");
    if (request.prompt.size() > config_.max_prompt_chars)
        throw Error(ErrorCode::PromptTooLarge, "prompt exceeds " + std::to_string(config_.max_prompt_chars) +
                                                   " characters");
    if (request.params.model_id.empty()) request.params.model_id = params_for(request.purpose).model_id;
    request.params.check();

    auto started = std::chrono::steady_clock::now();
    auto result = provider_->complete(request);
    result.purpose = request.purpose;
    if (result.latency.count() == 0)
        result.latency =
            std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started);
    return result;
}

std::shared_ptr<LlmGateway> make_gateway(const GatewayConfig& config, std::optional<MockRules> rules,
                                         std::shared_ptr<HttpTransport> transport) {
    std::shared_ptr<CompletionProvider> provider;
    if (config.provider == ProviderKind::Mock) {
        if (!rules) rules = config.mock_rules_path.empty() ? MockRules{} : load_mock_rules_file(config.mock_rules_path);
        provider = std::make_shared<MockProvider>(std::move(*rules));
    } else {
        if (!transport) transport = make_httplib_transport(config.api_base);
        provider = std::make_shared<HttpProvider>(config.api_key, std::move(transport));
    }
    return std::make_shared<LlmGateway>(config, std::move(provider));
}

}  // namespace chainstage
