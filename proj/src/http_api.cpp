#include "chainstage/http_api.hpp"

#include "chainstage/design_io.hpp"
#include "chainstage/prompt_kit.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <charconv>

namespace chainstage {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

int http_status(ErrorCode code) {
    switch (code) {
        case ErrorCode::ParseError:
        case ErrorCode::SchemaError:
        case ErrorCode::InvalidArgument:
        case ErrorCode::EmptyMessage:
        case ErrorCode::EmptyComment:
        case ErrorCode::EmptyCandidates:
        case ErrorCode::EmptyExamples:
        case ErrorCode::EmptyContext:
        case ErrorCode::MissingContext: return 400;
        case ErrorCode::SessionNotFound:
        case ErrorCode::DesignNotFound: return 404;
        case ErrorCode::VersionConflict:
        case ErrorCode::TurnLimit: return 409;
        case ErrorCode::PreconditionRequired: return 428;
        case ErrorCode::InvalidDesign:
        case ErrorCode::InvalidScenario:
        case ErrorCode::PromptTooLarge: return 422;
        case ErrorCode::RateLimited: return 429;
        case ErrorCode::ProviderUnavailable:
        case ErrorCode::AuthError: return 502;
        case ErrorCode::IoError: return 500;
    }
    return 500;
}

std::optional<std::uint64_t> parse_if_match(std::string_view header, std::optional<std::uint64_t> current) {
    auto h = trim(header);
    if (h.empty()) return std::nullopt;
    if (h == "*") {
        // Matches whatever exists; nothing existing is a conflict downstream.
        return current ? current : std::optional<std::uint64_t>(0);
    }
    if (h.starts_with("W/")) h.remove_prefix(2);
    if (h.size() >= 2 && h.front() == '"' && h.back() == '"') h = h.substr(1, h.size() - 2);
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(h.data(), h.data() + h.size(), v);
    if (ec != std::errc() || p != h.data() + h.size())
        throw Error(ErrorCode::InvalidArgument, "If-Match must be a version etag like \"3\"");
    return v;
}

std::string make_etag(std::uint64_t version) { return "\"" + std::to_string(version) + "\""; }

namespace {

constexpr const char* kJson = "application/json";

void send_json(httplib::Response& res, int status, const ojson& body) {
    res.status = status;
    res.set_content(body.dump(-1, ' ', false, ojson::error_handler_t::replace), kJson);
}

ojson error_body(const Error& e) {
    ojson err;
    err["code"] = e.code_name();
    err["message"] = e.what();
    if (!e.field().empty()) err["field"] = e.field();
    if (e.line() > 0) {
        err["line"] = e.line();
        err["column"] = e.column();
    }
    if (e.retry_after()) err["retry_after"] = *e.retry_after();
    ojson body;
    body["error"] = std::move(err);
    return body;
}

// Runs a handler and turns exceptions into error bodies.
template <typename F>
httplib::Server::Handler guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
        try {
            f(req, res);
        } catch (const DesignRejected& e) {
            auto body = error_body(e);
            body["report"] = report_to_json(e.report());
            send_json(res, 422, body);
        } catch (const Error& e) {
            if (e.retry_after()) res.set_header("Retry-After", std::to_string(static_cast<long>(*e.retry_after())));
            send_json(res, http_status(e.code()), error_body(e));
        } catch (const std::exception& e) {
            send_json(res, 500, error_body(Error(ErrorCode::IoError, e.what())));
        }
    };
}

json parse_body(const httplib::Request& req) {
    auto j = json::parse(req.body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::ParseError, "request body must be a JSON object");
    return j;
}

std::string required_string(const json& body, const char* key) {
    if (!body.contains(key) || !body[key].is_string())
        throw Error::schema(key, std::string("'") + key + "' must be a string");
    return body[key].get<std::string>();
}

PersonaSpec persona_param(const httplib::Request& req) {
    auto value = req.get_param_value("persona");
    auto kind = parse_persona_kind(value);
    if (!kind) throw Error(ErrorCode::InvalidArgument, "persona must be aggressive, upstander or passive");
    PersonaSpec spec{*kind};
    if (req.has_param("student_name") && !is_blank(req.get_param_value("student_name")))
        spec.student_name = req.get_param_value("student_name");
    return spec;
}

ojson step_body(const SessionState& s, const StepOutcome& o) {
    ojson body;
    body["session"] = session_to_json(s);
    body["outcome"] = outcome_to_json(o);
    return body;
}

}  // namespace

void install_routes(httplib::Server& server, StudioService& service) {
    auto* svc = &service;

    server.Get("/healthz", guarded([](const httplib::Request&, httplib::Response& res) {
        send_json(res, 200, ojson{{"status", "ok"}});
    }));

    server.Get("/version", guarded([svc](const httplib::Request&, httplib::Response& res) {
        ojson body;
        body["version"] = kVersion;
        body["design_schema"] = kDesignSchema;
        body["template_version"] = kTemplateVersion;
        body["provider"] = svc->gateway().provider_name();
        send_json(res, 200, body);
    }));

    server.Get("/openapi", guarded([](const httplib::Request&, httplib::Response& res) {
        res.set_content(std::string(openapi_document()), kJson);
    }));

    // ---- designs ----

    server.Get("/designs", guarded([svc](const httplib::Request&, httplib::Response& res) {
        ojson list = ojson::array();
        for (const auto& d : svc->designs().list()) {
            ojson item;
            item["design_id"] = d.design->design_id;
            item["title"] = d.design->title;
            item["version"] = d.version;
            list.push_back(std::move(item));
        }
        send_json(res, 200, ojson{{"designs", std::move(list)}});
    }));

    server.Put(R"(/designs/([^/]+))", guarded([svc](const httplib::Request& req, httplib::Response& res) {
        std::string id = req.matches[1];
        auto current = svc->designs().latest(id);
        auto if_match = parse_if_match(req.get_header_value("If-Match"),
                                       current ? std::optional(current->version) : std::nullopt);
        auto result = svc->put_design(id, req.body, if_match);
        res.set_header("ETag", make_etag(result.version));
        ojson body;
        body["design_id"] = id;
        body["version"] = result.version;
        body["changed"] = result.changed;
        send_json(res, result.created ? 201 : 200, body);
    }));

    server.Get(R"(/designs/([^/]+))", guarded([svc](const httplib::Request& req, httplib::Response& res) {
        auto stored = svc->get_design(std::string(req.matches[1]));
        res.set_header("ETag", make_etag(stored.version));
        res.status = 200;
        res.set_content(stored.document, kJson);
    }));

    server.Delete(R"(/designs/([^/]+))", guarded([svc](const httplib::Request& req, httplib::Response& res) {
        std::string id = req.matches[1];
        auto current = svc->designs().latest(id);
        if (!current) throw Error(ErrorCode::DesignNotFound, "no design " + id);
        svc->delete_design(id, parse_if_match(req.get_header_value("If-Match"), current->version));
        res.status = 204;
    }));

    server.Post(R"(/designs/([^/]+)/validate)", guarded([svc](const httplib::Request& req, httplib::Response& res) {
        send_json(res, 200, report_to_json(svc->validate(std::string(req.matches[1]), req.body)));
    }));

    server.Post(R"(/designs/([^/]+)/suggest-comment)",
                guarded([svc](const httplib::Request& req, httplib::Response& res) {
                    auto s = svc->suggest_comment(std::string(req.matches[1]), persona_param(req));
                    send_json(res, 200, suggestion_to_json(s));
                }));

    // ---- sessions ----

    server.Post("/sessions", guarded([svc](const httplib::Request& req, httplib::Response& res) {
        auto body = parse_body(req);
        std::string session_id;
        if (body.contains("session_id")) session_id = required_string(body, "session_id");
        auto [state, outcome] =
            svc->start_session(required_string(body, "design_id"), required_string(body, "comment"), session_id);
        res.set_header("Location", "/sessions/" + state.session_id);
        send_json(res, 201, step_body(state, outcome));
    }));

    server.Get(R"(/sessions/([^/]+))", guarded([svc](const httplib::Request& req, httplib::Response& res) {
        send_json(res, 200, session_to_json(svc->session(std::string(req.matches[1])), true));
    }));

    server.Post(R"(/sessions/([^/]+)/messages)", guarded([svc](const httplib::Request& req, httplib::Response& res) {
        std::string id = req.matches[1];
        svc->session(id);  // 404 before 400 for unknown sessions
        auto body = parse_body(req);
        auto [state, outcome] = svc->post_message(id, required_string(body, "text"));
        send_json(res, 200, step_body(state, outcome));
    }));

    server.Post(R"(/sessions/([^/]+)/reset)", guarded([svc](const httplib::Request& req, httplib::Response& res) {
        send_json(res, 200, session_to_json(svc->reset_session(std::string(req.matches[1]))));
    }));

    server.Get(R"(/sessions/([^/]+)/transcript)", guarded([svc](const httplib::Request& req, httplib::Response& res) {
        auto state = svc->session(std::string(req.matches[1]));
        auto format = req.has_param("format") ? req.get_param_value("format") : std::string("jsonl");
        res.status = 200;
        if (format == "jsonl") {
            res.set_content(transcript_to_jsonl(state.transcript), "application/x-ndjson");
        } else if (format == "markdown") {
            res.set_content(transcript_to_markdown(state.transcript), "text/markdown; charset=utf-8");
        } else {
            throw Error(ErrorCode::InvalidArgument, "format must be jsonl or markdown");
        }
    }));

    server.Get(R"(/sessions/([^/]+)/suggestions)", guarded([svc](const httplib::Request& req, httplib::Response& res) {
        std::string id = req.matches[1];
        svc->session(id);
        send_json(res, 200, suggestion_to_json(svc->suggestion(id, persona_param(req))));
    }));

    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
        if (!res.body.empty()) return;
        if (res.status == 404) send_json(res, 404, error_body(Error(ErrorCode::InvalidArgument, "no such endpoint")));
    });
}

void serve(StudioService& service, const std::string& listen) {
    auto colon = listen.rfind(':');
    if (colon == std::string::npos) throw Error(ErrorCode::InvalidArgument, "--listen must be host:port");
    auto host = listen.substr(0, colon);
    int port = 0;
    auto port_text = std::string_view(listen).substr(colon + 1);
    auto [p, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
    if (ec != std::errc() || p != port_text.data() + port_text.size() || port < 0 || port > 65535)
        throw Error(ErrorCode::InvalidArgument, "--listen port must be 0-65535");

    httplib::Server server;
    install_routes(server, service);
    if (!server.bind_to_port(host, port)) throw Error(ErrorCode::IoError, "cannot listen on " + listen);
    server.listen_after_bind();
}

}  // namespace chainstage
