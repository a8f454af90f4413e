// chainstage: validate designs, rehearse personas against them, export
// stored transcripts, and run the studio service.
//
// Exit codes: 0 ok, 1 domain failure, 2 usage or I/O error.

#include "chainstage/conversation_engine.hpp"
#include "chainstage/design_io.hpp"
#include "chainstage/error.hpp"
#include "chainstage/http_api.hpp"
#include "chainstage/llm_gateway.hpp"
#include "chainstage/persona_sim.hpp"
#include "chainstage/studio_service.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <future>
#include <iostream>
#include <set>

namespace cs = chainstage;
namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

constexpr int kOk = 0;
constexpr int kDomain = 1;
constexpr int kUsage = 2;

int exit_code_for(const cs::Error& e) {
    switch (e.code()) {
        case cs::ErrorCode::IoError:
        case cs::ErrorCode::InvalidArgument: return kUsage;
        default: return kDomain;
    }
}

void print_error(const cs::Error& e) { std::cerr << "error: " << e.code_name() << ": " << e.what() << "\n"; }

std::string default_data_dir() {
    const char* v = std::getenv("CHAINSTAGE_DATA_DIR");
    return v && *v ? v : "chainstage-data";
}

// ---- validate -------------------------------------------------------------

int cmd_validate(const std::string& path, bool as_json) {
    std::string text;
    try {
        text = cs::read_text_file(path);
    } catch (const cs::Error& e) {
        print_error(e);
        return kUsage;
    }

    cs::DialogueDesign design;
    try {
        design = cs::deserialize_design(text);
    } catch (const cs::Error& e) {
        if (as_json) {
            ojson out;
            out["ok"] = false;
            out["error"] = {{"code", e.code_name()}, {"message", e.what()}};
            if (!e.field().empty()) out["error"]["field"] = e.field();
            if (e.line() > 0) {
                out["error"]["line"] = e.line();
                out["error"]["column"] = e.column();
            }
            std::cout << out.dump(2) << "\n";
        } else {
            print_error(e);
        }
        return kDomain;
    }

    auto report = cs::validate_design(design);
    if (as_json) {
        std::cout << cs::report_to_json(report).dump(2) << "\n";
    } else if (report.ok()) {
        std::cout << "ok: " << design.design_id << " (" << design.nodes.size() << " nodes, "
                  << cs::enumerate_paths(design).size() << " paths)\n";
    } else {
        for (const auto& v : report.violations)
            std::cout << cs::to_string(v.code) << " " << v.path << ": " << v.message << "\n";
        std::cout << report.violations.size() << " violation(s)\n";
    }
    return report.ok() ? kOk : kDomain;
}

// ---- rehearse -------------------------------------------------------------

struct RehearseOptions {
    std::string design_path;
    std::string persona = "all";
    std::size_t turns = 10;
    std::string provider;
    std::string rules_path;
    std::string out_dir = "rehearsal";
    std::string data_dir;
    std::string session_prefix = "rehearsal";
};

// Reaction ids that answered at least one turn, in authoring order.
std::vector<std::string> visited_reactions(const cs::DialogueDesign& design, const cs::SessionState& s) {
    std::set<std::string> origins;
    for (const auto& t : s.transcript)
        if (t.speaker == cs::Speaker::Chatbot) origins.insert(t.origin);
    std::vector<std::string> out;
    for (const auto& n : design.nodes)
        if (std::holds_alternative<cs::ReactionNode>(n) && origins.count(cs::node_id(n))) out.push_back(cs::node_id(n));
    return out;
}

double ratio(std::size_t num, std::size_t den) { return den == 0 ? 0.0 : static_cast<double>(num) / den; }

int cmd_rehearse(const RehearseOptions& opt) {
    std::vector<cs::PersonaKind> personas;
    if (opt.persona == "all") {
        personas = {cs::PersonaKind::Aggressive, cs::PersonaKind::Upstander, cs::PersonaKind::Passive};
    } else if (auto k = cs::parse_persona_kind(opt.persona)) {
        personas = {*k};
    } else {
        std::cerr << "error: --persona must be all, aggressive, upstander or passive\n";
        return kUsage;
    }
    if (opt.turns < 1) {
        std::cerr << "error: --turns must be at least 1\n";
        return kUsage;
    }

    cs::DialogueDesign design;
    std::shared_ptr<cs::LlmGateway> gateway;
    try {
        design = cs::deserialize_design(cs::read_text_file(opt.design_path));
        auto report = cs::validate_design(design);
        if (!report.ok()) {
            for (const auto& v : report.violations)
                std::cerr << cs::to_string(v.code) << " " << v.path << ": " << v.message << "\n";
            return kDomain;
        }
        auto config = cs::GatewayConfig::from_env();
        if (!opt.provider.empty()) {
            auto kind = cs::parse_provider_kind(opt.provider);
            if (!kind) throw cs::Error(cs::ErrorCode::InvalidArgument, "--provider must be mock or http");
            config.provider = *kind;
        }
        if (!opt.rules_path.empty()) config.mock_rules_path = opt.rules_path;
        gateway = cs::make_gateway(config);
    } catch (const cs::Error& e) {
        print_error(e);
        return e.code() == cs::ErrorCode::ParseError || e.code() == cs::ErrorCode::SchemaError ? kDomain
                                                                                               : exit_code_for(e);
    }

    std::unique_ptr<cs::SessionLog> log;
    if (!opt.data_dir.empty()) {
        try {
            auto file = fs::path(opt.data_dir) / "sessions.log";
            std::set<std::string> existing;
            if (fs::exists(file))
                for (const auto& s : cs::SessionLog::replay_file(file)) existing.insert(s.session_id);
            for (auto k : personas) {
                auto id = opt.session_prefix + "-" + std::string(cs::to_string(k));
                if (existing.count(id)) {
                    std::cerr << "error: session " << id << " already exists in " << opt.data_dir
                              << "; pick another --session-prefix\n";
                    return kUsage;
                }
            }
            log = std::make_unique<cs::SessionLog>(file, true);
        } catch (const cs::Error& e) {
            print_error(e);
            return kUsage;
        }
    }

    // One engine per persona: each run gets its own stepping clock so
    // timestamps do not depend on thread interleaving.
    std::vector<std::future<cs::Rehearsal>> runs;
    for (auto kind : personas) {
        runs.push_back(std::async(std::launch::async, [&, kind] {
            cs::EngineOptions options;
            options.clock = cs::stepping_clock(design.updated_at);
            cs::ConversationEngine engine(design, gateway, options);
            return cs::rehearse(engine, *gateway, cs::PersonaSpec{kind}, opt.turns,
                                opt.session_prefix + "-" + std::string(cs::to_string(kind)));
        }));
    }

    ojson report;
    report["design_id"] = design.design_id;
    report["provider"] = gateway->provider_name();
    report["turns_requested"] = opt.turns;
    report["runs"] = ojson::array();

    std::set<std::string> all_visited;
    std::size_t total_turns = 0, total_fallbacks = 0;
    bool failed = false;
    try {
        fs::create_directories(opt.out_dir);
        for (auto& f : runs) {
            auto r = f.get();
            auto persona = std::string(cs::to_string(r.persona));
            auto file = persona + ".jsonl";
            cs::write_file_atomic(fs::path(opt.out_dir) / file, cs::transcript_to_jsonl(r.session.transcript));
            if (log) {
                r.session.design_version = 0;
                log->append({cs::SessionLog::create_event(r.session),
                             cs::SessionLog::commit_event(r.session, r.session.transcript.size())});
            }

            auto visited = visited_reactions(design, r.session);
            all_visited.insert(visited.begin(), visited.end());
            std::size_t turns = r.steps.size();
            total_turns += turns;
            total_fallbacks += r.session.fallback_count;

            ojson run;
            run["persona"] = persona;
            run["session_id"] = r.session.session_id;
            run["transcript"] = file;
            run["student_turns"] = turns;
            run["fallbacks"] = r.session.fallback_count;
            run["fallback_rate"] = ratio(r.session.fallback_count, turns);
            run["visited"] = visited;
            run["final_position"] = cs::position_to_json(r.session.position);
            if (r.error) {
                failed = true;
                run["error"] = {{"code", cs::to_string(*r.error)}, {"message", r.error_message}};
                std::cerr << "error: " << persona << " stopped after " << turns << " turn(s): "
                          << cs::to_string(*r.error) << ": " << r.error_message << "\n";
            } else {
                run["error"] = nullptr;
            }
            report["runs"].push_back(std::move(run));
        }

        std::size_t total_reactions = 0;
        std::vector<std::string> visited_ordered;
        for (const auto& n : design.nodes) {
            if (!std::holds_alternative<cs::ReactionNode>(n)) continue;
            ++total_reactions;
            if (all_visited.count(cs::node_id(n))) visited_ordered.push_back(cs::node_id(n));
        }
        report["coverage"] = {{"visited", visited_ordered},
                              {"total_reactions", total_reactions},
                              {"ratio", ratio(visited_ordered.size(), total_reactions)}};
        report["turns"] = total_turns;
        report["fallback_rate"] = ratio(total_fallbacks, total_turns);
        cs::write_file_atomic(fs::path(opt.out_dir) / "report.json", report.dump(2) + "\n");
    } catch (const cs::Error& e) {
        print_error(e);
        return kUsage;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: IO_ERROR: " << e.what() << "\n";
        return kUsage;
    }

    std::cout << "rehearsed " << runs.size() << " persona(s), " << total_turns << " student turn(s); coverage "
              << report["coverage"]["visited"].size() << "/" << report["coverage"]["total_reactions"].get<std::size_t>()
              << ", fallback rate " << report["fallback_rate"].get<double>() << "\n";
    return failed ? kDomain : kOk;
}

// ---- export ---------------------------------------------------------------

int cmd_export(const std::string& session_id, const std::string& format, const std::string& data_dir) {
    try {
        auto session = cs::load_session(data_dir, session_id);
        if (!session) {
            std::cerr << "error: SESSION_NOT_FOUND: no session " << session_id << " in " << data_dir << "\n";
            return kDomain;
        }
        std::cout << (format == "markdown" ? cs::transcript_to_markdown(session->transcript)
                                           : cs::transcript_to_jsonl(session->transcript));
        return kOk;
    } catch (const cs::Error& e) {
        print_error(e);
        return kUsage;
    }
}

// ---- serve ----------------------------------------------------------------

int cmd_serve(const std::string& data_dir, const std::string& listen, const std::string& provider,
              const std::string& rules_path) {
    try {
        cs::ServiceConfig config;
        config.data_dir = data_dir;
        config.gateway = cs::GatewayConfig::from_env();
        if (!provider.empty()) {
            auto kind = cs::parse_provider_kind(provider);
            if (!kind) throw cs::Error(cs::ErrorCode::InvalidArgument, "--provider must be mock or http");
            config.gateway.provider = *kind;
        }
        if (!rules_path.empty()) config.gateway.mock_rules_path = rules_path;
        cs::StudioService service(std::move(config));
        std::cerr << "chainstage " << cs::kVersion << " listening on " << listen << " (provider "
                  << service.gateway().provider_name() << ", data " << data_dir << ")\n";
        cs::serve(service, listen);
        return kOk;
    } catch (const cs::Error& e) {
        print_error(e);
        return exit_code_for(e);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"chainstage: dialogue-tree chatbot studio"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(cs::kVersion));

    auto* validate = app.add_subcommand("validate", "Check a design file against the tree invariants");
    std::string validate_path;
    bool validate_json = false;
    validate->add_option("design", validate_path, "Design JSON file")->required();
    validate->add_flag("--json", validate_json, "Print the validation report as JSON");

    auto* rehearse = app.add_subcommand("rehearse", "Run simulated students against a design");
    RehearseOptions ro;
    rehearse->add_option("design", ro.design_path, "Design JSON file")->required();
    rehearse->add_option("--persona", ro.persona, "all, aggressive, upstander or passive")
        ->check(CLI::IsMember({"all", "aggressive", "upstander", "passive"}));
    rehearse->add_option("--turns", ro.turns, "Student turns per persona; the comment is turn 1")
        ->check(CLI::PositiveNumber);
    rehearse->add_option("--provider", ro.provider, "mock or http (default: CHAINSTAGE_PROVIDER, else mock)")
        ->check(CLI::IsMember({"mock", "http"}));
    rehearse->add_option("--seed-rules", ro.rules_path, "Mock rule table (JSON)");
    rehearse->add_option("--out", ro.out_dir, "Output directory for transcripts and report.json");
    rehearse->add_option("--data-dir", ro.data_dir, "Also store the sessions here for export");
    rehearse->add_option("--session-prefix", ro.session_prefix, "Session ids are <prefix>-<persona>");

    auto* exporter = app.add_subcommand("export", "Print a stored session transcript");
    std::string export_id, export_format = "jsonl", export_dir = default_data_dir();
    exporter->add_option("session-id", export_id, "Session id")->required();
    exporter->add_option("--format", export_format, "jsonl or markdown")->check(CLI::IsMember({"jsonl", "markdown"}));
    exporter->add_option("--data-dir", export_dir, "Service data directory");

    auto* server = app.add_subcommand("serve", "Run the studio HTTP API");
    std::string serve_dir = default_data_dir(), listen = "127.0.0.1:8080", serve_provider, serve_rules;
    server->add_option("--data-dir", serve_dir, "Service data directory");
    server->add_option("--listen", listen, "host:port (binds localhost by default)");
    server->add_option("--provider", serve_provider, "mock or http")->check(CLI::IsMember({"mock", "http"}));
    server->add_option("--seed-rules", serve_rules, "Mock rule table (JSON)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    if (validate->parsed()) return cmd_validate(validate_path, validate_json);
    if (rehearse->parsed()) return cmd_rehearse(ro);
    if (exporter->parsed()) return cmd_export(export_id, export_format, export_dir);
    if (server->parsed()) return cmd_serve(serve_dir, listen, serve_provider, serve_rules);
    return kUsage;
}
