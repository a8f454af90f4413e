#include "chainstage/design_io.hpp"
#include "chainstage/studio_service.hpp"

#include "corruptions.hpp"
#include "fixtures.hpp"

#include <catch_amalgamated.hpp>
#include <nlohmann/json.hpp>

#include <set>
#include <sstream>

using namespace chainstage;
using namespace chainstage::testing;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

std::string design_path() { return q(testdata_dir() / "designs" / "ballet.json"); }
std::string rules_path(const char* name) { return q(testdata_dir() / "rules" / name); }

std::size_t line_count(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

CommandResult rehearse(const fs::path& out, const std::string& extra) {
    return run_command(cli_path() + " rehearse " + design_path() + " --provider mock --seed-rules " +
                       rules_path("ballet_rules.json") + " --out " + q(out) + " " + extra);
}

}  // namespace

TEST_CASE("validate accepts the ballet recital design", "[cli]") {
    auto r = run_command(cli_path() + " validate " + design_path());
    CHECK(r.exit_code == 0);
    CHECK(r.output.starts_with("ok: ballet-recital (16 nodes, 5 paths)"));
    auto j = run_command(cli_path() + " validate --json " + design_path());
    CHECK(j.exit_code == 0);
    CHECK(json::parse(j.output)["ok"] == true);
}

TEST_CASE("validate reports violations with exit 1", "[cli]") {
    TempDir dir;
    auto d = ballet_design();
    behavior_ref(d, "b-pushback").label = behavior_ref(d, "b-agree").label;
    auto file = dir.path() / "bad.json";
    write_file_atomic(file, serialize_design(d));
    auto r = run_command(cli_path() + " validate " + q(file));
    CHECK(r.exit_code == 1);
    CHECK(r.output.find("DUP_LABEL b-bully/r-reflect/b-pushback") != std::string::npos);
    auto j = run_command(cli_path() + " validate --json " + q(file));
    CHECK(json::parse(j.output)["violations"][0]["code"] == "DUP_LABEL");

    write_file_atomic(file, "{\"schema\": ");
    auto broken = run_command(cli_path() + " validate --json " + q(file));
    CHECK(broken.exit_code == 1);
    CHECK(json::parse(broken.output)["error"]["code"] == "PARSE_ERROR");
}

TEST_CASE("validate on a missing file is an IO error", "[cli]") {
    CHECK(run_command(cli_path() + " validate /nonexistent/design.json 2>/dev/null").exit_code == 2);
}

TEST_CASE("usage errors exit 2", "[cli]") {
    CHECK(run_command(cli_path() + " 2>/dev/null").exit_code == 2);
    CHECK(run_command(cli_path() + " rehearse " + design_path() + " --turns 0 2>/dev/null").exit_code == 2);
    CHECK(run_command(cli_path() + " rehearse " + design_path() + " --persona grumpy 2>/dev/null").exit_code == 2);
    CHECK(run_command(cli_path() + " --help >/dev/null").exit_code == 0);
}

TEST_CASE("rehearse all personas for four turns", "[cli]") {
    TempDir dir;
    auto r = rehearse(dir.path(), "--persona all --turns 4");
    REQUIRE(r.exit_code == 0);
    auto report = json::parse(read_file(dir.path() / "report.json"));
    REQUIRE(report["runs"].size() == 3);
    CHECK(report["turns"] == 12);
    std::set<std::string> visited(report["coverage"]["visited"].begin(), report["coverage"]["visited"].end());
    for (auto root_reaction : {"r-reflect", "r-congrats", "r-perspective"}) CHECK(visited.count(root_reaction));
    CHECK(report["coverage"]["total_reactions"] == 8);

    // Coverage soundness: each visited id is some turn's origin.
    std::set<std::string> origins;
    for (auto persona : {"aggressive", "upstander", "passive"}) {
        auto text = read_file(dir.path() / (std::string(persona) + ".jsonl"));
        CHECK(line_count(text) == 8);
        std::istringstream in(text);
        for (std::string line; std::getline(in, line);) origins.insert(json::parse(line)["origin"].get<std::string>());
    }
    for (const auto& v : visited) CHECK(origins.count(v));

    // Every visited node lies on some root-to-leaf path.
    std::set<std::string> on_paths;
    for (const auto& p : enumerate_paths(ballet_design())) on_paths.insert(p.begin(), p.end());
    for (const auto& v : visited) CHECK(on_paths.count(v));
    double rate = report["fallback_rate"];
    CHECK(rate >= 0.0);
    CHECK(rate <= 1.0);
}

TEST_CASE("one turn is a comment and one reply", "[cli]") {
    TempDir dir;
    REQUIRE(rehearse(dir.path(), "--persona passive --turns 1").exit_code == 0);
    auto text = read_file(dir.path() / "passive.jsonl");
    CHECK(line_count(text) == 2);
    CHECK_FALSE(fs::exists(dir.path() / "aggressive.jsonl"));
}

TEST_CASE("rules that never route give a fallback rate of one", "[cli]") {
    TempDir dir;
    auto r = run_command(cli_path() + " rehearse " + design_path() + " --persona aggressive --turns 5 --provider mock " +
                         "--seed-rules " + rules_path("all_none_rules.json") + " --out " + q(dir.path()));
    REQUIRE(r.exit_code == 0);
    auto report = json::parse(read_file(dir.path() / "report.json"));
    CHECK(report["fallback_rate"] == 1.0);
    CHECK(report["runs"][0]["fallbacks"] == 5);
}

TEST_CASE("rehearse is reproducible under mock", "[cli]") {
    TempDir a, b;
    REQUIRE(rehearse(a.path(), "--turns 6").exit_code == 0);
    REQUIRE(rehearse(b.path(), "--turns 6").exit_code == 0);
    for (auto name : {"report.json", "aggressive.jsonl", "upstander.jsonl", "passive.jsonl"})
        CHECK(read_file(a.path() / name) == read_file(b.path() / name));
}

TEST_CASE("export stored sessions", "[cli]") {
    TempDir out, data;
    REQUIRE(rehearse(out.path(), "--persona upstander --turns 3 --data-dir " + q(data.path())).exit_code == 0);
    auto jsonl = run_command(cli_path() + " export rehearsal-upstander --data-dir " + q(data.path()));
    CHECK(jsonl.exit_code == 0);
    CHECK(line_count(jsonl.output) == 6);
    CHECK(jsonl.output == read_file(out.path() / "upstander.jsonl"));

    auto md = run_command(cli_path() + " export rehearsal-upstander --format markdown --data-dir " + q(data.path()));
    CHECK(md.output.starts_with("**Student:** Alex ur gonna do amazing, ignore Leslie\n\n**Chatbot:** "));

    CHECK(run_command(cli_path() + " export nobody --data-dir " + q(data.path()) + " 2>/dev/null").exit_code == 1);
    // Same prefix again would collide.
    CHECK(rehearse(out.path(), "--persona upstander --turns 1 --data-dir " + q(data.path()) + " 2>/dev/null")
              .exit_code == 2);
}

TEST_CASE("export of an empty session prints nothing", "[cli]") {
    TempDir data;
    {
        ServiceConfig c;
        c.data_dir = data.path();
        c.mock_rules = ballet_rules();
        StudioService svc(c);
        svc.put_design("ballet-recital", read_file(testdata_dir() / "designs" / "ballet.json"), std::nullopt);
        svc.start_session("ballet-recital", kFrozenComment, "empty-one");
        svc.reset_session("empty-one");
    }
    auto r = run_command(cli_path() + " export empty-one --data-dir " + q(data.path()));
    CHECK(r.exit_code == 0);
    CHECK(r.output.empty());
}

TEST_CASE("rehearse refuses invalid designs", "[cli]") {
    TempDir dir;
    auto d = ballet_design();
    d.root_behaviors.push_back("r-report");
    auto file = dir.path() / "bad.json";
    write_file_atomic(file, serialize_design(d));
    auto r = run_command(cli_path() + " rehearse " + q(file) + " --out " + q(dir.path() / "out") + " 2>/dev/null");
    CHECK(r.exit_code == 1);
}
