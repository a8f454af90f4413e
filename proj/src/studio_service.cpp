#include "chainstage/studio_service.hpp"

#include "chainstage/design_io.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <fstream>
#include <sstream>

#include <fcntl.h>
#include <unistd.h>

namespace chainstage {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

bool is_valid_id(std::string_view id) {
    if (id.empty() || id.size() > 64) return false;
    auto alnum = [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9'); };
    if (!alnum(id.front())) return false;
    return std::all_of(id.begin(), id.end(), [&](char c) { return alnum(c) || c == '.' || c == '_' || c == '-'; });
}

namespace {

std::string summarize(const ValidationReport& report) {
    std::string msg = "design failed validation:";
    for (const auto& v : report.violations) msg += " " + std::string(to_string(v.code)) + "@" + v.path;
    return msg;
}

std::optional<std::uint64_t> parse_u64(std::string_view s) {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
    return v;
}

void require_id(std::string_view id, std::string_view what) {
    if (!is_valid_id(id))
        throw Error(ErrorCode::InvalidArgument, std::string(what) + " id must match [A-Za-z0-9][A-Za-z0-9._-]{0,63}");
}

}  // namespace

DesignRejected::DesignRejected(ValidationReport report)
    : Error(ErrorCode::InvalidDesign, summarize(report)), report_(std::move(report)) {}

// ---- DesignStore ----------------------------------------------------------

DesignStore::DesignStore(fs::path root) : root_(std::move(root)) {
    std::error_code ec;
    fs::create_directories(root_, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create " + root_.string() + ": " + ec.message());

    for (const auto& dir : fs::directory_iterator(root_)) {
        if (!dir.is_directory()) continue;
        auto id = dir.path().filename().string();
        if (!is_valid_id(id)) continue;
        Record record;
        std::optional<std::uint64_t> tombstone;
        for (const auto& f : fs::directory_iterator(dir.path())) {
            auto name = f.path().filename().string();
            if (name == "deleted") {
                tombstone = parse_u64(trim(read_text_file(f.path())));
                continue;
            }
            if (f.path().extension() != ".json") continue;
            auto version = parse_u64(f.path().stem().string());
            if (!version) continue;
            auto text = read_text_file(f.path());
            auto design = std::make_shared<const DialogueDesign>(deserialize_design(text));
            record.versions.emplace(*version, StoredDesign{design, serialize_design(*design), *version});
        }
        if (record.versions.empty()) continue;
        record.deleted = tombstone && *tombstone >= record.versions.rbegin()->first;
        records_.emplace(std::move(id), std::move(record));
    }
}

std::optional<StoredDesign> DesignStore::latest(std::string_view id) const {
    std::shared_lock lock(mu_);
    auto it = records_.find(id);
    if (it == records_.end() || it->second.deleted) return std::nullopt;
    return it->second.versions.rbegin()->second;
}

std::optional<StoredDesign> DesignStore::at_version(std::string_view id, std::uint64_t version) const {
    std::shared_lock lock(mu_);
    auto it = records_.find(id);
    if (it == records_.end()) return std::nullopt;
    auto v = it->second.versions.find(version);
    if (v == it->second.versions.end()) return std::nullopt;
    return v->second;
}

std::vector<StoredDesign> DesignStore::list() const {
    std::shared_lock lock(mu_);
    std::vector<StoredDesign> out;
    for (const auto& [id, record] : records_)
        if (!record.deleted) out.push_back(record.versions.rbegin()->second);
    return out;
}

DesignStore::PutResult DesignStore::put(const DialogueDesign& design, std::optional<std::uint64_t> if_match) {
    require_id(design.design_id, "design");
    auto report = validate_design(design);
    if (!report.ok()) throw DesignRejected(std::move(report));
    auto document = serialize_design(design);

    std::unique_lock lock(mu_);
    auto& record = records_[design.design_id];
    std::uint64_t last = record.versions.empty() ? 0 : record.versions.rbegin()->first;
    const bool live = !record.versions.empty() && !record.deleted;
    if (live) {
        if (!if_match) throw Error(ErrorCode::PreconditionRequired, "updating " + design.design_id + " needs If-Match");
        if (*if_match != last)
            throw Error(ErrorCode::VersionConflict, "design " + design.design_id + " is at version " +
                                                        std::to_string(last));
        if (record.versions.rbegin()->second.document == document) return {last, false, false};
    } else if (if_match) {
        if (record.versions.empty()) records_.erase(design.design_id);
        throw Error(ErrorCode::VersionConflict, "design " + design.design_id + " does not exist");
    }

    std::uint64_t version = last + 1;
    try {
        write_file_atomic(root_ / design.design_id / (std::to_string(version) + ".json"), document);
    } catch (...) {
        if (record.versions.empty()) records_.erase(design.design_id);
        throw;
    }
    record.versions.emplace(version,
                            StoredDesign{std::make_shared<const DialogueDesign>(design), std::move(document), version});
    record.deleted = false;
    return {version, !live, true};
}

void DesignStore::remove(std::string_view id, std::optional<std::uint64_t> if_match) {
    std::unique_lock lock(mu_);
    auto it = records_.find(id);
    if (it == records_.end() || it->second.deleted)
        throw Error(ErrorCode::DesignNotFound, "no design " + std::string(id));
    auto current = it->second.versions.rbegin()->first;
    if (!if_match) throw Error(ErrorCode::PreconditionRequired, "deleting " + std::string(id) + " needs If-Match");
    if (*if_match != current)
        throw Error(ErrorCode::VersionConflict, "design " + std::string(id) + " is at version " + std::to_string(current));
    write_file_atomic(root_ / std::string(id) / "deleted", std::to_string(current) + "\n");
    it->second.deleted = true;
}

// ---- SessionLog -----------------------------------------------------------

namespace {

ojson turn_to_json(const Turn& t) {
    ojson j;
    j["speaker"] = to_string(t.speaker);
    j["text"] = t.text;
    j["origin"] = t.origin;
    j["ts"] = format_timestamp(t.ts);
    return j;
}

Turn turn_from_json(const json& j) {
    Turn t;
    auto speaker = j.at("speaker").get<std::string>();
    if (speaker != "STUDENT" && speaker != "CHATBOT") throw std::runtime_error("bad speaker");
    t.speaker = speaker == "STUDENT" ? Speaker::Student : Speaker::Chatbot;
    t.text = j.at("text").get<std::string>();
    t.origin = j.at("origin").get<std::string>();
    auto ts = parse_timestamp(j.at("ts").get<std::string>());
    if (!ts) throw std::runtime_error("bad timestamp");
    t.ts = *ts;
    return t;
}

PositionKind position_kind_from(std::string_view s) {
    for (auto k : {PositionKind::AwaitingComment, PositionKind::AtRoot, PositionKind::AtReaction,
                   PositionKind::LeafContinuation})
        if (to_string(k) == s) return k;
    throw std::runtime_error("bad position kind");
}

Position position_from_json(const json& j) {
    return Position{position_kind_from(j.at("kind").get<std::string>()), j.at("node_id").get<std::string>()};
}

}  // namespace

SessionLog::SessionLog(fs::path file, bool sync_writes) : file_(std::move(file)), sync_(sync_writes) {
    std::error_code ec;
    if (file_.has_parent_path()) fs::create_directories(file_.parent_path(), ec);
    fd_ = ::open(file_.c_str(), O_RDWR | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd_ < 0) throw Error(ErrorCode::IoError, "cannot open " + file_.string());
    // Drop a torn tail so the next append starts on a fresh line.
    auto text = read_text_file(file_);
    if (!text.empty() && text.back() != '\n') {
        auto keep = text.rfind('\n');
        keep = keep == std::string::npos ? 0 : keep + 1;
        if (::ftruncate(fd_, static_cast<off_t>(keep)) != 0)
            throw Error(ErrorCode::IoError, "cannot repair " + file_.string());
    }
}

SessionLog::~SessionLog() {
    if (fd_ >= 0) ::close(fd_);
}

ojson SessionLog::create_event(const SessionState& s) {
    return {{"event", "create"},
            {"session_id", s.session_id},
            {"design_id", s.design_id},
            {"design_version", s.design_version},
            {"created_at", format_timestamp(s.created_at)}};
}

ojson SessionLog::commit_event(const SessionState& s, std::size_t new_turns) {
    ojson turns = ojson::array();
    for (std::size_t i = s.transcript.size() - std::min(new_turns, s.transcript.size()); i < s.transcript.size(); ++i)
        turns.push_back(turn_to_json(s.transcript[i]));
    return {{"event", "commit"},
            {"session_id", s.session_id},
            {"turns", std::move(turns)},
            {"position", position_to_json(s.position)},
            {"fallback_count", s.fallback_count}};
}

ojson SessionLog::reset_event(const SessionState& s) { return {{"event", "reset"}, {"session_id", s.session_id}}; }

std::vector<SessionState> SessionLog::replay() const { return replay_file(file_); }

std::vector<SessionState> SessionLog::replay_file(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot read " + file.string());
    std::vector<SessionState> order;
    std::map<std::string, std::size_t, std::less<>> index;
    std::string line;
    while (std::getline(in, line)) {
        if (in.eof()) break;  // no trailing newline: torn write
        if (is_blank(line)) continue;
        json e;
        try {
            e = json::parse(line);
            auto kind = e.at("event").get<std::string>();
            auto id = e.at("session_id").get<std::string>();
            if (kind == "create") {
                SessionState s;
                s.session_id = id;
                s.design_id = e.at("design_id").get<std::string>();
                s.design_version = e.at("design_version").get<std::uint64_t>();
                auto ts = parse_timestamp(e.at("created_at").get<std::string>());
                if (!ts) throw std::runtime_error("bad timestamp");
                s.created_at = *ts;
                if (index.count(id)) throw std::runtime_error("duplicate create");
                index.emplace(id, order.size());
                order.push_back(std::move(s));
                continue;
            }
            auto it = index.find(id);
            if (it == index.end()) throw std::runtime_error("event for unknown session");
            auto& s = order[it->second];
            if (kind == "commit") {
                for (const auto& t : e.at("turns")) s.transcript.push_back(turn_from_json(t));
                s.position = position_from_json(e.at("position"));
                s.fallback_count = e.at("fallback_count").get<std::uint64_t>();
            } else if (kind == "reset") {
                s.transcript.clear();
                s.position = Position{};
                s.fallback_count = 0;
            } else {
                throw std::runtime_error("unknown event " + kind);
            }
        } catch (const std::exception& ex) {
            throw Error(ErrorCode::IoError, file.string() + ": corrupt session log entry: " + ex.what());
        }
    }
    return order;
}

void SessionLog::append(const std::vector<ojson>& events) {
    std::string buf;
    for (const auto& e : events) buf += e.dump(-1, ' ', false, ojson::error_handler_t::replace) + "\n";
    std::lock_guard lock(mu_);
    const char* p = buf.data();
    std::size_t left = buf.size();
    while (left > 0) {
        auto n = ::write(fd_, p, left);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw Error(ErrorCode::IoError, "cannot append to " + file_.string());
        }
        p += n;
        left -= static_cast<std::size_t>(n);
    }
    if (sync_ && ::fdatasync(fd_) != 0) throw Error(ErrorCode::IoError, "cannot sync " + file_.string());
}

std::optional<SessionState> load_session(const fs::path& data_dir, std::string_view session_id) {
    auto file = data_dir / "sessions.log";
    if (!fs::exists(file)) return std::nullopt;
    for (auto& s : SessionLog::replay_file(file))
        if (s.session_id == session_id) return std::move(s);
    return std::nullopt;
}

// ---- StudioService ----------------------------------------------------------

StudioService::StudioService(ServiceConfig config)
    : config_(std::move(config)),
      gateway_(make_gateway(config_.gateway, config_.mock_rules, config_.transport)),
      designs_(config_.data_dir / "designs"),
      log_(config_.data_dir / "sessions.log", config_.sync_writes) {
    if (!config_.clock) config_.clock = system_now;
    for (auto& s : log_.replay()) {
        auto slot = std::make_shared<Slot>();
        slot->state = std::move(s);
        sessions_.emplace(slot->state.session_id, std::move(slot));
    }
}

DesignStore::PutResult StudioService::put_design(std::string_view id, std::string_view body,
                                                 std::optional<std::uint64_t> if_match) {
    require_id(id, "design");
    auto design = deserialize_design(body);
    if (design.design_id != id)
        throw Error(ErrorCode::InvalidArgument,
                    "document design_id '" + design.design_id + "' does not match '" + std::string(id) + "'");
    return designs_.put(design, if_match);
}

StoredDesign StudioService::get_design(std::string_view id) const {
    auto stored = designs_.latest(id);
    if (!stored) throw Error(ErrorCode::DesignNotFound, "no design " + std::string(id));
    return *stored;
}

void StudioService::delete_design(std::string_view id, std::optional<std::uint64_t> if_match) {
    designs_.remove(id, if_match);
}

ValidationReport StudioService::validate(std::string_view id, std::string_view body) const {
    if (is_blank(body)) return validate_design(*get_design(id).design);
    return validate_design(deserialize_design(body));
}

Suggestion StudioService::suggest_comment(std::string_view design_id, const PersonaSpec& spec) const {
    return chainstage::suggest_comment(*gateway_, spec, get_design(design_id).design->scenario);
}

std::shared_ptr<const ConversationEngine> StudioService::engine_for(std::string_view design_id,
                                                                    std::uint64_t version) const {
    std::lock_guard lock(engines_mu_);
    auto key = std::make_pair(std::string(design_id), version);
    if (auto it = engines_.find(key); it != engines_.end()) return it->second;
    auto stored = designs_.at_version(design_id, version);
    if (!stored)
        throw Error(ErrorCode::DesignNotFound,
                    "no design " + std::string(design_id) + " at version " + std::to_string(version));
    EngineOptions options;
    options.clock = config_.clock;
    options.continuation_window = config_.continuation_window;
    auto engine = std::make_shared<const ConversationEngine>(*stored->design, gateway_, options);
    engines_.emplace(key, engine);
    return engine;
}

std::shared_ptr<StudioService::Slot> StudioService::slot(std::string_view session_id) const {
    std::shared_lock lock(sessions_mu_);
    auto it = sessions_.find(session_id);
    if (it == sessions_.end()) throw Error(ErrorCode::SessionNotFound, "no session " + std::string(session_id));
    return it->second;
}

std::pair<SessionState, StepOutcome> StudioService::start_session(std::string_view design_id,
                                                                  std::string_view comment, std::string session_id) {
    if (!session_id.empty()) require_id(session_id, "session");
    auto stored = get_design(design_id);
    auto engine = engine_for(design_id, stored.version);
    if (session_id.empty()) session_id = new_ulid();
    {
        std::shared_lock lock(sessions_mu_);
        if (sessions_.count(session_id))
            throw Error(ErrorCode::InvalidArgument, "session " + session_id + " already exists");
    }

    auto [state, outcome] = engine->start_session(comment, session_id);
    state.design_version = stored.version;

    auto slot = std::make_shared<Slot>();
    slot->state = state;
    std::unique_lock lock(sessions_mu_);
    if (sessions_.count(session_id)) throw Error(ErrorCode::InvalidArgument, "session " + session_id + " already exists");
    log_.append({SessionLog::create_event(state), SessionLog::commit_event(state, state.transcript.size())});
    sessions_.emplace(session_id, std::move(slot));
    return {std::move(state), std::move(outcome)};
}

std::pair<SessionState, StepOutcome> StudioService::post_message(std::string_view session_id, std::string_view text) {
    auto s = slot(session_id);
    std::lock_guard lock(s->mu);
    std::size_t student_turns = 0;
    for (const auto& t : s->state.transcript) student_turns += t.speaker == Speaker::Student;
    if (student_turns >= config_.max_student_turns)
        throw Error(ErrorCode::TurnLimit, "session " + std::string(session_id) + " reached " +
                                              std::to_string(config_.max_student_turns) + " student turns");

    auto engine = engine_for(s->state.design_id, s->state.design_version);
    SessionState next = s->state;
    auto outcome = engine->step(next, text);
    log_.append({SessionLog::commit_event(next, next.transcript.size() - s->state.transcript.size())});
    s->state = next;
    return {std::move(next), std::move(outcome)};
}

SessionState StudioService::reset_session(std::string_view session_id) {
    auto s = slot(session_id);
    std::lock_guard lock(s->mu);
    auto engine = engine_for(s->state.design_id, s->state.design_version);
    auto next = engine->reset_session(s->state);
    log_.append({SessionLog::reset_event(next)});
    s->state = next;
    return next;
}

SessionState StudioService::session(std::string_view session_id) const {
    auto s = slot(session_id);
    std::lock_guard lock(s->mu);
    return s->state;
}

Suggestion StudioService::suggestion(std::string_view session_id, const PersonaSpec& spec) const {
    auto state = session(session_id);
    auto engine = engine_for(state.design_id, state.design_version);
    const auto& scenario = engine->design().scenario;
    if (state.transcript.empty()) return chainstage::suggest_comment(*gateway_, spec, scenario);
    auto lines = transcript_lines(state.transcript);
    return suggest_reply(*gateway_, spec, scenario, state.transcript.front().text, lines,
                         engine->options().chatbot_name);
}

std::size_t StudioService::session_count() const {
    std::shared_lock lock(sessions_mu_);
    return sessions_.size();
}

// ---- JSON views -----------------------------------------------------------

ojson position_to_json(const Position& p) {
    ojson j;
    j["kind"] = to_string(p.kind);
    j["node_id"] = p.node_id;
    return j;
}

ojson session_to_json(const SessionState& s, bool with_transcript) {
    ojson j;
    j["session_id"] = s.session_id;
    j["design_id"] = s.design_id;
    j["design_version"] = s.design_version;
    j["position"] = position_to_json(s.position);
    j["fallback_count"] = s.fallback_count;
    j["turns"] = s.transcript.size();
    j["created_at"] = format_timestamp(s.created_at);
    if (with_transcript) {
        j["transcript"] = ojson::array();
        for (const auto& t : s.transcript) j["transcript"].push_back(turn_to_json(t));
    }
    return j;
}

ojson outcome_to_json(const StepOutcome& o) {
    ojson j;
    j["reply"] = o.reply;
    j["route"] = o.route ? ojson(*o.route) : ojson(nullptr);
    j["mode"] = to_string(o.mode);
    j["position"] = position_to_json(o.position);
    j["prompts"] = ojson::array();
    for (const auto& p : o.prompt_audit) {
        ojson pj;
        pj["kind"] = to_string(p.kind);
        pj["template_version"] = p.template_version;
        pj["rendered"] = p.rendered;
        j["prompts"].push_back(std::move(pj));
    }
    return j;
}

ojson suggestion_to_json(const Suggestion& s) {
    ojson j;
    j["persona"] = to_string(s.persona);
    j["phase"] = s.phase == PersonaPhase::Comment ? "COMMENT" : "REPLY";
    j["text"] = s.text;
    j["word_count"] = s.word_count;
    return j;
}

}  // namespace chainstage
