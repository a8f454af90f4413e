#include "chainstage/design_io.hpp"

#include "chainstage/error.hpp"

#include <algorithm>
#include <initializer_list>
#include <unordered_set>

namespace chainstage {

using ojson = nlohmann::ordered_json;

namespace {

ojson strings(const std::vector<std::string>& v) {
    ojson arr = ojson::array();
    for (const auto& s : v) arr.push_back(s);
    return arr;
}

ojson node_to_json(const Node& node) {
    ojson j;
    if (const auto* b = std::get_if<BehaviorNode>(&node)) {
        j["kind"] = "behavior";
        j["node_id"] = b->node_id;
        j["label"] = b->label;
        j["examples"] = strings(b->examples);
        j["reaction_child"] = b->reaction_child;
    } else {
        const auto& r = std::get<ReactionNode>(node);
        j["kind"] = "reaction";
        j["node_id"] = r.node_id;
        j["instruction_label"] = r.instruction_label;
        j["examples"] = strings(r.examples);
        j["behavior_children"] = strings(r.behavior_children);
    }
    return j;
}

// Closed-schema reader over one JSON object.
class ObjectReader {
public:
    ObjectReader(const ojson& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) throw Error::schema(where_.empty() ? "document" : where_, "expected an object");
    }

    void allow_only(std::initializer_list<std::string_view> keys) const {
        for (const auto& item : j_.items()) {
            if (std::find(keys.begin(), keys.end(), item.key()) == keys.end())
                throw Error::schema(field(item.key()), "unknown field");
        }
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    std::string string(const std::string& key, bool required_non_empty = false) const {
        const ojson& v = at(key);
        if (!v.is_string()) throw Error::schema(field(key), "expected a string");
        auto s = v.get<std::string>();
        if (required_non_empty && is_blank(s)) throw Error::schema(field(key), "must not be empty");
        return s;
    }

    std::vector<std::string> string_list(const std::string& key) const {
        const ojson& v = at(key);
        if (!v.is_array()) throw Error::schema(field(key), "expected an array of strings");
        std::vector<std::string> out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_string())
                throw Error::schema(field(key) + "[" + std::to_string(i) + "]", "expected a string");
            out.push_back(v[i].get<std::string>());
        }
        return out;
    }

    Timestamp timestamp(const std::string& key) const {
        auto s = string(key);
        auto t = parse_timestamp(s);
        if (!t) throw Error::schema(field(key), "expected UTC timestamp YYYY-MM-DDTHH:MM:SSZ");
        return *t;
    }

    const ojson& at(const std::string& key) const {
        if (!j_.contains(key)) throw Error::schema(field(key), "required field missing");
        return j_.at(key);
    }

    std::string field(const std::string& key) const { return where_.empty() ? key : where_ + "." + key; }

private:
    const ojson& j_;
    std::string where_;
};

Scenario scenario_from_json(const ojson& j) {
    ObjectReader r(j, "scenario");
    r.allow_only({"scenario_id", "victim_name", "bully_name", "post_text", "bully_comment", "post_image_note"});
    Scenario s;
    s.scenario_id = r.string("scenario_id");
    s.victim_name = r.string("victim_name");
    s.bully_name = r.string("bully_name");
    s.post_text = r.string("post_text");
    s.bully_comment = r.string("bully_comment");
    if (r.has("post_image_note")) s.post_image_note = r.string("post_image_note");
    return s;
}

Node node_from_json(const ojson& j, std::size_t index) {
    std::string where = "nodes[" + std::to_string(index) + "]";
    ObjectReader r(j, where);
    auto kind = r.string("kind");
    if (kind == "behavior") {
        r.allow_only({"kind", "node_id", "label", "examples", "reaction_child"});
        return BehaviorNode{r.string("node_id", true), r.string("label"), r.string_list("examples"),
                            r.string("reaction_child")};
    }
    if (kind == "reaction") {
        r.allow_only({"kind", "node_id", "instruction_label", "examples", "behavior_children"});
        return ReactionNode{r.string("node_id", true), r.string("instruction_label"), r.string_list("examples"),
                            r.string_list("behavior_children")};
    }
    throw Error::schema(where + ".kind", "expected \"behavior\" or \"reaction\"");
}

std::pair<int, int> line_and_column(std::string_view text, std::size_t byte) {
    // nlohmann reports the 1-based byte index of the offending character.
    std::size_t end = std::min(text.size(), byte == 0 ? 0 : byte - 1);
    int line = 1, column = 1;
    for (std::size_t i = 0; i < end; ++i) {
        if (text[i] == '\n') {
            ++line;
            column = 1;
        } else {
            ++column;
        }
    }
    return {line, column};
}

}  // namespace

ojson scenario_to_json(const Scenario& s) {
    ojson j;
    j["scenario_id"] = s.scenario_id;
    j["victim_name"] = s.victim_name;
    j["bully_name"] = s.bully_name;
    j["post_text"] = s.post_text;
    j["bully_comment"] = s.bully_comment;
    if (s.post_image_note) j["post_image_note"] = *s.post_image_note;
    return j;
}

ojson report_to_json(const ValidationReport& report) {
    ojson arr = ojson::array();
    for (const auto& v : report.violations)
        arr.push_back({{"code", to_string(v.code)}, {"path", v.path}, {"message", v.message}});
    return {{"ok", report.ok()}, {"violations", arr}};
}

std::string serialize_design(const DialogueDesign& design) {
    ojson j;
    j["schema"] = kDesignSchema;
    j["design_id"] = design.design_id;
    j["title"] = design.title;
    j["scenario"] = scenario_to_json(design.scenario);
    j["root_behaviors"] = strings(design.root_behaviors);
    ojson nodes = ojson::array();
    for (const auto& n : design.nodes) nodes.push_back(node_to_json(n));
    j["nodes"] = std::move(nodes);
    j["opening_nudge"] = strings(design.opening_nudge);
    j["created_at"] = format_timestamp(design.created_at);
    j["updated_at"] = format_timestamp(design.updated_at);
    return j.dump(2, ' ', false, ojson::error_handler_t::strict) + "\n";
}

DialogueDesign deserialize_design(std::string_view document) {
    ojson j;
    try {
        j = ojson::parse(document.begin(), document.end());
    } catch (const ojson::parse_error& e) {
        auto [line, column] = line_and_column(document, e.byte);
        throw Error::parse(line, column, e.what());
    }

    ObjectReader r(j, "");
    r.allow_only({"schema", "design_id", "title", "scenario", "root_behaviors", "nodes", "opening_nudge",
                  "created_at", "updated_at"});
    if (r.string("schema") != kDesignSchema)
        throw Error::schema("schema", "unsupported schema version, expected " + std::string(kDesignSchema));

    DialogueDesign d;
    d.design_id = r.string("design_id", true);
    d.title = r.string("title", true);
    d.scenario = scenario_from_json(r.at("scenario"));
    d.root_behaviors = r.string_list("root_behaviors");

    const ojson& nodes = r.at("nodes");
    if (!nodes.is_array()) throw Error::schema("nodes", "expected an array");
    std::unordered_set<std::string> ids;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        Node n = node_from_json(nodes[i], i);
        if (!ids.insert(node_id(n)).second)
            throw Error::schema("nodes[" + std::to_string(i) + "].node_id", "duplicate node id " + node_id(n));
        d.nodes.push_back(std::move(n));
    }
    if (r.has("opening_nudge")) d.opening_nudge = r.string_list("opening_nudge");
    d.created_at = r.timestamp("created_at");
    d.updated_at = r.timestamp("updated_at");
    return d;
}

}  // namespace chainstage
