#include "chainstage/dialogue_graph.hpp"

#include <algorithm>
#include <functional>
#include <unordered_set>

namespace chainstage {

const std::string& node_id(const Node& node) {
    return std::visit([](const auto& n) -> const std::string& { return n.node_id; }, node);
}

const std::vector<std::string>& node_examples(const Node& node) {
    return std::visit([](const auto& n) -> const std::vector<std::string>& { return n.examples; }, node);
}

std::vector<std::string> default_opening_nudge() {
    return {"Thanks for speaking up. How do you think everyone involved in this post is feeling right now?"};
}

const Node* DialogueDesign::find(std::string_view id) const {
    auto it = std::find_if(nodes.begin(), nodes.end(), [&](const Node& n) { return node_id(n) == id; });
    return it == nodes.end() ? nullptr : &*it;
}

const BehaviorNode* DialogueDesign::find_behavior(std::string_view id) const {
    const Node* n = find(id);
    return n ? std::get_if<BehaviorNode>(n) : nullptr;
}

const ReactionNode* DialogueDesign::find_reaction(std::string_view id) const {
    const Node* n = find(id);
    return n ? std::get_if<ReactionNode>(n) : nullptr;
}

DesignIndex::DesignIndex(const DialogueDesign& design) : design_(&design) {
    for (const auto& node : design.nodes) {
        by_id_.emplace(node_id(node), &node);
        if (const auto* b = std::get_if<BehaviorNode>(&node); b && !b->reaction_child.empty())
            parent_.emplace(b->reaction_child, b);
        if (const auto* r = std::get_if<ReactionNode>(&node)) {
            ++reaction_count_;
            for (const auto& c : r->behavior_children) behavior_parent_.emplace(c, r);
        }
    }
}

const BehaviorNode* DesignIndex::behavior(std::string_view id) const {
    auto it = by_id_.find(id);
    return it == by_id_.end() ? nullptr : std::get_if<BehaviorNode>(it->second);
}

const ReactionNode* DesignIndex::reaction(std::string_view id) const {
    auto it = by_id_.find(id);
    return it == by_id_.end() ? nullptr : std::get_if<ReactionNode>(it->second);
}

const BehaviorNode* DesignIndex::parent_of(std::string_view reaction_id) const {
    auto it = parent_.find(reaction_id);
    return it == parent_.end() ? nullptr : it->second;
}

std::vector<const BehaviorNode*> DesignIndex::roots() const {
    std::vector<const BehaviorNode*> out;
    for (const auto& id : design_->root_behaviors)
        if (const auto* b = behavior(id)) out.push_back(b);
    return out;
}

std::vector<const BehaviorNode*> DesignIndex::children_of(const ReactionNode& reaction) const {
    std::vector<const BehaviorNode*> out;
    for (const auto& id : reaction.behavior_children)
        if (const auto* b = behavior(id)) out.push_back(b);
    return out;
}

std::size_t DesignIndex::depth_of(std::string_view reaction_id) const {
    std::size_t depth = 0;
    std::string_view current = reaction_id;
    // Bounded by node count so malformed input cannot loop forever.
    for (std::size_t guard = 0; guard <= design_->nodes.size(); ++guard) {
        const BehaviorNode* b = parent_of(current);
        if (!b) break;
        ++depth;
        auto it = behavior_parent_.find(b->node_id);
        if (it == behavior_parent_.end()) break;
        current = it->second->node_id;
    }
    return depth;
}

std::string_view to_string(ViolationCode code) {
    switch (code) {
        case ViolationCode::Cycle: return "CYCLE";
        case ViolationCode::Orphan: return "ORPHAN";
        case ViolationCode::BadAlternation: return "BAD_ALTERNATION";
        case ViolationCode::MissingChild: return "MISSING_CHILD";
        case ViolationCode::DupLabel: return "DUP_LABEL";
        case ViolationCode::EmptyExamples: return "EMPTY_EXAMPLES";
        case ViolationCode::DanglingRef: return "DANGLING_REF";
        case ViolationCode::BadScenario: return "BAD_SCENARIO";
        case ViolationCode::SharedNode: return "SHARED_NODE";
        case ViolationCode::BadText: return "BAD_TEXT";
        case ViolationCode::TooDeep: return "TOO_DEEP";
        case ViolationCode::DuplicateId: return "DUPLICATE_ID";
    }
    return "UNKNOWN";
}

bool ValidationReport::has(ViolationCode code) const {
    return std::any_of(violations.begin(), violations.end(),
                       [&](const Violation& v) { return v.code == code; });
}

namespace {

std::string label_key(std::string_view label) { return to_lower_ascii(trim(label)); }

}  // namespace

std::vector<Violation> check_scenario(const Scenario& s) {
    std::vector<Violation> out;
    auto add = [&](std::string path, std::string message) {
        out.push_back({ViolationCode::BadScenario, std::move(path), std::move(message)});
    };
    if (is_blank(s.victim_name)) add("scenario.victim_name", "empty victim name");
    if (is_blank(s.bully_name)) add("scenario.bully_name", "empty bully name");
    if (!is_blank(s.victim_name) && label_key(s.victim_name) == label_key(s.bully_name))
        add("scenario.bully_name", "victim and bully share a name");
    if (is_blank(s.post_text)) add("scenario.post_text", "empty post text");
    if (is_blank(s.bully_comment)) add("scenario.bully_comment", "empty bully comment");
    return out;
}

namespace {

class Validator {
public:
    Validator(const DialogueDesign& design, const ValidationLimits& limits)
        : design_(design), limits_(limits) {}

    ValidationReport run() {
        check_scenario();
        build_index();

        if (design_.root_behaviors.empty())
            add(ViolationCode::MissingChild, "root_behaviors", "design has no root behavior");
        check_sibling_labels(design_.root_behaviors, "");
        for (const auto& id : design_.root_behaviors) visit(id, Kind::Behavior, "", 0);

        for (const auto& node : design_.nodes) check_local(node);
        check_orphans();
        if (design_.opening_nudge.empty())
            add(ViolationCode::EmptyExamples, "opening_nudge", "no opening nudge examples");
        for (const auto& e : design_.opening_nudge) check_example(e, "opening_nudge");
        return std::move(report_);
    }

private:
    enum class Kind { Behavior, Reaction };

    void add(ViolationCode code, std::string path, std::string message) {
        report_.violations.push_back({code, std::move(path), std::move(message)});
    }

    static std::string join(const std::string& chain, std::string_view id) {
        return chain.empty() ? std::string(id) : chain + "/" + std::string(id);
    }

    std::string path_of(const std::string& id) const {
        auto it = chain_.find(id);
        return it != chain_.end() ? it->second : "nodes/" + id;
    }

    void check_scenario() {
        for (auto& v : chainstage::check_scenario(design_.scenario)) report_.violations.push_back(std::move(v));
    }

    void build_index() {
        for (const auto& node : design_.nodes) {
            const auto& id = node_id(node);
            if (id.empty()) {
                add(ViolationCode::BadText, "nodes", "node with empty id");
                continue;
            }
            if (!by_id_.emplace(id, &node).second)
                add(ViolationCode::DuplicateId, "nodes/" + id, "node id used twice");
        }
    }

    void check_sibling_labels(const std::vector<std::string>& ids, const std::string& chain) {
        std::unordered_set<std::string> seen;
        for (const auto& id : ids) {
            auto it = by_id_.find(id);
            if (it == by_id_.end()) continue;
            const auto* b = std::get_if<BehaviorNode>(it->second);
            if (!b || is_blank(b->label)) continue;
            if (!seen.insert(label_key(b->label)).second)
                add(ViolationCode::DupLabel, join(chain, id), "sibling label repeated: " + b->label);
        }
    }

    void visit(const std::string& id, Kind expected, const std::string& parent_chain, std::size_t depth) {
        auto it = by_id_.find(id);
        std::string here = join(parent_chain, id);
        if (it == by_id_.end()) {
            add(ViolationCode::DanglingRef, here, "reference to unknown node " + id);
            return;
        }
        const Node& node = *it->second;
        bool is_behavior = std::holds_alternative<BehaviorNode>(node);
        if (is_behavior != (expected == Kind::Behavior)) {
            add(ViolationCode::BadAlternation, here,
                expected == Kind::Behavior ? "expected a behavior node" : "expected a reaction node");
            return;
        }
        if (on_stack_.count(id)) {
            add(ViolationCode::Cycle, here, "node is its own ancestor");
            return;
        }
        if (visited_.count(id)) {
            add(ViolationCode::SharedNode, here, "node has more than one parent");
            return;
        }
        visited_.insert(id);
        chain_.emplace(id, here);
        on_stack_.insert(id);

        if (const auto* b = std::get_if<BehaviorNode>(&node)) {
            if (depth + 1 > limits_.max_depth) {
                add(ViolationCode::TooDeep, here, "tree deeper than " + std::to_string(limits_.max_depth));
            } else if (b->reaction_child.empty()) {
                add(ViolationCode::MissingChild, here, "behavior has no reaction");
            } else {
                visit(b->reaction_child, Kind::Reaction, here, depth + 1);
            }
        } else {
            const auto& r = std::get<ReactionNode>(node);
            check_sibling_labels(r.behavior_children, here);
            for (const auto& child : r.behavior_children) visit(child, Kind::Behavior, here, depth);
        }
        on_stack_.erase(id);
    }

    void check_example(const std::string& example, const std::string& path) {
        if (is_blank(example))
            add(ViolationCode::EmptyExamples, path, "blank example");
        else if (utf8_length(example) > limits_.max_example_chars)
            add(ViolationCode::BadText, path,
                "example longer than " + std::to_string(limits_.max_example_chars) + " characters");
    }

    void check_local(const Node& node) {
        const auto& id = node_id(node);
        std::string path = path_of(id);
        const auto& examples = node_examples(node);
        if (examples.empty()) add(ViolationCode::EmptyExamples, path, "no examples");
        for (const auto& e : examples) check_example(e, path);

        const std::string& label = std::visit(
            [](const auto& n) -> const std::string& {
                if constexpr (std::is_same_v<std::decay_t<decltype(n)>, BehaviorNode>)
                    return n.label;
                else
                    return n.instruction_label;
            },
            node);
        if (is_blank(label))
            add(ViolationCode::BadText, path, "empty label");
        else if (utf8_length(label) > limits_.max_label_chars)
            add(ViolationCode::BadText, path,
                "label longer than " + std::to_string(limits_.max_label_chars) + " characters");
    }

    // Unreachable nodes are reported once per detached subtree: only those no other
    // unreachable node points at, plus members of detached cycles.
    void check_orphans() {
        std::vector<const Node*> unreachable;
        std::unordered_set<std::string> referenced;
        for (const auto& node : design_.nodes) {
            if (visited_.count(node_id(node))) continue;
            unreachable.push_back(&node);
            if (const auto* b = std::get_if<BehaviorNode>(&node)) {
                referenced.insert(b->reaction_child);
            } else {
                for (const auto& c : std::get<ReactionNode>(node).behavior_children) referenced.insert(c);
            }
        }
        std::unordered_set<std::string> covered;
        std::function<void(const std::string&)> cover = [&](const std::string& id) {
            if (visited_.count(id) || !covered.insert(id).second) return;
            auto it = by_id_.find(id);
            if (it == by_id_.end()) return;
            if (const auto* b = std::get_if<BehaviorNode>(it->second)) {
                if (!b->reaction_child.empty()) cover(b->reaction_child);
            } else {
                for (const auto& c : std::get<ReactionNode>(*it->second).behavior_children) cover(c);
            }
        };
        for (const Node* n : unreachable) {
            const auto& id = node_id(*n);
            if (!referenced.count(id)) {
                add(ViolationCode::Orphan, "nodes/" + id, "node not reachable from any root");
                cover(id);
            }
        }
        for (const Node* n : unreachable) {
            const auto& id = node_id(*n);
            if (!covered.count(id)) {
                add(ViolationCode::Orphan, "nodes/" + id, "node only reachable through a detached cycle");
                cover(id);
            }
        }
    }

    const DialogueDesign& design_;
    const ValidationLimits& limits_;
    ValidationReport report_;
    std::unordered_map<std::string, const Node*> by_id_;
    std::unordered_map<std::string, std::string> chain_;
    std::unordered_set<std::string> visited_;
    std::unordered_set<std::string> on_stack_;
};

void collect_paths(const DesignIndex& index, const BehaviorNode& behavior, std::vector<std::string>& prefix,
                   std::vector<std::vector<std::string>>& out) {
    prefix.push_back(behavior.node_id);
    const ReactionNode* reaction = index.reaction(behavior.reaction_child);
    if (reaction) {
        prefix.push_back(reaction->node_id);
        if (reaction->is_leaf()) {
            out.push_back(prefix);
        } else {
            for (const auto* child : index.children_of(*reaction)) collect_paths(index, *child, prefix, out);
        }
        prefix.pop_back();
    }
    prefix.pop_back();
}

}  // namespace

ValidationReport validate_design(const DialogueDesign& design, const ValidationLimits& limits) {
    return Validator(design, limits).run();
}

std::vector<std::vector<std::string>> enumerate_paths(const DialogueDesign& design) {
    DesignIndex index(design);
    std::vector<std::vector<std::string>> out;
    std::vector<std::string> prefix;
    for (const auto* root : index.roots()) collect_paths(index, *root, prefix, out);
    return out;
}

}  // namespace chainstage
