#pragma once

#include "chainstage/util.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

namespace chainstage {

// The staged social-media post every rehearsal starts from.
struct Scenario {
    std::string scenario_id;
    std::string victim_name = "Alex";
    std::string bully_name = "Leslie";
    std::string post_text;
    std::string bully_comment;
    std::optional<std::string> post_image_note;

    bool operator==(const Scenario&) const = default;
};

// An anticipated student behavior. The label doubles as a classifier category,
// the examples as few-shot inputs.
struct BehaviorNode {
    std::string node_id;
    std::string label;
    std::vector<std::string> examples;
    std::string reaction_child;  // empty = missing

    bool operator==(const BehaviorNode&) const = default;
};

// How the chatbot answers the parent behavior. No behavior children = leaf.
struct ReactionNode {
    std::string node_id;
    std::string instruction_label;
    std::vector<std::string> examples;
    std::vector<std::string> behavior_children;

    bool is_leaf() const { return behavior_children.empty(); }
    bool operator==(const ReactionNode&) const = default;
};

using Node = std::variant<BehaviorNode, ReactionNode>;

const std::string& node_id(const Node& node);
const std::vector<std::string>& node_examples(const Node& node);

// Reply examples used when the opening comment matches no root behavior.
std::vector<std::string> default_opening_nudge();

struct DialogueDesign {
    std::string design_id;
    std::string title;
    Scenario scenario;
    std::vector<std::string> root_behaviors;
    std::vector<Node> nodes;  // authoring order
    std::vector<std::string> opening_nudge = default_opening_nudge();
    Timestamp created_at{};
    Timestamp updated_at{};

    const Node* find(std::string_view id) const;
    const BehaviorNode* find_behavior(std::string_view id) const;
    const ReactionNode* find_reaction(std::string_view id) const;

    bool operator==(const DialogueDesign&) const = default;
};

// Id lookup plus reaction -> parent behavior links for a (valid) design.
// Holds pointers into the design, which must outlive it.
class DesignIndex {
public:
    explicit DesignIndex(const DialogueDesign& design);

    const DialogueDesign& design() const { return *design_; }
    const BehaviorNode* behavior(std::string_view id) const;
    const ReactionNode* reaction(std::string_view id) const;
    const BehaviorNode* parent_of(std::string_view reaction_id) const;
    std::vector<const BehaviorNode*> roots() const;
    std::vector<const BehaviorNode*> children_of(const ReactionNode& reaction) const;
    // Number of behavior nodes from a root down to and including the parent of `reaction_id`.
    std::size_t depth_of(std::string_view reaction_id) const;
    std::size_t reaction_count() const { return reaction_count_; }

private:
    const DialogueDesign* design_;
    std::unordered_map<std::string_view, const Node*> by_id_;
    std::unordered_map<std::string_view, const BehaviorNode*> parent_;
    std::unordered_map<std::string_view, const ReactionNode*> behavior_parent_;
    std::size_t reaction_count_ = 0;
};

enum class ViolationCode {
    Cycle,
    Orphan,
    BadAlternation,
    MissingChild,
    DupLabel,
    EmptyExamples,
    DanglingRef,
    BadScenario,
    SharedNode,
    BadText,
    TooDeep,
    DuplicateId,
};

std::string_view to_string(ViolationCode code);

struct Violation {
    ViolationCode code;
    std::string path;  // '/'-joined node ids from a root, or "nodes/<id>", or a field name
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;

    bool ok() const { return violations.empty(); }
    bool has(ViolationCode code) const;
};

struct ValidationLimits {
    std::size_t max_depth = 12;  // behavior nodes along any root-to-leaf path
    std::size_t max_example_chars = 500;
    std::size_t max_label_chars = 120;
};

// BAD_SCENARIO violations only.
std::vector<Violation> check_scenario(const Scenario& scenario);

ValidationReport validate_design(const DialogueDesign& design, const ValidationLimits& limits = {});

// Root-to-leaf node id chains in authoring order. Requires a valid design.
std::vector<std::vector<std::string>> enumerate_paths(const DialogueDesign& design);

}  // namespace chainstage
