#pragma once

#include "chainstage/dialogue_graph.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <string_view>

namespace chainstage {

inline constexpr std::string_view kDesignSchema = "chainstage/1";

// Canonical design document: fixed key order, nodes in authoring order,
// two-space indentation, UTF-8, trailing newline.
std::string serialize_design(const DialogueDesign& design);

// Throws Error(PARSE_ERROR) with line/column for malformed JSON and
// Error(SCHEMA_ERROR) naming the field for anything the closed schema rejects.
// Tree invariants are not checked here; see validate_design.
DialogueDesign deserialize_design(std::string_view document);

nlohmann::ordered_json scenario_to_json(const Scenario& scenario);
nlohmann::ordered_json report_to_json(const ValidationReport& report);

}  // namespace chainstage
