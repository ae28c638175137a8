#pragma once

#include <optional>
#include <string>
#include <vector>

#include "expforge/fact.hpp"

namespace expforge {

/// A learned engine rule. When every condition holds for an entity whose type
/// is `subject`, the entity's `pre` fact is replaced by `post`.
struct Rule {
    int id = 0;
    /// Sprite id the rule applies to, or kCameraSubject.
    std::string subject;
    FactSet conditions;
    Fact pre;
    Fact post;
    std::optional<InputFact> requiresInput;

    bool operator==(const Rule&) const = default;
};

using Ruleset = std::vector<Rule>;

/// Throws std::invalid_argument when pre/post tags differ or pre is not a condition.
void validate_rule(const Rule& r);

/// True if the rule (or its requiresInput) needs a button held.
bool rule_requires_input(const Rule& r);

nlohmann::json rule_to_json(const Rule& r);
Rule rule_from_json(const nlohmann::json& j);
nlohmann::json ruleset_to_json(const Ruleset& rules);
Ruleset ruleset_from_json(const nlohmann::json& j);

} // namespace expforge
