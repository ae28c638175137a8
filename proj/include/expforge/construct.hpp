#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "expforge/game_graph.hpp"
#include "expforge/level_model.hpp"
#include "expforge/rule.hpp"

namespace expforge {

/// Node per sprite group (id = the group's representative), per L node, plus
/// Camera and None. Every G value, table entry, N value, rule condition and
/// rule effect becomes one edge. Relationship conditions point at the partner
/// node; an effect that removes the subject points at None.
///
/// `sizes` supplies sprite pixel sizes missing from the level model (the
/// player is excluded from chunks). Throws GraphError naming any sprite that
/// belongs to no group.
GameGraph construct_game_graph(const std::string& graphId, const LevelDesignModel& model, const Ruleset& rules,
                               const std::vector<std::vector<std::string>>& groups, int playerGroup,
                               const std::map<std::string, std::pair<int, int>>& sizes = {});

/// Reassembles rules from Rule* edges grouped by ruleId. Rules without an
/// effect are dropped. Ids are renumbered 1..n keeping the numeric order of
/// the original ids, so override priority is preserved. A condition with the
/// effect's tag is replaced by the effect's pre fact.
Ruleset rules_from_graph(const GameGraph& g);

} // namespace expforge
