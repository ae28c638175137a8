#pragma once

#include <vector>

#include "expforge/engine.hpp"

namespace expforge {

/// |predicted Δ actual| over primary facts. Entities that were not in
/// `current` (they scrolled into view) are ignored, as are predicted entities
/// that left the view.
int frame_distance(const World& current, const World& predicted, const World& actual);

enum class ModKind { Modify, Add, Remove };

struct EngineModification {
    ModKind kind = ModKind::Add;
    Rule rule;       // the added rule, or the modified rule after the change
    int ruleId = 0;  // target of modify/remove
};

struct LearnOptions {
    int budget = 10000;
    int passCap = 50;
};

struct LearnReport {
    Ruleset rules;
    int modifications = 0;
    int passes = 0;
    /// Per frame pair, after learning.
    std::vector<int> pairErrors;
    int residualError = 0;
    bool budgetExhausted = false;
};

/// Greedy engine search: for each frame pair whose prediction is wrong, apply
/// the add/modify/remove that most lowers the frame distance until it is exact
/// or nothing helps; repeat passes until one makes no change.
LearnReport learn_ruleset(const std::vector<World>& worlds, const LearnOptions& opts = {});

std::vector<int> replay_errors(const Ruleset& rules, const std::vector<World>& worlds);

/// Candidate modifications for one frame pair, in tie-break order.
std::vector<EngineModification> candidate_modifications(const Ruleset& rules, const World& current,
                                                        const World& actual, int nextId);

Ruleset apply_modification(const Ruleset& rules, const EngineModification& m);

} // namespace expforge
