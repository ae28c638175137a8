#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "expforge/construct.hpp"
#include "expforge/rule_learner.hpp"

namespace expforge {

/// A pipeline failure tagged with the stage that raised it.
class StageError : public std::runtime_error {
public:
    StageError(std::string stage, const std::string& what)
        : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

struct LearnedGame {
    GameGraph graph;
    LevelDesignModel model;
    LearnReport rules;
    std::vector<std::vector<std::string>> groups;
};

/// ingest -> level model -> rules -> graph. The trace must name its player
/// sprite. Errors are StageErrors (ingest, level-model, rule-model, graph).
LearnedGame learn_game(const Trace& trace, const Spritesheet& sheet, const std::string& graphId, double threshold,
                       Rng& rng, const LearnOptions& opts = {});

} // namespace expforge
