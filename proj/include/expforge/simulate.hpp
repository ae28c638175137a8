#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "expforge/engine.hpp"
#include "expforge/game_graph.hpp"
#include "expforge/level_model.hpp"
#include "expforge/rng.hpp"

namespace expforge {

inline constexpr std::string_view kPlayerKey = "player";

/// What the playability agent controls: the ruleset and the player sprite.
struct AgentSpec {
    Ruleset rules;
    std::string playerSprite;
    int playerWidth = 16;
    int playerHeight = 16;
};

/// Rules and player of a graph; nullopt when the graph has no player node.
std::optional<AgentSpec> agent_for(const GameGraph& g);

/// Leftmost column holding a support sprite whose top is free; within that
/// column the lowest such support. Empty chunks start at the bottom-left corner.
std::optional<std::pair<int, int>> place_player(const LevelChunk& chunk, int w, int h);

/// The chunk's sprites plus the player at `start`, keyed "e0000".. and "player".
World chunk_world(const LevelChunk& chunk, const AgentSpec& agent, std::pair<int, int> start, int xOffset = 0);

/// Actions per tick: nothing held, or exactly one button.
inline constexpr std::array<std::optional<Button>, 6> kAgentActions = {
    std::nullopt, Button::Left, Button::Right, Button::Up, Button::Down, Button::Action};

struct AStarOptions {
    int tickCap = 600;
    int expansionCap = 20000;
};

struct ChallengeStats {
    double maxDistNorm = 0.0;
    /// Expanded states with a successor lacking the player.
    int deaths = 0;
    /// Expanded states with a successor below the chunk's lowest point.
    int falls = 0;
    bool completed = false;
    /// Ticks on the optimal path, -1 when not completed.
    int ticks = -1;
    int expansions = 0;
    bool operator==(const ChallengeStats&) const = default;
};

/// Search bounds shared by the agent and any oracle over the same states.
struct ChunkBounds {
    int goalX = 0;
    /// Player y beyond this is a fall.
    int lowest = 0;
    int startX = 0;
};
ChunkBounds chunk_bounds(const LevelChunk& chunk, const AgentSpec& agent, std::pair<int, int> start);

/// Position, velocity and sprite of every entity.
std::uint64_t state_key(const World& w);

/// A* over world states with unit tick cost and heuristic ceil(dx / vmax),
/// vmax the largest |vx| in the rules (at least 1). Successors without the
/// player, below the lowest point, or off the top or left edge are dropped.
ChallengeStats astar_chunk(const LevelChunk& chunk, const AgentSpec& agent, const AStarOptions& opts = {});

/// Largest |vx| named by any VelocityX fact in the rules, at least 1.
int max_speed(const Ruleset& rules);

/// Linear interpolation between order statistics of a sorted sample.
double quantile(const std::vector<double>& sorted, double q);

struct MetricSummary {
    std::vector<double> samples;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double range() const { return samples.empty() ? 0.0 : samples.back() - samples.front(); }
};
MetricSummary summarize(std::vector<double> samples);

/// (Q1, median, Q3) of maxDistNorm, deaths and falls.
using StatVector = std::array<double, 9>;

struct GameReference {
    std::string graphId;
    /// maxDistNorm, deaths, falls.
    std::array<MetricSummary, 3> metrics;
    StatVector stats() const;
};
using ReferenceDistribution = std::vector<GameReference>;

inline constexpr int kReferenceSamples = 100;

/// One chunk of a uniformly chosen category, sampled and played.
ChallengeStats sample_chunk_stats(const LevelDesignModel& model, const std::optional<AgentSpec>& agent, Rng& rng,
                                  const AStarOptions& opts = {});

GameReference build_reference(const GameGraph& original, Rng& rng, int samples = kReferenceSamples,
                              const AStarOptions& opts = {});
StatVector stat_vector(const std::vector<ChallengeStats>& stats);

struct LevelSegment {
    std::string category;
    LevelChunk chunk;
    bool operator==(const LevelSegment&) const = default;
};
using Level = std::vector<LevelSegment>;

struct LevelOptions {
    int attemptCap = 50;
    /// Category visits per walk.
    int walkCap = 32;
    /// Resamples of a single chunk before the walk is abandoned.
    int chunkRetries = 20;
    AStarOptions astar;
};

struct GeneratedLevel {
    Level level;
    std::vector<ChallengeStats> stats;
    int attempts = 0;
};

class LevelError : public std::runtime_error {
public:
    LevelError(const std::string& msg, GeneratedLevel best) : std::runtime_error(msg), best_(std::move(best)) {}
    const GeneratedLevel& best() const { return best_; }

private:
    GeneratedLevel best_;
};

/// Category walk from the smallest avgNormPos following transition
/// probabilities, each visit repeated uniformly in [min, max], until a
/// category without transitions or walkCap visits.
std::vector<std::string> walk_categories(const LevelDesignModel& model, Rng& rng, int walkCap = 32);

/// Walks and samples chunks until the agent completes every chunk. Throws
/// LevelError with the attempt that completed the most chunks.
GeneratedLevel generate_level(const GameGraph& g, Rng& rng, const LevelOptions& opts = {});

struct EntityDef {
    int w = 16;
    int h = 16;
    bool isPlayer = false;
    std::string spriteRef;
    Pixels pixels;
    bool operator==(const EntityDef&) const = default;
};

struct GameDefinition {
    std::map<std::string, EntityDef> entities;
    Ruleset rules;
    Level level;
    int chunkWidth = 0;
    int chunkHeight = 0;
    std::string player;
    int startX = 0;
    int startY = 0;
    std::string camera = "follow";
    std::uint64_t rngSeed = 0;
    bool operator==(const GameDefinition&) const = default;
};

class ExportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Self-contained definition. Rules naming sprites that are not exported, and
/// camera rules (the camera always follows the player), are dropped.
GameDefinition export_game(const GameGraph& g, const Level& level, const Spritesheet& sheet, std::uint64_t seed);

nlohmann::json definition_to_json(const GameDefinition& d);
/// Throws ExportError on schema violations, including a missing player.
GameDefinition definition_from_json(const nlohmann::json& j);

enum class Outcome { Playing, Complete, Dead };
std::string_view outcome_name(Outcome o);

/// Native player of a definition: the level's chunks laid side by side.
class Replayer {
public:
    explicit Replayer(const GameDefinition& def);
    Replayer(const Replayer&) = delete;
    Replayer& operator=(const Replayer&) = delete;
    Outcome step(const std::vector<Button>& inputs);
    const World& world() const { return world_; }
    Outcome outcome() const { return outcome_; }
    int tick() const { return tick_; }

private:
    Outcome classify() const;

    Ruleset rules_;
    RuleIndex index_;
    World world_;
    int goalX_ = 0;
    int lowest_ = 0;
    int playerW_ = 0;
    int tick_ = 0;
    Outcome outcome_ = Outcome::Playing;
};

/// Fact-set hash of the initial state and after every scripted tick.
std::vector<std::uint64_t> replay_hashes(const GameDefinition& def, const std::vector<std::vector<Button>>& script);

std::vector<std::vector<Button>> input_script_from_json(const nlohmann::json& j);
nlohmann::json input_script_to_json(const std::vector<std::vector<Button>>& script);

} // namespace expforge
