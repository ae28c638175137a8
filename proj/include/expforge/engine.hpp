#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "expforge/ingest.hpp"
#include "expforge/rule.hpp"

namespace expforge {

inline constexpr int kRelationRadius = 48;
inline constexpr int kTrackRadius = 64;
inline constexpr std::string_view kCameraKey = "Camera";

struct Entity {
    std::string key;
    std::string sprite;
    int x = 0;
    int y = 0;
    int w = 1;
    int h = 1;
    int vx = 0;
    int vy = 0;
    auto operator<=>(const Entity&) const = default;
};

struct View {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;
    bool contains(const Entity& e) const { return e.x >= x && e.y >= y && e.x + e.w <= x + w && e.y + e.h <= y + h; }
    auto operator<=>(const View&) const = default;
};

/// One frame of game state. Entities are sorted by key; the camera, when
/// tracked, is the entity keyed "Camera".
struct World {
    std::vector<Entity> entities;
    std::vector<Button> inputs;
    std::optional<View> view;

    const Entity* find(std::string_view key) const;
    bool operator==(const World&) const = default;
};

bool is_camera(const Entity& e);

/// Primary facts of one entity (Animation, Spatial, velocities; Camera facts
/// for the camera) plus Relationship facts towards entities within 48px.
FactSet entity_facts(const World& w, const Entity& e, bool withRelationships = true);
FactSet input_facts(const std::vector<Button>& inputs);

/// Facts of a frame, keyed by entity.
struct FrameFacts {
    std::map<std::string, FactSet> entities;
    std::vector<Button> inputs;
    bool operator==(const FrameFacts&) const = default;
};

FrameFacts frame_facts(const World& w);
/// Inverse of frame_facts for the primary facts.
World world_from_facts(const FrameFacts& f);

/// Rules indexed by subject for fast matching.
class RuleIndex {
public:
    explicit RuleIndex(const Ruleset& rules);
    const std::vector<const Rule*>& for_subject(std::string_view subject) const;
    bool has_subject(std::string_view subject) const;
    const Ruleset& rules() const { return *rules_; }

private:
    const Ruleset* rules_;
    std::map<std::string, std::vector<const Rule*>, std::less<>> bySubject_;
    std::vector<const Rule*> empty_;
};

/// Rules that fired for one entity, and the per-tag winners.
struct Firing {
    std::string key;
    std::vector<const Rule*> fired;
    std::map<FactTag, const Rule*> winners;
};

/// One engine tick: every matching rule fires, the highest id wins per fact
/// tag, Animation(None) removes the entity, then positions advance by velocity.
World step_world(const World& w, const RuleIndex& rules, std::vector<Firing>* firings = nullptr);
World step_world(const World& w, const Ruleset& rules);

FrameFacts predict(const Ruleset& rules, const FrameFacts& facts);

/// Matches sprites to the previous frame (nearest same sprite within 64px,
/// ties leftmost-topmost) and derives velocities. Unmatched sprites get fresh
/// keys and zero velocity.
World track_frame(const World* prev, const FrameObservation& cur, int viewW, int viewH,
                  std::map<std::string, int>& keyCounters);
std::vector<World> track_trace(const Trace& trace);

/// Facts of `cur` with velocities from `prev`.
FrameFacts facts_from_frames(const FrameObservation& prev, const FrameObservation& cur, int viewW = kDefaultViewWidth,
                             int viewH = kDefaultViewHeight);

/// Sprite ids renamed through `rep` (unknown ids kept).
Trace canonicalize_trace(const Trace& trace, const std::map<std::string, std::string>& rep);

/// Lines "key|Tag|fields" of primary facts, sorted.
std::vector<std::string> fact_lines(const World& w);
std::uint64_t fact_set_hash(const World& w);

} // namespace expforge
