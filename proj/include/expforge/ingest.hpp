#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "expforge/fact.hpp"

namespace expforge {

struct SpritePlacement {
    std::string spriteId;
    int x = 0;
    int y = 0;
    int w = 1;
    int h = 1;
    auto operator<=>(const SpritePlacement&) const = default;
};

struct FrameObservation {
    int t = 0;
    int cameraX = 0;
    int cameraY = 0;
    /// Sorted, unique.
    std::vector<Button> inputs;
    /// World coordinates.
    std::vector<SpritePlacement> sprites;
    bool operator==(const FrameObservation&) const = default;
};

inline constexpr int kDefaultViewWidth = 160;
inline constexpr int kDefaultViewHeight = 128;

struct Trace {
    std::string game;
    /// Sprite id the player controls, if the trace names one.
    std::optional<std::string> player;
    int viewWidth = kDefaultViewWidth;
    int viewHeight = kDefaultViewHeight;
    std::vector<FrameObservation> frames;
    bool operator==(const Trace&) const = default;
};

class LoadError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Frames must have strictly increasing t and lie inside the camera view.
Trace trace_from_json(const nlohmann::json& j);
nlohmann::json trace_to_json(const Trace& trace);
Trace load_trace(const std::filesystem::path& path);

using Pixels = std::vector<std::vector<int>>;

struct SpriteImage {
    std::string spriteId;
    Pixels pixels;
    int width() const { return pixels.empty() ? 0 : static_cast<int>(pixels.front().size()); }
    int height() const { return static_cast<int>(pixels.size()); }
    bool operator==(const SpriteImage&) const = default;
};

struct Spritesheet {
    std::vector<SpriteImage> sprites;
    const SpriteImage* find(std::string_view id) const;
    bool operator==(const Spritesheet&) const = default;
};

Spritesheet spritesheet_from_json(const nlohmann::json& j);
nlohmann::json spritesheet_to_json(const Spritesheet& sheet);
Spritesheet load_spritesheet(const std::filesystem::path& path);

using Patch = std::array<int, 9>;
/// Sorted multiset of every overlapping 3x3 window (row-major).
std::vector<Patch> sprite_bag_features(const Pixels& pixels);

/// |A Δ B| / (|A| + |B|) over the two feature multisets.
double sprite_distance(const Pixels& a, const Pixels& b);
double bag_distance(const std::vector<Patch>& a, const std::vector<Patch>& b);

/// Connected components of the "distance < threshold" graph. Groups are sorted
/// internally and ordered by their first member.
std::vector<std::vector<std::string>> cluster_sprites(const Spritesheet& sheet, double threshold);

inline constexpr double kDefaultClusterThreshold = 0.4;

/// Sprite id to the representative (smallest id) of its group.
std::map<std::string, std::string> representatives(const std::vector<std::vector<std::string>>& groups);

struct LevelChunk {
    int width = 0;
    int height = 0;
    /// Chunk-relative, sorted.
    std::vector<SpritePlacement> placements;
    bool operator==(const LevelChunk&) const = default;
};

LevelChunk frame_to_chunk(const FrameObservation& frame, int viewWidth, int viewHeight);

/// One chunk per frame, in frame order, sprites renamed to their group
/// representative; sprites in `exclude` (after renaming) are dropped.
std::vector<LevelChunk> chunks_from_trace(const Trace& trace, const std::map<std::string, std::string>& rep,
                                          const std::set<std::string>& exclude);

} // namespace expforge
