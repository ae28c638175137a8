#pragma once

#include <compare>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

namespace expforge {

/// Sprite id used for "nothing": an entity whose Animation becomes None is removed.
inline constexpr std::string_view kNoneSprite = "None";
/// Rule subject for camera rules.
inline constexpr std::string_view kCameraSubject = "Camera";

enum class Button { Left, Right, Up, Down, Action };

std::string_view button_name(Button b);
std::optional<Button> parse_button(std::string_view name);

struct AnimationFact {
    std::string spriteId;
    int width = 1;
    int height = 1;
    auto operator<=>(const AnimationFact&) const = default;
};

struct SpatialFact {
    int x = 0;
    int y = 0;
    auto operator<=>(const SpatialFact&) const = default;
};

struct RelationshipXFact {
    std::string otherSpriteId;
    int dx = 0;
    auto operator<=>(const RelationshipXFact&) const = default;
};

struct RelationshipYFact {
    std::string otherSpriteId;
    int dy = 0;
    auto operator<=>(const RelationshipYFact&) const = default;
};

struct VelocityXFact {
    int vx = 0;
    auto operator<=>(const VelocityXFact&) const = default;
};

struct VelocityYFact {
    int vy = 0;
    auto operator<=>(const VelocityYFact&) const = default;
};

struct CameraXFact {
    int x = 0;
    auto operator<=>(const CameraXFact&) const = default;
};

struct CameraYFact {
    int y = 0;
    auto operator<=>(const CameraYFact&) const = default;
};

struct InputFact {
    Button button = Button::Right;
    auto operator<=>(const InputFact&) const = default;
};

/// One conditional fact about an entity in a frame. The entity itself is
/// implicit: facts live in per-entity sets, on graph nodes, or in rules whose
/// subject names the entity type.
using Fact = std::variant<AnimationFact, SpatialFact, RelationshipXFact, RelationshipYFact,
                          VelocityXFact, VelocityYFact, CameraXFact, CameraYFact, InputFact>;

enum class FactTag { Animation, Spatial, RelationshipX, RelationshipY, VelocityX, VelocityY, CameraX, CameraY, Input };

inline FactTag tag_of(const Fact& f) { return static_cast<FactTag>(f.index()); }
std::string_view tag_name(FactTag t);
inline bool same_tag(const Fact& a, const Fact& b) { return a.index() == b.index(); }

/// Relationship facts are recomputed from positions each frame and never
/// compared when scoring predictions.
inline bool is_derived(const Fact& f) {
    const auto t = tag_of(f);
    return t == FactTag::RelationshipX || t == FactTag::RelationshipY;
}

std::string to_string(const Fact& f);

nlohmann::json fact_to_json(const Fact& f);
/// Throws std::runtime_error naming the offending field.
Fact fact_from_json(const nlohmann::json& j);

/// Sorted, de-duplicated fact list.
using FactSet = std::vector<Fact>;
void normalize(FactSet& facts);
bool contains(const FactSet& sorted, const Fact& f);
/// True if every fact of `sub` is in `super` (both sorted).
bool includes(const FactSet& super, const FactSet& sub);

} // namespace expforge
