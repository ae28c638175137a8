#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "expforge/fact.hpp"
#include "expforge/hashing.hpp"

namespace expforge {

/// Occupancy matrix, rows top to bottom. Non-zero cells are occupied.
using Shape = std::vector<std::vector<int>>;

int shape_width(const Shape& s);
int shape_height(const Shape& s);
int shape_cells(const Shape& s);

struct GShapeEdge {
    int x = 0;
    int y = 0;
    Shape shape;
    std::string sNodeId;
    std::string lNodeId;
    auto operator<=>(const GShapeEdge&) const = default;
};

/// One entry of the conditional placement table: given an anchor shape of style
/// fromSNodeId, a shape of style sNodeId appears at (dx, dy) with `probability`.
struct DRelationEdge {
    int dx = 0;
    int dy = 0;
    double probability = 0.0;
    std::string sNodeId;
    std::string fromSNodeId;
    std::string lNodeId;
    auto operator<=>(const DRelationEdge&) const = default;
};

struct NCountEdge {
    int count = 0;
    std::string lNodeId;
    auto operator<=>(const NCountEdge&) const = default;
};

struct RuleConditionEdge {
    Fact fact;
    std::string ruleId;
    auto operator<=>(const RuleConditionEdge&) const = default;
};

struct RuleEffectEdge {
    Fact pre;
    Fact post;
    std::string ruleId;
    auto operator<=>(const RuleEffectEdge&) const = default;
};

struct LevelChunkTypeEdge {
    std::string chunkCategoryId;
    auto operator<=>(const LevelChunkTypeEdge&) const = default;
};

struct LevelChunkRepeatsEdge {
    int min = 1;
    int max = 1;
    auto operator<=>(const LevelChunkRepeatsEdge&) const = default;
};

struct LevelChunkPositionEdge {
    double avgNormPos = 0.0;
    auto operator<=>(const LevelChunkPositionEdge&) const = default;
};

struct LevelChunkTransitionEdge {
    double probability = 0.0;
    auto operator<=>(const LevelChunkTransitionEdge&) const = default;
};

using EdgeKind = std::variant<GShapeEdge, DRelationEdge, NCountEdge, RuleConditionEdge, RuleEffectEdge,
                              LevelChunkTypeEdge, LevelChunkRepeatsEdge, LevelChunkPositionEdge,
                              LevelChunkTransitionEdge>;

inline constexpr std::size_t kEdgeKindCount = std::variant_size_v<EdgeKind>;

std::string_view edge_kind_name(std::size_t index);
std::optional<std::size_t> parse_edge_kind(std::string_view name);

/// Variants whose target must be the owning node.
bool is_cyclic_kind(std::size_t index);
bool is_level_chunk_kind(std::size_t index);

struct Edge {
    EdgeKind kind;
    std::string target;
    auto operator<=>(const Edge&) const = default;
};

enum class NodeRole { Sprite, Camera, None, ChunkCategory };

std::string_view role_name(NodeRole r);

inline constexpr std::string_view kCameraNodeId = "Camera";
inline constexpr std::string_view kNoneNodeId = "None";

struct GameGraphNode {
    std::string id;
    NodeRole role = NodeRole::Sprite;
    /// Sorted. Empty for chunk-category, Camera and None nodes.
    std::vector<std::string> spriteIds;
    bool isPlayer = false;
    /// Pixel size of the node's sprites (0 for non-sprite nodes).
    int spriteWidth = 0;
    int spriteHeight = 0;
    /// Palette image of the representative sprite, when known. Not part of
    /// the Chamfer comparison.
    std::vector<std::vector<int>> pixels;
    std::vector<Edge> edges;

    /// Sprite id used for every entity of this node in facts and levels.
    const std::string& representative() const;

    bool operator==(const GameGraphNode&) const = default;
};

enum class Provenance { Learned, Expanded, Amalgam, Blend, Composition, Proto };

std::string_view provenance_name(Provenance p);
std::optional<Provenance> parse_provenance(std::string_view s);

struct GameGraph {
    std::string id;
    Provenance provenance = Provenance::Learned;
    int chunkWidth = 0;
    int chunkHeight = 0;
    std::map<std::string, GameGraphNode> nodes;

    const GameGraphNode* find(std::string_view nodeId) const;
    /// Node whose spriteIds contain `spriteId`, if any.
    const GameGraphNode* node_of_sprite(std::string_view spriteId) const;
    const GameGraphNode* player() const;
    std::size_t edge_count() const;

    bool operator==(const GameGraph&) const = default;
};

class GraphError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Throws GraphError describing the first violated invariant.
void validate(const GameGraph& g);

/// Hash of a node's edge payloads in order; ids and edge targets are excluded,
/// so nodes with equal fingerprints are indistinguishable to the Chamfer metric.
std::uint64_t node_fingerprint(const GameGraphNode& n);
void hash_fact(Fnv1a& h, const Fact& f);

} // namespace expforge
