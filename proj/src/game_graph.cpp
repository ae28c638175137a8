#include "expforge/game_graph.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

namespace expforge {

namespace {

constexpr std::array<std::string_view, kEdgeKindCount> kEdgeNames = {
    "GShape",        "DRelation",         "NCount",
    "RuleCondition", "RuleEffect",        "LevelChunkType",
    "LevelChunkRepeats", "LevelChunkPosition", "LevelChunkTransition"};

constexpr std::array<std::string_view, 6> kProvenanceNames = {"learned", "expanded", "amalgam",
                                                              "blend",   "composition", "proto"};

constexpr std::array<std::string_view, 4> kRoleNames = {"sprite", "camera", "none", "chunk"};

const std::string kEmpty;

[[noreturn]] void fail(const GameGraphNode& n, std::size_t edge, const std::string& what) {
    std::ostringstream os;
    os << "node '" << n.id << "' edge " << edge << ": " << what;
    throw GraphError(os.str());
}

} // namespace

int shape_width(const Shape& s) { return s.empty() ? 0 : static_cast<int>(s.front().size()); }
int shape_height(const Shape& s) { return static_cast<int>(s.size()); }

int shape_cells(const Shape& s) {
    int n = 0;
    for (const auto& row : s)
        for (int v : row) n += v != 0;
    return n;
}

std::string_view edge_kind_name(std::size_t index) { return kEdgeNames.at(index); }

std::optional<std::size_t> parse_edge_kind(std::string_view name) {
    for (std::size_t i = 0; i < kEdgeNames.size(); ++i)
        if (kEdgeNames[i] == name) return i;
    return std::nullopt;
}

bool is_cyclic_kind(std::size_t index) {
    return index == 0 || index == 2 || index == 5 || index == 6 || index == 7;
}

bool is_level_chunk_kind(std::size_t index) { return index >= 5; }

std::string_view role_name(NodeRole r) { return kRoleNames[static_cast<std::size_t>(r)]; }

std::string_view provenance_name(Provenance p) { return kProvenanceNames[static_cast<std::size_t>(p)]; }

std::optional<Provenance> parse_provenance(std::string_view s) {
    for (std::size_t i = 0; i < kProvenanceNames.size(); ++i)
        if (kProvenanceNames[i] == s) return static_cast<Provenance>(i);
    return std::nullopt;
}

const std::string& GameGraphNode::representative() const {
    if (!spriteIds.empty()) return spriteIds.front();
    return id;
}

const GameGraphNode* GameGraph::find(std::string_view nodeId) const {
    auto it = nodes.find(std::string(nodeId));
    return it == nodes.end() ? nullptr : &it->second;
}

const GameGraphNode* GameGraph::node_of_sprite(std::string_view spriteId) const {
    for (const auto& [id, n] : nodes)
        if (std::binary_search(n.spriteIds.begin(), n.spriteIds.end(), spriteId)) return &n;
    return nullptr;
}

const GameGraphNode* GameGraph::player() const {
    for (const auto& [id, n] : nodes)
        if (n.isPlayer) return &n;
    return nullptr;
}

std::size_t GameGraph::edge_count() const {
    std::size_t total = 0;
    for (const auto& [id, n] : nodes) total += n.edges.size();
    return total;
}

void validate(const GameGraph& g) {
    int cameras = 0, nones = 0;
    for (const auto& [id, n] : g.nodes) {
        if (id != n.id) throw GraphError("node key '" + id + "' does not match node id '" + n.id + "'");
        if (!std::is_sorted(n.spriteIds.begin(), n.spriteIds.end()))
            throw GraphError("node '" + id + "': spriteIds not sorted");
        cameras += n.role == NodeRole::Camera;
        nones += n.role == NodeRole::None;
        double transitionSum = 0.0;
        bool hasTransition = false;
        for (std::size_t i = 0; i < n.edges.size(); ++i) {
            const Edge& e = n.edges[i];
            const std::size_t k = e.kind.index();
            const GameGraphNode* target = g.find(e.target);
            if (!target) fail(n, i, "target '" + e.target + "' does not resolve");
            if (is_cyclic_kind(k) && e.target != n.id) fail(n, i, "cyclic edge must target its own node");
            const bool chunkNode = n.role == NodeRole::ChunkCategory;
            if (is_level_chunk_kind(k) != chunkNode)
                fail(n, i, std::string(edge_kind_name(k)) + " edge not allowed on a " +
                               std::string(role_name(n.role)) + " node");
            if (const auto* t = std::get_if<LevelChunkTransitionEdge>(&e.kind)) {
                if (target->role != NodeRole::ChunkCategory) fail(n, i, "transition must target a chunk node");
                if (!(t->probability > 0.0 && t->probability <= 1.0))
                    fail(n, i, "transition probability outside (0,1]");
                transitionSum += t->probability;
                hasTransition = true;
            }
            if (const auto* r = std::get_if<LevelChunkRepeatsEdge>(&e.kind)) {
                if (r->min < 1 || r->min > r->max) fail(n, i, "repeats require 1 <= min <= max");
            }
            if (const auto* p = std::get_if<LevelChunkPositionEdge>(&e.kind)) {
                if (p->avgNormPos < 0.0 || p->avgNormPos > 1.0) fail(n, i, "avgNormPos outside [0,1]");
            }
            if (const auto* d = std::get_if<DRelationEdge>(&e.kind)) {
                if (d->probability < 0.0 || d->probability > 1.0 + 1e-9) fail(n, i, "probability outside [0,1]");
            }
            if (const auto* gs = std::get_if<GShapeEdge>(&e.kind)) {
                if (gs->shape.empty() || gs->shape.front().empty()) fail(n, i, "empty shape");
                for (const auto& row : gs->shape)
                    if (row.size() != gs->shape.front().size()) fail(n, i, "shape not rectangular");
            }
            if (const auto* c = std::get_if<NCountEdge>(&e.kind)) {
                if (c->count < 0) fail(n, i, "negative count");
            }
        }
        if (hasTransition && std::abs(transitionSum - 1.0) > 1e-9)
            throw GraphError("node '" + id + "': transition probabilities sum to " + std::to_string(transitionSum));
    }
    if (g.provenance == Provenance::Learned && (cameras != 1 || nones != 1))
        throw GraphError("learned graph needs exactly one Camera and one None node");
}

void hash_fact(Fnv1a& h, const Fact& f) {
    h.u64(f.index());
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, AnimationFact>) {
                h.str(v.spriteId);
                h.i64(v.width);
                h.i64(v.height);
            } else if constexpr (std::is_same_v<T, SpatialFact>) {
                h.i64(v.x);
                h.i64(v.y);
            } else if constexpr (std::is_same_v<T, RelationshipXFact>) {
                h.str(v.otherSpriteId);
                h.i64(v.dx);
            } else if constexpr (std::is_same_v<T, RelationshipYFact>) {
                h.str(v.otherSpriteId);
                h.i64(v.dy);
            } else if constexpr (std::is_same_v<T, VelocityXFact>) {
                h.i64(v.vx);
            } else if constexpr (std::is_same_v<T, VelocityYFact>) {
                h.i64(v.vy);
            } else if constexpr (std::is_same_v<T, CameraXFact>) {
                h.i64(v.x);
            } else if constexpr (std::is_same_v<T, CameraYFact>) {
                h.i64(v.y);
            } else {
                h.i64(static_cast<int>(v.button));
            }
        },
        f);
}

std::uint64_t node_fingerprint(const GameGraphNode& n) {
    Fnv1a h;
    h.u64(n.edges.size());
    for (const Edge& e : n.edges) {
        h.u64(e.kind.index());
        std::visit(
            [&](const auto& v) {
                using T = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<T, GShapeEdge>) {
                    h.i64(v.x);
                    h.i64(v.y);
                    h.u64(v.shape.size());
                    for (const auto& row : v.shape) {
                        h.u64(row.size());
                        for (int c : row) h.i64(c);
                    }
                    h.str(v.sNodeId);
                    h.str(v.lNodeId);
                } else if constexpr (std::is_same_v<T, DRelationEdge>) {
                    h.i64(v.dx);
                    h.i64(v.dy);
                    h.f64(v.probability);
                    h.str(v.sNodeId);
                    h.str(v.fromSNodeId);
                    h.str(v.lNodeId);
                } else if constexpr (std::is_same_v<T, NCountEdge>) {
                    h.i64(v.count);
                    h.str(v.lNodeId);
                } else if constexpr (std::is_same_v<T, RuleConditionEdge>) {
                    hash_fact(h, v.fact);
                    h.str(v.ruleId);
                } else if constexpr (std::is_same_v<T, RuleEffectEdge>) {
                    hash_fact(h, v.pre);
                    hash_fact(h, v.post);
                    h.str(v.ruleId);
                } else if constexpr (std::is_same_v<T, LevelChunkTypeEdge>) {
                    h.str(v.chunkCategoryId);
                } else if constexpr (std::is_same_v<T, LevelChunkRepeatsEdge>) {
                    h.i64(v.min);
                    h.i64(v.max);
                } else if constexpr (std::is_same_v<T, LevelChunkPositionEdge>) {
                    h.f64(v.avgNormPos);
                } else {
                    h.f64(v.probability);
                }
            },
            e.kind);
    }
    return h.value();
}

} // namespace expforge
