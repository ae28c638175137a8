#include "expforge/proto_map.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "expforge/clustering.hpp"
#include "expforge/log.hpp"

namespace expforge {

namespace {

constexpr double kTieEps = 1e-12;
constexpr int kMaxChunkClusters = 8;

double chamfer(ChamferCache* cache, const GameGraphNode& a, const GameGraphNode& b) {
    return cache ? cache->node(a, b) : node_chamfer(a, b);
}

double visual(const GameGraphNode& a, const GameGraphNode& b) {
    if (a.pixels.empty() || b.pixels.empty()) return 1.0;
    return sprite_distance(a.pixels, b.pixels);
}

void sort_entries(std::vector<MappingEntry>& v) {
    std::sort(v.begin(), v.end(), [](const MappingEntry& a, const MappingEntry& b) {
        if (a.distance != b.distance) return a.distance < b.distance;
        return a.ref < b.ref;
    });
}

} // namespace

GameGraph build_proto_graph(const Spritesheet& sheet, const std::string& playerSpriteId, double threshold,
                            const std::string& graphId) {
    if (!sheet.find(playerSpriteId))
        throw std::invalid_argument("player sprite '" + playerSpriteId + "' is not in the spritesheet");
    GameGraph g;
    g.id = graphId;
    g.provenance = Provenance::Proto;
    for (const auto& group : cluster_sprites(sheet, threshold)) {
        GameGraphNode n;
        n.id = group.front();
        n.spriteIds = group;
        n.isPlayer = std::find(group.begin(), group.end(), playerSpriteId) != group.end();
        const SpriteImage* rep = sheet.find(n.id);
        n.spriteWidth = rep->width();
        n.spriteHeight = rep->height();
        n.pixels = rep->pixels;
        n.edges.push_back({GShapeEdge{0, 0, Shape{{1}}, "", ""}, n.id});
        for (const auto& s : group) {
            const SpriteImage* img = sheet.find(s);
            n.edges.push_back({RuleConditionEdge{AnimationFact{n.id, img->width(), img->height()}, "proto"}, n.id});
        }
        g.nodes.emplace(n.id, std::move(n));
    }
    for (auto [id, role] : {std::pair{kCameraNodeId, NodeRole::Camera}, std::pair{kNoneNodeId, NodeRole::None}}) {
        GameGraphNode n;
        n.id = std::string(id);
        n.role = role;
        g.nodes.emplace(n.id, std::move(n));
    }
    return g;
}

const std::vector<MappingEntry>& Mapping::of(const std::string& protoNode) const {
    static const std::vector<MappingEntry> empty;
    auto it = entries.find(protoNode);
    return it == entries.end() ? empty : it->second;
}

std::vector<double> chunk_node_features(const GameGraphNode& n) {
    double pos = 0.0, repeats = 1.0, degree = 0.0;
    for (const auto& e : n.edges) {
        if (const auto* p = std::get_if<LevelChunkPositionEdge>(&e.kind)) pos = p->avgNormPos;
        else if (const auto* r = std::get_if<LevelChunkRepeatsEdge>(&e.kind)) repeats = 0.5 * (r->min + r->max);
        else if (std::holds_alternative<LevelChunkTransitionEdge>(e.kind)) degree += 1.0;
    }
    return {pos, repeats, degree};
}

Mapping build_mapping(const std::vector<GameGraph>& kb, const GameGraph& proto, Rng& rng, ChamferCache* cache) {
    if (kb.empty()) throw std::invalid_argument("mapping needs a non-empty knowledge base");
    Mapping m;
    m.proto = proto;
    m.proto.chunkWidth = kb.front().chunkWidth;
    m.proto.chunkHeight = kb.front().chunkHeight;

    std::vector<const GameGraphNode*> protoSprites;
    for (const auto& [id, n] : proto.nodes)
        if (n.role == NodeRole::Sprite) protoSprites.push_back(&n);

    // forward: kb sprite node -> closest proto node (measured proto -> kb)
    for (const auto& g : kb)
        for (const auto& [id, k] : g.nodes) {
            if (k.role != NodeRole::Sprite) continue;
            const GameGraphNode* best = nullptr;
            double bestD = 2.0, bestV = 2.0;
            for (const GameGraphNode* p : protoSprites) {
                if (p->isPlayer != k.isPlayer) continue;
                const double d = chamfer(cache, *p, k);
                const double v = visual(*p, k);
                if (d < bestD - kTieEps || (std::abs(d - bestD) <= kTieEps && v < bestV)) {
                    best = p;
                    bestD = d;
                    bestV = v;
                }
            }
            if (best && bestD < 1.0) {
                m.entries[best->id].push_back({{g.id, id}, bestD});
                m.assignment[{g.id, id}] = best->id;
            }
        }

    // reverse: empty proto nodes take their closest kb node (measured kb -> proto)
    for (const GameGraphNode* p : protoSprites) {
        if (!m.of(p->id).empty()) continue;
        std::optional<NodeRef> best;
        double bestD = 2.0, bestV = 2.0;
        for (const auto& g : kb)
            for (const auto& [id, k] : g.nodes) {
                if (k.role != NodeRole::Sprite || k.isPlayer != p->isPlayer) continue;
                const double d = chamfer(cache, k, *p);
                const double v = visual(*p, k);
                if (d < bestD - kTieEps || (std::abs(d - bestD) <= kTieEps && v < bestV - kTieEps)) {
                    best = NodeRef{g.id, id};
                    bestD = d;
                    bestV = v;
                }
            }
        if (best && bestD < 1.0) {
            m.entries[p->id].push_back({*best, bestD});
            m.assignment.emplace(*best, p->id);
        } else {
            log_warn("proto node '" + p->id + "' has no kb node within distance 1");
        }
    }

    // Camera and None map onto their counterparts
    for (auto role : {NodeRole::Camera, NodeRole::None}) {
        const GameGraphNode* p = nullptr;
        for (const auto& [id, n] : proto.nodes)
            if (n.role == role) p = &n;
        if (!p) continue;
        for (const auto& g : kb)
            for (const auto& [id, k] : g.nodes)
                if (k.role == role) {
                    m.entries[p->id].push_back({{g.id, id}, chamfer(cache, *p, k)});
                    m.assignment[{g.id, id}] = p->id;
                }
    }

    // chunk categories: K-medians over spritesheet-independent features
    std::vector<std::pair<NodeRef, const GameGraphNode*>> chunks;
    for (const auto& g : kb)
        for (const auto& [id, k] : g.nodes)
            if (k.role == NodeRole::ChunkCategory) chunks.push_back({{g.id, id}, &k});
    if (!chunks.empty()) {
        std::vector<Point> raw;
        for (const auto& c : chunks) raw.push_back(chunk_node_features(*c.second));
        const auto feats = z_normalize(raw);
        const int k = estimate_k(feats, kMaxChunkClusters);
        const Clustering cl = kmedians(feats, k, rng);
        std::map<NodeRef, int> clusterOf;
        for (std::size_t i = 0; i < chunks.size(); ++i) clusterOf[chunks[i].first] = cl.labels[i];
        auto node_id = [](int c) { return "L:" + std::to_string(c); };
        for (int c = 0; c < cl.k(); ++c) {
            // medoid: member nearest the cluster median
            std::size_t medoid = chunks.size();
            double bestD = 0.0;
            for (std::size_t i = 0; i < chunks.size(); ++i) {
                if (cl.labels[i] != c) continue;
                double d = 0.0;
                for (std::size_t f = 0; f < feats[i].size(); ++f) d += std::abs(feats[i][f] - cl.centers[c][f]);
                if (medoid == chunks.size() || d < bestD) {
                    medoid = i;
                    bestD = d;
                }
            }
            GameGraphNode ln;
            ln.id = node_id(c);
            ln.role = NodeRole::ChunkCategory;
            ln.edges.push_back({LevelChunkTypeEdge{ln.id}, ln.id});
            std::map<std::string, double> transitions;
            const std::string& graphId = chunks[medoid].first.graphId;
            for (const auto& e : chunks[medoid].second->edges) {
                if (std::holds_alternative<LevelChunkRepeatsEdge>(e.kind) ||
                    std::holds_alternative<LevelChunkPositionEdge>(e.kind)) {
                    ln.edges.push_back({e.kind, ln.id});
                } else if (const auto* t = std::get_if<LevelChunkTransitionEdge>(&e.kind)) {
                    auto it = clusterOf.find({graphId, e.target});
                    if (it == clusterOf.end() || it->second == c) continue;
                    transitions[node_id(it->second)] += t->probability;
                }
            }
            double total = 0.0;
            for (const auto& [to, p] : transitions) total += p;
            for (const auto& [to, p] : transitions) ln.edges.push_back({LevelChunkTransitionEdge{p / total}, to});
            for (std::size_t i = 0; i < chunks.size(); ++i)
                if (cl.labels[i] == c) {
                    m.entries[ln.id].push_back({chunks[i].first, chamfer(cache, ln, *chunks[i].second)});
                    m.assignment[chunks[i].first] = ln.id;
                }
            m.proto.nodes.emplace(ln.id, std::move(ln));
        }
    }

    for (auto& [id, v] : m.entries) sort_entries(v);
    return m;
}

nlohmann::json mapping_to_json(const Mapping& m) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [id, v] : m.entries) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& e : v) arr.push_back({{"graph", e.ref.graphId}, {"node", e.ref.nodeId}, {"distance", e.distance}});
        j[id] = arr;
    }
    return j;
}

Mapping mapping_from_json(const nlohmann::json& j, GameGraph proto) {
    Mapping m;
    m.proto = std::move(proto);
    std::map<NodeRef, double> bestD;
    for (const auto& [id, arr] : j.items()) {
        if (!m.proto.find(id)) throw std::invalid_argument("mapping names unknown proto node '" + id + "'");
        auto& v = m.entries[id];
        for (const auto& e : arr) {
            MappingEntry me{{e.at("graph").get<std::string>(), e.at("node").get<std::string>()},
                            e.at("distance").get<double>()};
            auto it = bestD.find(me.ref);
            if (it == bestD.end() || me.distance < it->second) {
                bestD[me.ref] = me.distance;
                m.assignment[me.ref] = id;
            }
            v.push_back(std::move(me));
        }
        sort_entries(v);
    }
    return m;
}

} // namespace expforge
