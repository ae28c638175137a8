#include "expforge/construct.hpp"

#include <algorithm>
#include <limits>
#include <optional>
#include <set>
#include <tuple>

namespace expforge {

namespace {

std::optional<std::string> fact_sprite(const Fact& f) {
    if (const auto* a = std::get_if<AnimationFact>(&f)) return a->spriteId;
    if (const auto* x = std::get_if<RelationshipXFact>(&f)) return x->otherSpriteId;
    if (const auto* y = std::get_if<RelationshipYFact>(&f)) return y->otherSpriteId;
    return std::nullopt;
}

bool removes_subject(const Fact& post) {
    const auto* a = std::get_if<AnimationFact>(&post);
    return a && a->spriteId == kNoneSprite;
}

/// Numeric value of a rule id for ordering; non-numeric ids sort after.
std::pair<long long, std::string> rule_order(const std::string& id) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(id, &used);
        if (used == id.size()) return {v, id};
    } catch (const std::exception&) {
    }
    return {std::numeric_limits<long long>::max(), id};
}

} // namespace

GameGraph construct_game_graph(const std::string& graphId, const LevelDesignModel& model, const Ruleset& rules,
                               const std::vector<std::vector<std::string>>& groups, int playerGroup,
                               const std::map<std::string, std::pair<int, int>>& sizes) {
    GameGraph g;
    g.id = graphId;
    g.provenance = Provenance::Learned;
    g.chunkWidth = model.chunkWidth;
    g.chunkHeight = model.chunkHeight;

    std::map<std::string, std::string> nodeOf;
    for (std::size_t i = 0; i < groups.size(); ++i) {
        if (groups[i].empty()) continue;
        std::vector<std::string> ids = groups[i];
        std::sort(ids.begin(), ids.end());
        GameGraphNode n;
        n.id = ids.front();
        n.spriteIds = ids;
        n.isPlayer = static_cast<int>(i) == playerGroup;
        for (const auto& s : ids) nodeOf[s] = n.id;
        for (const auto& s : ids) {
            std::optional<std::pair<int, int>> wh;
            if (auto it = model.spriteSizes.find(s); it != model.spriteSizes.end()) wh = it->second;
            else if (auto jt = sizes.find(s); jt != sizes.end()) wh = jt->second;
            if (wh) {
                std::tie(n.spriteWidth, n.spriteHeight) = *wh;
                break;
            }
        }
        g.nodes.emplace(n.id, std::move(n));
    }
    for (auto [id, role] : {std::pair{kCameraNodeId, NodeRole::Camera}, std::pair{kNoneNodeId, NodeRole::None}}) {
        GameGraphNode n;
        n.id = std::string(id);
        n.role = role;
        g.nodes.emplace(n.id, std::move(n));
    }

    auto node_for = [&](const std::string& sprite) -> GameGraphNode& {
        auto it = nodeOf.find(sprite);
        if (it == nodeOf.end()) throw GraphError("sprite '" + sprite + "' belongs to no sprite group");
        return g.nodes.at(it->second);
    };
    std::map<std::string, std::string> typeOfS;
    for (const auto& s : model.sNodes) typeOfS[s.id] = s.type;

    for (const auto& l : model.lNodes) {
        for (const auto& s : l.shapes) {
            GameGraphNode& n = node_for(s.type);
            n.edges.push_back({GShapeEdge{s.x, s.y, s.shape, s.sNodeId, l.id}, n.id});
        }
        for (const auto& t : l.table) {
            GameGraphNode& from = node_for(typeOfS.at(t.fromS));
            const GameGraphNode& to = node_for(typeOfS.at(t.toS));
            from.edges.push_back({DRelationEdge{t.dx, t.dy, t.probability, t.toS, t.fromS, l.id}, to.id});
        }
        for (const auto& [type, counts] : l.nValues) {
            GameGraphNode& n = node_for(type);
            for (int c : counts) n.edges.push_back({NCountEdge{c, l.id}, n.id});
        }
        GameGraphNode ln;
        ln.id = l.id;
        ln.role = NodeRole::ChunkCategory;
        ln.edges.push_back({LevelChunkTypeEdge{l.id}, l.id});
        ln.edges.push_back({LevelChunkRepeatsEdge{l.repeatsMin, l.repeatsMax}, l.id});
        ln.edges.push_back({LevelChunkPositionEdge{l.avgNormPos}, l.id});
        for (const auto& [to, p] : l.transitions) ln.edges.push_back({LevelChunkTransitionEdge{p}, to});
        if (g.nodes.count(ln.id)) throw GraphError("chunk category id '" + ln.id + "' collides with a sprite node");
        g.nodes.emplace(ln.id, std::move(ln));
    }

    for (const auto& r : rules) {
        GameGraphNode& subject = r.subject == kCameraSubject ? g.nodes.at(std::string(kCameraNodeId)) : node_for(r.subject);
        const std::string rid = std::to_string(r.id);
        FactSet conditions = r.conditions;
        if (r.requiresInput) {
            conditions.push_back(*r.requiresInput);
            normalize(conditions);
        }
        for (const auto& c : conditions) {
            std::string target = subject.id;
            if (is_derived(c)) target = node_for(*fact_sprite(c)).id;
            else if (auto s = fact_sprite(c); s && *s != kNoneSprite) node_for(*s);
            subject.edges.push_back({RuleConditionEdge{c, rid}, target});
        }
        std::string target = subject.id;
        if (removes_subject(r.post)) target = std::string(kNoneNodeId);
        else if (auto s = fact_sprite(r.post)) node_for(*s);
        subject.edges.push_back({RuleEffectEdge{r.pre, r.post, rid}, target});
    }

    if (playerGroup < 0 || playerGroup >= static_cast<int>(groups.size()))
        throw GraphError("player group index " + std::to_string(playerGroup) + " out of range");
    validate(g);
    return g;
}

Ruleset rules_from_graph(const GameGraph& g) {
    struct Partial {
        std::string subject;
        FactSet conditions;
        std::optional<std::pair<Fact, Fact>> effect;
    };
    std::map<std::pair<long long, std::string>, Partial> byId;
    for (const auto& [id, n] : g.nodes) {
        if (n.role == NodeRole::ChunkCategory || n.role == NodeRole::None) continue;
        const std::string subject = n.role == NodeRole::Camera ? std::string(kCameraSubject) : n.representative();
        for (const auto& e : n.edges) {
            if (const auto* c = std::get_if<RuleConditionEdge>(&e.kind)) {
                Partial& p = byId[rule_order(c->ruleId)];
                if (p.subject.empty()) p.subject = subject;
                if (p.subject == subject) p.conditions.push_back(c->fact);
            } else if (const auto* r = std::get_if<RuleEffectEdge>(&e.kind)) {
                Partial& p = byId[rule_order(r->ruleId)];
                if (p.subject.empty()) p.subject = subject;
                if (p.subject == subject && !p.effect) p.effect = {r->pre, r->post};
            }
        }
    }
    Ruleset out;
    int next = 1;
    for (auto& [key, p] : byId) {
        if (!p.effect || !same_tag(p.effect->first, p.effect->second)) continue;
        Rule r;
        r.id = next++;
        r.subject = p.subject;
        r.pre = p.effect->first;
        r.post = p.effect->second;
        for (const auto& c : p.conditions)
            if (!same_tag(c, r.pre) || is_derived(c)) r.conditions.push_back(c);
        r.conditions.push_back(r.pre);
        normalize(r.conditions);
        out.push_back(std::move(r));
    }
    return out;
}

} // namespace expforge
