#include "expforge/combinators.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <thread>

namespace expforge {

namespace {

constexpr std::uint64_t kSaturated = std::numeric_limits<std::uint64_t>::max();

std::uint64_t mul_sat(std::uint64_t a, std::uint64_t b) {
    if (a == 0 || b == 0) return 0;
    if (a > kSaturated / b) return kSaturated;
    return a * b;
}

int scaled(int v, double s) { return static_cast<int>(std::lround(v * s)); }

Fact scale_fact(const Fact& f, double s) {
    return std::visit(
        [&](const auto& v) -> Fact {
            using T = std::decay_t<decltype(v)>;
            T o = v;
            if constexpr (std::is_same_v<T, SpatialFact>) {
                o.x = scaled(v.x, s);
                o.y = scaled(v.y, s);
            } else if constexpr (std::is_same_v<T, RelationshipXFact>) {
                o.dx = scaled(v.dx, s);
            } else if constexpr (std::is_same_v<T, RelationshipYFact>) {
                o.dy = scaled(v.dy, s);
            } else if constexpr (std::is_same_v<T, VelocityXFact>) {
                o.vx = scaled(v.vx, s);
            } else if constexpr (std::is_same_v<T, VelocityYFact>) {
                o.vy = scaled(v.vy, s);
            } else if constexpr (std::is_same_v<T, CameraXFact>) {
                o.x = scaled(v.x, s);
            } else if constexpr (std::is_same_v<T, CameraYFact>) {
                o.y = scaled(v.y, s);
            }
            return o;
        },
        f);
}

void scale_edge(EdgeKind& k, double s) {
    std::visit(
        [&](auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, GShapeEdge>) {
                v.x = scaled(v.x, s);
                v.y = scaled(v.y, s);
            } else if constexpr (std::is_same_v<T, DRelationEdge>) {
                v.dx = scaled(v.dx, s);
                v.dy = scaled(v.dy, s);
                v.probability = std::clamp(v.probability * s, 0.0, 1.0);
            } else if constexpr (std::is_same_v<T, NCountEdge>) {
                v.count = std::max(0, scaled(v.count, s));
            } else if constexpr (std::is_same_v<T, RuleConditionEdge>) {
                v.fact = scale_fact(v.fact, s);
            } else if constexpr (std::is_same_v<T, RuleEffectEdge>) {
                v.pre = scale_fact(v.pre, s);
                v.post = scale_fact(v.post, s);
            } else if constexpr (std::is_same_v<T, LevelChunkRepeatsEdge>) {
                v.min = std::max(1, scaled(v.min, s));
                v.max = std::max(v.min, scaled(v.max, s));
            } else if constexpr (std::is_same_v<T, LevelChunkPositionEdge>) {
                v.avgNormPos = std::clamp(v.avgNormPos * s, 0.0, 1.0);
            } else if constexpr (std::is_same_v<T, LevelChunkTransitionEdge>) {
                v.probability *= s;
            }
        },
        k);
}

std::pair<long long, std::string> rule_order(const std::string& id) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(id, &used);
        if (used == id.size()) return {v, id};
    } catch (const std::exception&) {
    }
    return {std::numeric_limits<long long>::max(), id};
}

const std::string* rule_id_of(const EdgeKind& k) {
    if (const auto* c = std::get_if<RuleConditionEdge>(&k)) return &c->ruleId;
    if (const auto* r = std::get_if<RuleEffectEdge>(&k)) return &r->ruleId;
    return nullptr;
}

/// One kb edge chosen for an output node.
struct Selected {
    NodeRef ref;
    std::size_t edge = 0;
    double scale = 1.0;
    std::optional<std::string> retarget;
};

using Selection = std::map<std::string, std::vector<Selected>>;

std::string rename_sprite(const std::string& id, const GameGraphNode& owner) {
    return id == kNoneSprite ? id : owner.representative();
}

Fact rename_fact(const Fact& f, const GameGraphNode& owner, const GameGraphNode* partner) {
    Fact o = f;
    if (auto* a = std::get_if<AnimationFact>(&o)) a->spriteId = rename_sprite(a->spriteId, owner);
    if (auto* x = std::get_if<RelationshipXFact>(&o); x && partner) x->otherSpriteId = partner->representative();
    if (auto* y = std::get_if<RelationshipYFact>(&o); y && partner) y->otherSpriteId = partner->representative();
    return o;
}

GameGraph build_graph(const Selection& sel, const Sources& src, const std::string& graphId, Provenance provenance) {
    const GameGraph& proto = src.proto();
    GameGraph g;
    g.id = graphId;
    g.provenance = provenance;
    g.chunkWidth = proto.chunkWidth;
    g.chunkHeight = proto.chunkHeight;
    for (const auto& [id, p] : proto.nodes) {
        GameGraphNode n;
        n.id = p.id;
        n.role = p.role;
        n.spriteIds = p.spriteIds;
        n.isPlayer = p.isPlayer;
        n.spriteWidth = p.spriteWidth;
        n.spriteHeight = p.spriteHeight;
        n.pixels = p.pixels;
        g.nodes.emplace(id, std::move(n));
    }

    // rules are re-keyed per output node, keeping each source graph's order
    using RuleKey = std::tuple<std::string, int, std::pair<long long, std::string>>;
    std::map<RuleKey, std::string> ruleIds;
    for (const auto& [out, edges] : sel)
        for (const auto& s : edges)
            if (const std::string* rid = rule_id_of(src.node(s.ref).edges.at(s.edge).kind))
                ruleIds[{out, src.graph_index(s.ref.graphId), rule_order(*rid)}];
    int next = 1;
    for (auto& [key, id] : ruleIds) id = std::to_string(next++);

    for (const auto& [out, edges] : sel) {
        auto outIt = g.nodes.find(out);
        if (outIt == g.nodes.end()) throw RealizeError("output node '" + out + "' is not in the proto graph");
        GameGraphNode& owner = outIt->second;
        for (const auto& s : edges) {
            const GameGraphNode& kbNode = src.node(s.ref);
            const Edge& e = kbNode.edges.at(s.edge);
            Edge o = e;
            if (s.scale != 1.0) scale_edge(o.kind, s.scale);

            // target
            if (is_cyclic_kind(e.kind.index())) {
                o.target = out;
            } else if (s.retarget) {
                if (!g.nodes.count(*s.retarget))
                    throw RealizeError("retarget to missing node '" + *s.retarget + "'");
                o.target = *s.retarget;
            } else if (e.target == s.ref.nodeId) {
                o.target = out;
            } else {
                const std::string* t = src.output_of({s.ref.graphId, e.target});
                if (!t) continue;
                o.target = *t;
            }
            const GameGraphNode& target = g.nodes.at(o.target);

            auto chunk_of = [&](const std::string& l) -> const std::string* {
                const std::string* t = src.output_of({s.ref.graphId, l});
                if (!t || g.nodes.at(*t).role != NodeRole::ChunkCategory) return nullptr;
                return t;
            };
            const std::string style = "/" + s.ref.graphId + "/";
            bool keep = true;
            std::visit(
                [&](auto& v) {
                    using T = std::decay_t<decltype(v)>;
                    if constexpr (std::is_same_v<T, GShapeEdge>) {
                        const std::string* l = chunk_of(v.lNodeId);
                        keep = l != nullptr && owner.role == NodeRole::Sprite;
                        if (keep) {
                            v.lNodeId = *l;
                            v.sNodeId = out + style + v.sNodeId;
                        }
                    } else if constexpr (std::is_same_v<T, DRelationEdge>) {
                        const std::string* l = chunk_of(v.lNodeId);
                        keep = l != nullptr && target.role == NodeRole::Sprite && owner.role == NodeRole::Sprite;
                        if (keep) {
                            v.lNodeId = *l;
                            v.sNodeId = o.target + style + v.sNodeId;
                            v.fromSNodeId = out + style + v.fromSNodeId;
                        }
                    } else if constexpr (std::is_same_v<T, NCountEdge>) {
                        const std::string* l = chunk_of(v.lNodeId);
                        keep = l != nullptr && owner.role == NodeRole::Sprite;
                        if (keep) v.lNodeId = *l;
                    } else if constexpr (std::is_same_v<T, RuleConditionEdge>) {
                        keep = owner.role != NodeRole::ChunkCategory;
                        if (is_derived(v.fact)) keep = keep && target.role == NodeRole::Sprite;
                        v.fact = rename_fact(v.fact, owner, &target);
                        v.ruleId = ruleIds.at({out, src.graph_index(s.ref.graphId), rule_order(v.ruleId)});
                    } else if constexpr (std::is_same_v<T, RuleEffectEdge>) {
                        keep = owner.role != NodeRole::ChunkCategory;
                        v.pre = rename_fact(v.pre, owner, nullptr);
                        v.post = rename_fact(v.post, owner, nullptr);
                        v.ruleId = ruleIds.at({out, src.graph_index(s.ref.graphId), rule_order(v.ruleId)});
                    } else if constexpr (std::is_same_v<T, LevelChunkTypeEdge>) {
                        keep = owner.role == NodeRole::ChunkCategory;
                        v.chunkCategoryId = out;
                    } else if constexpr (std::is_same_v<T, LevelChunkTransitionEdge>) {
                        keep = owner.role == NodeRole::ChunkCategory && target.role == NodeRole::ChunkCategory &&
                               o.target != out && v.probability > 0.0;
                    } else {
                        keep = owner.role == NodeRole::ChunkCategory;
                    }
                },
                o.kind);
            if (keep) owner.edges.push_back(std::move(o));
        }
    }

    for (auto& [id, n] : g.nodes) {
        double total = 0.0;
        for (const auto& e : n.edges)
            if (const auto* t = std::get_if<LevelChunkTransitionEdge>(&e.kind)) total += t->probability;
        if (total <= 0.0) continue;
        for (auto& e : n.edges)
            if (auto* t = std::get_if<LevelChunkTransitionEdge>(&e.kind)) t->probability /= total;
    }
    try {
        validate(g);
    } catch (const GraphError& e) {
        throw RealizeError(std::string("realized graph is invalid: ") + e.what());
    }
    return g;
}

std::vector<std::string> nodes_with_role(const GameGraph& g, NodeRole role) {
    std::vector<std::string> out;
    for (const auto& [id, n] : g.nodes)
        if (n.role == role) out.push_back(id);
    return out;
}

constexpr std::size_t kMaxBlendEntries = 16;

template <typename Candidate>
BaselineResult run_baseline(std::uint64_t space, const std::function<Candidate(std::uint64_t)>& make,
                            const std::function<GameGraph(const Candidate&)>& build, const GraphHeuristic& h,
                            Rng& rng, const BaselineOptions& opts, bool forceFirst,
                            const std::function<void(BaselineResult&, const Candidate&)>& store) {
    BaselineResult res;
    res.spaceSize = space;
    res.exhaustive = space <= opts.exhaustiveCap;
    std::vector<std::uint64_t> indices;
    if (res.exhaustive) {
        for (std::uint64_t i = 0; i < space; ++i) indices.push_back(i);
    } else {
        if (forceFirst) indices.push_back(0);
        while (indices.size() < opts.samples) indices.push_back(rng.next() % space);
    }
    res.score = -std::numeric_limits<double>::infinity();
    constexpr std::size_t kBatch = 64;
    for (std::size_t start = 0; start < indices.size(); start += kBatch) {
        const std::size_t n = std::min(kBatch, indices.size() - start);
        std::vector<Candidate> cands(n);
        std::vector<GameGraph> graphs(n);
        std::vector<double> scores(n);
        parallel_for(n, opts.threads, [&](std::size_t i) {
            cands[i] = make(indices[start + i]);
            graphs[i] = build(cands[i]);
            scores[i] = h(graphs[i]);
        });
        for (std::size_t i = 0; i < n; ++i) {
            ++res.evaluated;
            if (scores[i] > res.score) {
                res.score = scores[i];
                res.graph = std::move(graphs[i]);
                store(res, cands[i]);
            }
        }
    }
    return res;
}

} // namespace

std::size_t ConceptualExpansion::included_edges() const {
    std::size_t n = 0;
    for (const auto& [id, node] : nodes)
        for (const auto& t : node.terms)
            for (const auto& f : t.filters) n += f.include;
    return n;
}

Sources::Sources(const std::vector<GameGraph>& kb, const Mapping& mapping) : kb_(&kb), mapping_(&mapping) {
    for (std::size_t i = 0; i < kb.size(); ++i) graphIndex_[kb[i].id] = static_cast<int>(i);
}

const GameGraphNode& Sources::node(const NodeRef& ref) const {
    const GameGraph& g = kb_->at(static_cast<std::size_t>(graph_index(ref.graphId)));
    const GameGraphNode* n = g.find(ref.nodeId);
    if (!n) throw RealizeError("unknown kb node '" + ref.graphId + ":" + ref.nodeId + "'");
    return *n;
}

int Sources::graph_index(const std::string& graphId) const {
    auto it = graphIndex_.find(graphId);
    if (it == graphIndex_.end()) throw RealizeError("unknown kb graph '" + graphId + "'");
    return it->second;
}

const std::string* Sources::output_of(const NodeRef& ref) const {
    auto it = mapping_->assignment.find(ref);
    return it == mapping_->assignment.end() ? nullptr : &it->second;
}

bool is_inter_node(const Edge& e) {
    if (std::holds_alternative<DRelationEdge>(e.kind) || std::holds_alternative<LevelChunkTransitionEdge>(e.kind))
        return true;
    if (const auto* c = std::get_if<RuleConditionEdge>(&e.kind)) return is_derived(c->fact);
    return false;
}

std::vector<double> init_weights(const std::vector<MappingEntry>& entries) {
    std::vector<double> w;
    if (entries.empty()) return w;
    double dMin = entries.front().distance;
    for (const auto& e : entries) dMin = std::min(dMin, e.distance);
    for (const auto& e : entries) w.push_back(std::clamp((1.0 - e.distance) / (1.0 - dMin), 0.0, 1.0));
    return w;
}

ConceptualExpansion expansion_from_init(const Sources& src, Rng& rng) {
    ConceptualExpansion ce;
    for (const auto& [id, p] : src.proto().nodes) {
        ExpandedNode node;
        const auto& entries = src.mapping().of(id);
        const auto w = init_weights(entries);
        for (std::size_t i = 0; i < entries.size(); ++i) {
            Term t;
            t.ref = entries[i].ref;
            for (std::size_t k = 0; k < src.node(t.ref).edges.size(); ++k) {
                EdgeFilter f;
                f.include = rng.bernoulli(w[i]);
                t.filters.push_back(f);
            }
            node.terms.push_back(std::move(t));
        }
        ce.nodes.emplace(id, std::move(node));
    }
    return ce;
}

GameGraph realize(const ConceptualExpansion& ce, const Sources& src, const std::string& graphId, Provenance provenance) {
    Selection sel;
    for (const auto& [out, node] : ce.nodes) {
        auto& edges = sel[out];
        for (const auto& t : node.terms) {
            const GameGraphNode& kbNode = src.node(t.ref);
            if (t.filters.size() != kbNode.edges.size())
                throw RealizeError("filter count does not match edges of '" + t.ref.graphId + ":" + t.ref.nodeId + "'");
            for (std::size_t i = 0; i < t.filters.size(); ++i) {
                const EdgeFilter& f = t.filters[i];
                if (!f.include) continue;
                edges.push_back({t.ref, i, std::clamp(f.scale, kMinScale, kMaxScale), f.retarget});
            }
        }
    }
    return build_graph(sel, src, graphId, provenance);
}

ConceptualExpansion get_neighbor(const ConceptualExpansion& ce, const Sources& src, Rng& rng, NeighborOp* applied) {
    struct Slot {
        std::string node;
        std::size_t term;
        std::size_t edge;
    };
    std::vector<Slot> edges, interNode;
    std::vector<std::pair<std::string, std::vector<NodeRef>>> addable;
    std::vector<std::string> droppable;
    for (const auto& [id, node] : ce.nodes) {
        std::vector<NodeRef> unused;
        for (const auto& e : src.mapping().of(id)) {
            bool used = false;
            for (const auto& t : node.terms) used = used || t.ref == e.ref;
            if (!used) unused.push_back(e.ref);
        }
        if (!unused.empty()) addable.push_back({id, unused});
        if (node.terms.size() >= 2) droppable.push_back(id);
        for (std::size_t t = 0; t < node.terms.size(); ++t) {
            const GameGraphNode& kbNode = src.node(node.terms[t].ref);
            for (std::size_t k = 0; k < node.terms[t].filters.size(); ++k) {
                edges.push_back({id, t, k});
                if (is_inter_node(kbNode.edges[k])) interNode.push_back({id, t, k});
            }
        }
    }
    const auto sprites = nodes_with_role(src.proto(), NodeRole::Sprite);
    const auto chunks = nodes_with_role(src.proto(), NodeRole::ChunkCategory);

    auto applicable = [&](NeighborOp op) {
        switch (op) {
        case NeighborOp::Toggle:
        case NeighborOp::Jitter:
            return !edges.empty();
        case NeighborOp::AddTerm:
            return !addable.empty();
        case NeighborOp::DropTerm:
            return !droppable.empty();
        case NeighborOp::Retarget:
            return !interNode.empty();
        }
        return false;
    };
    bool any = false;
    for (NeighborOp op : kNeighborOps) any = any || applicable(op);
    if (!any) return ce;

    NeighborOp op;
    do {
        op = kNeighborOps[rng.below(kNeighborOps.size())];
    } while (!applicable(op));
    if (applied) *applied = op;

    ConceptualExpansion out = ce;
    switch (op) {
    case NeighborOp::Toggle: {
        const Slot& s = edges[rng.below(edges.size())];
        auto& f = out.nodes.at(s.node).terms[s.term].filters[s.edge];
        f.include = !f.include;
        break;
    }
    case NeighborOp::Jitter: {
        const Slot& s = edges[rng.below(edges.size())];
        auto& f = out.nodes.at(s.node).terms[s.term].filters[s.edge];
        // log-uniform factor in [0.5, 2]
        const double factor = std::exp2(rng.uniform(-1.0, 1.0));
        f.scale = std::clamp(f.scale * factor, kMinScale, kMaxScale);
        break;
    }
    case NeighborOp::AddTerm: {
        const auto& [id, unused] = addable[rng.below(addable.size())];
        Term t;
        t.ref = unused[rng.below(unused.size())];
        t.filters.assign(src.node(t.ref).edges.size(), EdgeFilter{});
        out.nodes.at(id).terms.push_back(std::move(t));
        break;
    }
    case NeighborOp::DropTerm: {
        auto& terms = out.nodes.at(droppable[rng.below(droppable.size())]).terms;
        terms.erase(terms.begin() + static_cast<std::ptrdiff_t>(rng.below(terms.size())));
        break;
    }
    case NeighborOp::Retarget: {
        const Slot& s = interNode[rng.below(interNode.size())];
        const Edge& e = src.node(ce.nodes.at(s.node).terms[s.term].ref).edges[s.edge];
        const auto& pool = std::holds_alternative<LevelChunkTransitionEdge>(e.kind) ? chunks : sprites;
        if (!pool.empty())
            out.nodes.at(s.node).terms[s.term].filters[s.edge].retarget = pool[rng.below(pool.size())];
        break;
    }
    }
    return out;
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
    std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads) : std::thread::hardware_concurrency();
    workers = std::max<std::size_t>(1, std::min(workers, n));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex errorMutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(errorMutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

SearchResult ce_search(const Sources& src, const ExpansionHeuristic& h, Rng& rng, const SearchOptions& opts) {
    SearchResult res;
    res.ce = expansion_from_init(src, rng);
    res.graph = realize(res.ce, src);
    res.score = h(res.ce, res.graph);
    res.initialScore = res.score;
    res.evaluations = 1;
    int stale = 0;
    while (stale < opts.patience && (opts.maxSteps <= 0 || res.steps < opts.maxSteps)) {
        std::vector<ConceptualExpansion> cands;
        for (int i = 0; i < opts.neighbors; ++i) cands.push_back(get_neighbor(res.ce, src, rng));
        std::vector<GameGraph> graphs(cands.size());
        std::vector<double> scores(cands.size());
        parallel_for(cands.size(), opts.threads, [&](std::size_t i) {
            graphs[i] = realize(cands[i], src);
            scores[i] = h(cands[i], graphs[i]);
        });
        res.evaluations += static_cast<int>(cands.size());
        std::size_t best = 0;
        for (std::size_t i = 1; i < scores.size(); ++i)
            if (scores[i] > scores[best]) best = i;
        if (!scores.empty() && scores[best] > res.score) {
            res.ce = std::move(cands[best]);
            res.graph = std::move(graphs[best]);
            res.score = scores[best];
            stale = 0;
        } else {
            ++stale;
        }
        ++res.steps;
        res.history.push_back(res.score);
    }
    return res;
}

GameGraph assemble(const NodeChoice& choice, const Sources& src, const std::string& graphId, Provenance provenance,
                   const Reroutes& reroutes) {
    Selection sel;
    for (const auto& [out, refs] : choice) {
        auto& edges = sel[out];
        for (std::size_t t = 0; t < refs.size(); ++t) {
            const GameGraphNode& kbNode = src.node(refs[t]);
            for (std::size_t i = 0; i < kbNode.edges.size(); ++i) {
                Selected s{refs[t], i, 1.0, std::nullopt};
                if (auto it = reroutes.find({out, t, i}); it != reroutes.end()) s.retarget = it->second;
                edges.push_back(std::move(s));
            }
        }
    }
    return build_graph(sel, src, graphId, provenance);
}

ConceptualExpansion expansion_of_choice(const NodeChoice& choice, const Sources& src) {
    ConceptualExpansion ce;
    for (const auto& [id, p] : src.proto().nodes) ce.nodes[id];
    for (const auto& [out, refs] : choice)
        for (const auto& r : refs) ce.nodes[out].terms.push_back({r, std::vector<EdgeFilter>(src.node(r).edges.size())});
    return ce;
}

std::uint64_t amalgam_space_size(const Sources& src) {
    std::uint64_t n = 1;
    for (const auto& [id, p] : src.proto().nodes) n = mul_sat(n, std::max<std::size_t>(1, src.mapping().of(id).size()));
    return n;
}

NodeChoice amalgam_candidate(const Sources& src, std::uint64_t index) {
    NodeChoice c;
    for (const auto& [id, p] : src.proto().nodes) {
        const auto& entries = src.mapping().of(id);
        if (entries.empty()) {
            c[id];
            continue;
        }
        c[id] = {entries[index % entries.size()].ref};
        index /= entries.size();
    }
    return c;
}

std::uint64_t blend_space_size(const Sources& src) {
    std::uint64_t n = 1;
    for (const auto& [id, p] : src.proto().nodes) {
        const std::size_t m = std::min(src.mapping().of(id).size(), kMaxBlendEntries);
        n = mul_sat(n, m == 0 ? 1 : (std::uint64_t{1} << m) - 1);
    }
    return n;
}

NodeChoice blend_candidate(const Sources& src, std::uint64_t index) {
    NodeChoice c;
    for (const auto& [id, p] : src.proto().nodes) {
        const auto& entries = src.mapping().of(id);
        const std::size_t m = std::min(entries.size(), kMaxBlendEntries);
        if (m == 0) {
            c[id];
            continue;
        }
        const std::uint64_t count = (std::uint64_t{1} << m) - 1;
        const std::uint64_t pick = index % count;
        index /= count;
        // subsets of the same size are contiguous; walk sizes from m down
        std::uint64_t offset = pick;
        std::size_t size = m;
        auto choose = [](std::size_t n, std::size_t k) {
            std::uint64_t r = 1;
            for (std::size_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
            return r;
        };
        while (offset >= choose(m, size)) {
            offset -= choose(m, size);
            --size;
        }
        // unrank the offset-th lexicographic combination of `size` out of m
        std::vector<NodeRef> refs;
        std::size_t start = 0;
        for (std::size_t k = size; k > 0; --k)
            for (std::size_t i = start; i < m; ++i) {
                const std::uint64_t rest = choose(m - i - 1, k - 1);
                if (offset < rest) {
                    refs.push_back(entries[i].ref);
                    start = i + 1;
                    break;
                }
                offset -= rest;
            }
        c[id] = std::move(refs);
    }
    return c;
}

BaselineResult amalgam_search(const Sources& src, const GraphHeuristic& h, Rng& rng, const BaselineOptions& opts) {
    return run_baseline<NodeChoice>(
        amalgam_space_size(src), [&](std::uint64_t i) { return amalgam_candidate(src, i); },
        [&](const NodeChoice& c) { return assemble(c, src, "amalgam", Provenance::Amalgam); }, h, rng, opts, false,
        [](BaselineResult& r, const NodeChoice& c) { r.choice = c; });
}

BaselineResult blend_search(const Sources& src, const GraphHeuristic& h, Rng& rng, const BaselineOptions& opts) {
    return run_baseline<NodeChoice>(
        blend_space_size(src), [&](std::uint64_t i) { return blend_candidate(src, i); },
        [&](const NodeChoice& c) { return assemble(c, src, "blend", Provenance::Blend); }, h, rng, opts, true,
        [](BaselineResult& r, const NodeChoice& c) { r.choice = c; });
}

std::vector<RerouteOption> composition_options(const NodeChoice& base, const Sources& src) {
    std::vector<RerouteOption> out;
    for (const auto& [id, refs] : base)
        for (std::size_t t = 0; t < refs.size(); ++t) {
            const GameGraphNode& kbNode = src.node(refs[t]);
            for (std::size_t i = 0; i < kbNode.edges.size(); ++i) {
                const Edge& e = kbNode.edges[i];
                if (!is_inter_node(e)) continue;
                const NodeRef original{refs[t].graphId, e.target};
                const NodeRole want = std::holds_alternative<LevelChunkTransitionEdge>(e.kind) ? NodeRole::ChunkCategory
                                                                                             : NodeRole::Sprite;
                RerouteOption opt{{id, t, i}, {}};
                for (const auto& [pid, entries] : src.mapping().entries) {
                    if (src.proto().find(pid)->role != want) continue;
                    for (const auto& en : entries)
                        if (en.ref == original) {
                            opt.targets.push_back(pid);
                            break;
                        }
                }
                if (!opt.targets.empty()) out.push_back(std::move(opt));
            }
        }
    return out;
}

BaselineResult composition_search(const Sources& src, const GraphHeuristic& h, Rng& rng, const BaselineOptions& opts) {
    struct Candidate {
        NodeChoice choice;
        Reroutes reroutes;
    };
    const std::uint64_t bases = amalgam_space_size(src);
    // rewiring counts per base, needed for exhaustive ranking
    std::vector<std::uint64_t> perBase;
    std::uint64_t total = 0;
    if (bases <= opts.exhaustiveCap) {
        for (std::uint64_t b = 0; b < bases && total != kSaturated; ++b) {
            std::uint64_t n = 1;
            for (const auto& o : composition_options(amalgam_candidate(src, b), src)) n = mul_sat(n, o.targets.size());
            perBase.push_back(n);
            total = total > kSaturated - n ? kSaturated : total + n;
        }
    } else {
        total = kSaturated;
    }
    auto decode = [&](std::uint64_t base, std::uint64_t rewire) {
        Candidate c{amalgam_candidate(src, base), {}};
        for (const auto& o : composition_options(c.choice, src)) {
            c.reroutes[o.key] = o.targets[rewire % o.targets.size()];
            rewire /= o.targets.size();
        }
        return c;
    };
    const bool exhaustive = total <= opts.exhaustiveCap;
    std::function<Candidate(std::uint64_t)> make;
    std::vector<std::pair<std::uint64_t, std::uint64_t>> samples;
    if (exhaustive) {
        make = [&](std::uint64_t i) {
            std::uint64_t b = 0;
            while (i >= perBase[b]) i -= perBase[b++];
            return decode(b, i);
        };
    } else {
        // a sampled index encodes a uniformly drawn base and a uniformly drawn rewiring
        for (std::uint64_t s = 0; s < opts.samples; ++s) samples.push_back({rng.next() % bases, rng.next()});
        make = [&](std::uint64_t i) { return decode(samples[i].first, samples[i].second); };
    }
    BaselineOptions o = opts;
    if (!exhaustive) o.exhaustiveCap = opts.samples;
    BaselineResult res = run_baseline<Candidate>(
        exhaustive ? total : opts.samples, make,
        [&](const Candidate& c) { return assemble(c.choice, src, "composition", Provenance::Composition, c.reroutes); },
        h, rng, o, false, [](BaselineResult& r, const Candidate& c) {
            r.choice = c.choice;
            r.reroutes = c.reroutes;
        });
    res.exhaustive = exhaustive;
    res.spaceSize = total;
    return res;
}

} // namespace expforge
