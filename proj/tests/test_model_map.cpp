#include "doctest.h"

#include <cmath>
#include <map>
#include <set>

#include "expforge/learn.hpp"
#include "expforge/level_model.hpp"
#include "expforge/proto_map.hpp"
#include "test_support.hpp"

using namespace expforge;

namespace {

const LearnedGame& walker() {
    static const LearnedGame g = [] {
        Rng rng(1);
        return learn_game(load_trace(testsupport::fixture("walker.trace.json")),
                          load_spritesheet(testsupport::fixture("walker.sheet.json")), "walker",
                          kDefaultClusterThreshold, rng);
    }();
    return g;
}

std::vector<LevelChunk> walker_chunks() {
    const Trace t = load_trace(testsupport::fixture("walker.trace.json"));
    const auto groups = cluster_sprites(load_spritesheet(testsupport::fixture("walker.sheet.json")),
                                        kDefaultClusterThreshold);
    return chunks_from_trace(t, representatives(groups), {*t.player});
}

/// Cells of one sprite type on its tile grid, flood-filled through edge neighbours.
int oracle_components(const std::vector<SpritePlacement>& ps) {
    std::set<std::pair<int, int>> cells;
    for (const auto& p : ps) cells.insert({p.x / p.w, p.y / p.h});
    int n = 0;
    std::set<std::pair<int, int>> seen;
    for (const auto& c : cells) {
        if (seen.count(c)) continue;
        ++n;
        std::vector<std::pair<int, int>> stack{c};
        seen.insert(c);
        while (!stack.empty()) {
            const auto [x, y] = stack.back();
            stack.pop_back();
            for (auto [dx, dy] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
                const std::pair<int, int> nb{x + dx, y + dy};
                if (cells.count(nb) && seen.insert(nb).second) stack.push_back(nb);
            }
        }
    }
    return n;
}

LevelChunk random_grid_chunk(Rng& rng) {
    LevelChunk c;
    c.width = 160;
    c.height = 128;
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 10; ++x) {
            if (!rng.bernoulli(0.35)) continue;
            c.placements.push_back({rng.bernoulli(0.5) ? "a" : "b", x * 16, y * 16, 16, 16});
        }
    std::sort(c.placements.begin(), c.placements.end());
    return c;
}

GameGraphNode chunk_node(const std::string& id, double pos, int repeats, const std::vector<std::string>& to) {
    GameGraphNode n;
    n.id = id;
    n.role = NodeRole::ChunkCategory;
    n.edges.push_back({LevelChunkTypeEdge{id}, id});
    n.edges.push_back({LevelChunkRepeatsEdge{repeats, repeats}, id});
    n.edges.push_back({LevelChunkPositionEdge{pos}, id});
    for (const auto& t : to) n.edges.push_back({LevelChunkTransitionEdge{1.0 / double(to.size())}, t});
    return n;
}

} // namespace

TEST_CASE("observations match a flood-fill oracle and cover every placement") {
    Rng rng(3);
    std::vector<LevelChunk> chunks;
    for (int i = 0; i < 25; ++i) chunks.push_back(random_grid_chunk(rng));
    const Observations obs = extract_observations(chunks);
    for (std::size_t ci = 0; ci < chunks.size(); ++ci) {
        CAPTURE(ci);
        std::map<std::string, std::vector<SpritePlacement>> byType;
        for (const auto& p : chunks[ci].placements) byType[p.spriteId].push_back(p);
        int gCount = 0;
        std::vector<SpritePlacement> rebuilt;
        for (const auto& g : obs.g)
            if (g.chunk == int(ci)) {
                ++gCount;
                for (auto p : expand_shape({g.type, "", g.x, g.y, g.shape}, 16, 16)) rebuilt.push_back(p);
            }
        int expected = 0;
        for (const auto& [type, ps] : byType) expected += oracle_components(ps);
        CHECK(gCount == expected);
        std::sort(rebuilt.begin(), rebuilt.end());
        CHECK(rebuilt == chunks[ci].placements);
        int dCount = 0;
        for (const auto& d : obs.d) dCount += d.chunk == int(ci);
        CHECK(dCount == gCount * (gCount - 1));
        for (const auto& n : obs.n)
            if (n.chunk == int(ci)) CHECK(n.count == int(byType.at(n.type).size()));
    }
    for (const auto& d : obs.d) {
        CHECK(d.dx == obs.g[d.to].x - obs.g[d.from].x);
        CHECK(d.dy == obs.g[d.to].y - obs.g[d.from].y);
    }
}

TEST_CASE("offset buckets floor toward negative infinity") {
    for (int d = -100; d <= 100; ++d) CHECK(offset_bucket(d) == int(std::floor(d / double(kOffsetBucket))));
}

TEST_CASE("sequence statistics on a hand example") {
    const auto st = sequence_stats({"A", "A", "B", "A", "C", "C"});
    CHECK(st.transitions.at("A").at("B") == 0.5);
    CHECK(st.transitions.at("A").at("C") == 0.5);
    CHECK(st.transitions.at("B").at("A") == 1.0);
    CHECK(st.transitions.count("C") == 0);
    CHECK(st.repeats.at("A") == std::pair{1, 2});
    CHECK(st.repeats.at("B") == std::pair{1, 1});
    CHECK(st.repeats.at("C") == std::pair{2, 2});
    CHECK(st.avgNormPos.at("A") == doctest::Approx((0.0 + 1 + 3) / 18));
    CHECK(st.avgNormPos.at("B") == doctest::Approx(2.0 / 6));
    CHECK(st.avgNormPos.at("C") == doctest::Approx((4.0 + 5) / 12));
}

TEST_CASE("a learned level model partitions the chunks and normalizes its tables") {
    const auto chunks = walker_chunks();
    std::vector<int> order(chunks.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = int(i);
    Rng rng(1);
    const LevelDesignModel m = learn_model(chunks, order, rng);
    CHECK(m.sequence.size() == chunks.size());
    std::vector<int> seen;
    for (const auto& l : m.lNodes) {
        CAPTURE(l.id);
        seen.insert(seen.end(), l.chunks.begin(), l.chunks.end());
        for (int c : l.chunks) CHECK(m.sequence[c] == l.id);
        for (const auto& [type, counts] : l.nValues) CHECK(counts.size() == l.chunks.size());

        std::map<std::tuple<std::string, int, int>, double> mass;
        for (const auto& e : l.table) {
            CHECK(e.probability > 0.0);
            mass[{e.fromS, e.dx, e.dy}] += e.probability;
        }
        for (const auto& [k, p] : mass) CHECK(p == doctest::Approx(1.0));

        // one styled shape per G observation of the member chunks
        std::vector<LevelChunk> members;
        for (int c : l.chunks) members.push_back(chunks[c]);
        CHECK(l.shapes.size() == extract_observations(members).g.size());
    }
    std::sort(seen.begin(), seen.end());
    CHECK(seen == order);

    const auto st = sequence_stats(m.sequence);
    for (const auto& l : m.lNodes) {
        CHECK(std::pair{l.repeatsMin, l.repeatsMax} == st.repeats.at(l.id));
        CHECK(l.avgNormPos == doctest::Approx(st.avgNormPos.at(l.id)));
        if (st.transitions.count(l.id)) CHECK(l.transitions == st.transitions.at(l.id));
        else CHECK(l.transitions.empty());
    }
    CHECK_THROWS(learn_model({}, {}, rng));
}

TEST_CASE("sampled chunks stay inside the chunk and never overlap") {
    const LevelDesignModel m = walker().model;
    Rng rng(4);
    int complete = 0, total = 0;
    for (const auto& l : m.lNodes)
        for (int i = 0; i < 20; ++i) {
            const SampledChunk s = sample_chunk(m, l.id, rng);
            ++total;
            const auto& ps = s.chunk.placements;
            std::map<std::string, int> counts;
            for (std::size_t a = 0; a < ps.size(); ++a) {
                ++counts[ps[a].spriteId];
                CHECK(ps[a].x >= 0);
                CHECK(ps[a].y >= 0);
                CHECK(ps[a].x + ps[a].w <= m.chunkWidth);
                CHECK(ps[a].y + ps[a].h <= m.chunkHeight);
                for (std::size_t b = a + 1; b < ps.size(); ++b) {
                    const bool overlap = ps[a].x < ps[b].x + ps[b].w && ps[b].x < ps[a].x + ps[a].w &&
                                         ps[a].y < ps[b].y + ps[b].h && ps[b].y < ps[a].y + ps[a].h;
                    CHECK_FALSE(overlap);
                }
            }
            for (const auto& [type, n] : counts) CHECK(n <= s.targets.at(type));
            if (s.complete) {
                ++complete;
                for (const auto& [type, n] : s.targets) CHECK(counts[type] == n);
            }
        }
    MESSAGE(complete << " of " << total << " samples met every count");
    CHECK(complete > 0);
    CHECK_THROWS_AS(sample_chunk(m, "nope", rng), std::invalid_argument);
}

TEST_CASE("graph construction yields one edge per model and rule element") {
    const LearnedGame& lg = walker();
    const GameGraph& g = lg.graph;
    validate(g);
    std::map<std::size_t, std::size_t> kinds;
    for (const auto& [id, n] : g.nodes)
        for (const auto& e : n.edges) ++kinds[e.kind.index()];
    auto count = [&]<typename T>() { return kinds[EdgeKind(T{}).index()]; };

    std::size_t shapes = 0, table = 0, nvals = 0, transitions = 0, conditions = 0;
    for (const auto& l : lg.model.lNodes) {
        shapes += l.shapes.size();
        table += l.table.size();
        for (const auto& [t, v] : l.nValues) nvals += v.size();
        transitions += l.transitions.size();
    }
    for (const auto& r : lg.rules.rules) conditions += r.conditions.size() + (r.requiresInput ? 1 : 0);
    CHECK(count.operator()<GShapeEdge>() == shapes);
    CHECK(count.operator()<DRelationEdge>() == table);
    CHECK(count.operator()<NCountEdge>() == nvals);
    CHECK(count.operator()<RuleConditionEdge>() == conditions);
    CHECK(count.operator()<RuleEffectEdge>() == lg.rules.rules.size());
    CHECK(count.operator()<LevelChunkTypeEdge>() == lg.model.lNodes.size());
    CHECK(count.operator()<LevelChunkRepeatsEdge>() == lg.model.lNodes.size());
    CHECK(count.operator()<LevelChunkPositionEdge>() == lg.model.lNodes.size());
    CHECK(count.operator()<LevelChunkTransitionEdge>() == transitions);
    CHECK(g.nodes.size() == lg.groups.size() + 2 + lg.model.lNodes.size());
    REQUIRE(g.player() != nullptr);

    // the graph carries the rules: rebuilt rules replay the trace as well
    const Ruleset rebuilt = rules_from_graph(g);
    CHECK(rebuilt.size() == lg.rules.rules.size());
    const Trace t = load_trace(testsupport::fixture("walker.trace.json"));
    const auto worlds = track_trace(canonicalize_trace(t, representatives(lg.groups)));
    int err = 0;
    for (int e : replay_errors(rebuilt, worlds)) err += e;
    CHECK(err == 0);

    // and the committed fixture graph is this one
    CHECK(graph_to_json(g) == graph_to_json(load_graph(testsupport::fixture("graphs/walker.graph.json"))));
}

TEST_CASE("mapping entries are closer than 1 and cover every proto node") {
    const auto games = testsupport::learned_games();
    const auto proto = build_proto_graph(load_spritesheet(testsupport::fixture("proto.sheet.json")), "knight_1",
                                         kDefaultClusterThreshold);
    Rng rng(3);
    const Mapping m = build_mapping(games, proto, rng);
    for (const auto& [id, n] : m.proto.nodes) {
        CAPTURE(id);
        CHECK_FALSE(m.of(id).empty());
    }
    std::set<NodeRef> refs;
    for (const auto& [pid, entries] : m.entries) {
        for (const auto& e : entries) {
            CAPTURE(pid);
            CAPTURE(e.ref.nodeId);
            CHECK(e.distance >= 0.0);
            CHECK(e.distance < 1.0);
            CHECK(m.assignment.count(e.ref));
            refs.insert(e.ref);
            const GameGraph* owner = nullptr;
            for (const auto& g : games)
                if (g.id == e.ref.graphId) owner = &g;
            REQUIRE(owner);
            const GameGraphNode* kn = owner->find(e.ref.nodeId);
            REQUIRE(kn);
            const GameGraphNode* pn = m.proto.find(pid);
            CHECK(pn->role == kn->role);
            if (kn->role == NodeRole::Sprite) CHECK(pn->isPlayer == kn->isPlayer);
        }
        CHECK(std::is_sorted(entries.begin(), entries.end(), [](const MappingEntry& a, const MappingEntry& b) {
            return std::tie(a.distance, a.ref) < std::tie(b.distance, b.ref);
        }));
    }
    // every kb chunk category lands in exactly one proto chunk node
    for (const auto& g : games)
        for (const auto& [id, n] : g.nodes)
            if (n.role == NodeRole::ChunkCategory) CHECK(m.assignment.at({g.id, id}).rfind("L:", 0) == 0);

    // serialization keeps entries and assignment
    const Mapping back = mapping_from_json(mapping_to_json(m), m.proto);
    CHECK(back.entries == m.entries);
    CHECK(mapping_to_json(back) == mapping_to_json(m));
}

TEST_CASE("fifteen chunk categories in five groups consolidate into five proto chunk nodes") {
    const std::vector<std::pair<double, int>> groups = {{0.0, 1}, {0.2, 4}, {0.45, 2}, {0.7, 6}, {0.95, 3}};
    std::vector<GameGraph> kb;
    for (int gi = 0; gi < 3; ++gi) {
        GameGraph g;
        g.id = "g" + std::to_string(gi);
        g.chunkWidth = 160;
        g.chunkHeight = 128;
        for (auto [id, role] : {std::pair{"Camera", NodeRole::Camera}, std::pair{"None", NodeRole::None}}) {
            GameGraphNode n;
            n.id = id;
            n.role = role;
            g.nodes.emplace(id, n);
        }
        GameGraphNode hero;
        hero.id = "hero";
        hero.spriteIds = {"hero"};
        hero.isPlayer = true;
        g.nodes.emplace("hero", hero);
        for (int c = 0; c < 5; ++c) {
            const std::string id = "L" + std::to_string(c);
            std::vector<std::string> to;
            if (c + 1 < 5) to.push_back("L" + std::to_string(c + 1));
            if (c == 1 || c == 3) to.push_back("L0");
            g.nodes.emplace(id, chunk_node(id, groups[c].first + 0.01 * gi, groups[c].second, to));
        }
        kb.push_back(std::move(g));
    }
    GameGraph proto;
    proto.id = "proto";
    proto.provenance = Provenance::Proto;
    for (auto [id, role] : {std::pair{"Camera", NodeRole::Camera}, std::pair{"None", NodeRole::None}}) {
        GameGraphNode n;
        n.id = id;
        n.role = role;
        proto.nodes.emplace(id, n);
    }
    GameGraphNode p;
    p.id = "p";
    p.spriteIds = {"p"};
    p.isPlayer = true;
    proto.nodes.emplace("p", p);

    Rng rng(9);
    const Mapping m = build_mapping(kb, proto, rng);
    std::set<std::string> chunkNodes;
    for (const auto& [id, n] : m.proto.nodes)
        if (n.role == NodeRole::ChunkCategory) chunkNodes.insert(id);
    CHECK(chunkNodes.size() == 5);
    // the three copies of each category share a proto node, distinct categories do not
    for (int c = 0; c < 5; ++c) {
        const std::string id = "L" + std::to_string(c);
        const std::string target = m.assignment.at({"g0", id});
        CHECK(m.assignment.at({"g1", id}) == target);
        CHECK(m.assignment.at({"g2", id}) == target);
        CHECK(m.of(target).size() == 3);
    }
    // consolidated transitions stay normalized
    for (const auto& id : chunkNodes) {
        double total = 0;
        for (const auto& e : m.proto.find(id)->edges)
            if (const auto* t = std::get_if<LevelChunkTransitionEdge>(&e.kind)) total += t->probability;
        if (total > 0) CHECK(total == doctest::Approx(1.0));
    }
}

TEST_CASE("mapping files naming unknown proto nodes are rejected") {
    const auto proto = load_graph(testsupport::fixture("toy/proto.graph.json"));
    nlohmann::json j = {{"ghost", nlohmann::json::array({{{"graph", "toyA"}, {"node", "heroA"}, {"distance", 0.0}}})}};
    CHECK_THROWS_AS(mapping_from_json(j, proto), std::invalid_argument);
}
