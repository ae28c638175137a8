#include "doctest.h"

#include <cmath>
#include <map>

#include "expforge/heuristic.hpp"
#include "expforge/learn.hpp"
#include "test_support.hpp"

using namespace expforge;

namespace {

/// Independent statement of the surprise distance: truncate to the shorter
/// vector, renormalize both, half the L1 distance.
double oracle_surprise(std::vector<double> a, std::vector<double> b) {
    const std::size_t n = std::min(a.size(), b.size());
    a.resize(n);
    b.resize(n);
    double sa = 0, sb = 0;
    for (std::size_t i = 0; i < n; ++i) sa += a[i], sb += b[i];
    double d = 0;
    for (std::size_t i = 0; i < n; ++i) d += std::fabs(a[i] / sa - b[i] / sb);
    return d / 2;
}

GameGraphNode sprite(const std::string& id, std::vector<EdgeKind> kinds) {
    GameGraphNode n;
    n.id = id;
    n.spriteIds = {id};
    for (auto& k : kinds) n.edges.push_back({std::move(k), id});
    return n;
}

GameGraph graph_of(const std::string& id, std::vector<GameGraphNode> nodes) {
    GameGraph g;
    g.id = id;
    g.provenance = Provenance::Expanded;
    for (auto& n : nodes) g.nodes.emplace(n.id, std::move(n));
    return g;
}

GShapeEdge shape(int x) { return GShapeEdge{x, 0, {{1}}, "S", "L"}; }

GameReference reference(std::array<std::vector<double>, 3> samples) {
    GameReference r;
    for (int i = 0; i < 3; ++i) r.metrics[i] = summarize(samples[i]);
    return r;
}

/// 1 - mean |s - r| / max(range, 1), best over references.
double oracle_value(const StatVector& s, const ReferenceDistribution& refs) {
    double best = 0;
    for (const auto& ref : refs) {
        const StatVector r = ref.stats();
        double sum = 0;
        for (int i = 0; i < 9; ++i) sum += std::fabs(s[i] - r[i]) / std::max(1.0, ref.metrics[i / 3].range());
        best = std::max(best, std::clamp(1 - sum / 9, 0.0, 1.0));
    }
    return best;
}

struct Fixture {
    std::vector<GameGraph> games = testsupport::learned_games();
    Mapping mapping;
    std::unique_ptr<Sources> src;
    Fixture() {
        Rng rng(3);
        const auto proto = build_proto_graph(load_spritesheet(testsupport::fixture("proto.sheet.json")), "knight_1",
                                             kDefaultClusterThreshold);
        mapping = build_mapping(games, proto, rng);
        src = std::make_unique<Sources>(games, mapping);
    }
    GameGraph random_expansion(std::uint64_t seed, int steps) const {
        Rng rng(seed);
        auto ce = expansion_from_init(*src, rng);
        for (int i = 0; i < steps; ++i) ce = get_neighbor(ce, *src, rng);
        return realize(ce, *src);
    }
};

} // namespace

TEST_CASE("surprise distance arithmetic") {
    CHECK(surprise_between({0.6, 0.4}, {0.5, 0.3, 0.2}) == doctest::Approx(0.025).epsilon(1e-9));
    CHECK(surprise_between({0.6, 0.4}, {0.5, 0.3, 0.2}) == doctest::Approx(oracle_surprise({0.6, 0.4}, {0.5, 0.3, 0.2})));
    CHECK(surprise_between({0.5, 0.3, 0.2}, {0.5, 0.3, 0.2}) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(surprise_between({1.0, 0.0}, {0.0, 1.0}) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(surprise_between({0.6, 0.4}, {0.5, 0.3, 0.2}) == surprise_between({0.5, 0.3, 0.2}, {0.6, 0.4}));
}

TEST_CASE("surprise distance stays in [0, 1] and matches the oracle on random vectors") {
    Rng rng(17);
    for (int t = 0; t < 2000; ++t) {
        auto draw = [&] {
            std::vector<double> v(1 + rng.below(6));
            double s = 0;
            for (double& x : v) s += (x = rng.uniform() + 1e-3);
            for (double& x : v) x /= s;
            std::sort(v.begin(), v.end(), std::greater<>());
            return v;
        };
        const auto a = draw(), b = draw();
        const double d = surprise_between(a, b);
        CHECK(d >= 0.0);
        CHECK(d <= 1.0);
        CHECK(d == doctest::Approx(oracle_surprise(a, b)).epsilon(1e-12));
    }
}

TEST_CASE("mapping magnitude vector counts nearest same-role nodes") {
    // a1, a2 match t1 exactly, a3 matches t2; the chunk node has no same-role target
    GameGraphNode chunk;
    chunk.id = "L0";
    chunk.role = NodeRole::ChunkCategory;
    GameGraph src = graph_of("src", {sprite("a1", {shape(4)}), sprite("a2", {shape(4)}), sprite("a3", {NCountEdge{3, "L"}}),
                                     chunk});
    GameGraph t = graph_of("t", {sprite("t1", {shape(4)}), sprite("t2", {NCountEdge{3, "L"}})});
    const auto v = mapping_magnitude_vector(src, {&t});
    REQUIRE(v.size() == 2);
    CHECK(v[0] == doctest::Approx(2.0 / 3));
    CHECK(v[1] == doctest::Approx(1.0 / 3));

    // spread over two target graphs: every node finds a distinct counterpart
    GameGraph u = graph_of("u", {sprite("u1", {shape(4)})});
    GameGraph w = graph_of("w", {sprite("w1", {NCountEdge{3, "L"}}), sprite("w2", {shape(100)})});
    const auto v2 = mapping_magnitude_vector(graph_of("s2", {sprite("b1", {shape(4)}), sprite("b2", {NCountEdge{3, "L"}}),
                                                             sprite("b3", {shape(100)})}),
                                             {&u, &w});
    REQUIRE(v2.size() == 3);
    for (double x : v2) CHECK(x == doctest::Approx(1.0 / 3));
}

TEST_CASE("value of an exact statistics match is 1 and a half-range miss is 0.5") {
    const GameReference r = reference({std::vector<double>{0, 1}, {0, 1}, {0, 1}});
    CHECK(value_from_stats(r.stats(), {r}) == doctest::Approx(1.0).epsilon(1e-12));

    StatVector off = r.stats();
    for (double& x : off) x += 0.5;
    CHECK(value_from_stats(off, {r}) == doctest::Approx(0.5).epsilon(1e-12));

    // ranges above 1 normalize the difference
    const GameReference wide = reference({std::vector<double>{0, 1}, {0, 10}, {0, 4}});
    StatVector s = wide.stats();
    s[3] += 5;
    s[7] -= 2;
    CHECK(value_from_stats(s, {wide}) == doctest::Approx(1.0 - (0.5 + 0.5) / 9).epsilon(1e-12));

    // best reference wins
    CHECK(value_from_stats(off, {r, wide}) == doctest::Approx(oracle_value(off, {r, wide})).epsilon(1e-12));
    CHECK(value_from_stats(off, {}) == 0.0);
}

TEST_CASE("value matches the oracle on random statistics") {
    Rng rng(4);
    for (int t = 0; t < 500; ++t) {
        ReferenceDistribution refs;
        for (int k = 0; k < 3; ++k) {
            std::array<std::vector<double>, 3> samples;
            for (auto& s : samples)
                for (int i = 0; i < 7; ++i) s.push_back(rng.uniform(0, 1 + 20 * rng.uniform()));
            refs.push_back(reference(samples));
        }
        StatVector s;
        for (double& x : s) x = rng.uniform(0, 15);
        const double v = value_from_stats(s, refs);
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
        CHECK(v == doctest::Approx(oracle_value(s, refs)).epsilon(1e-12));
    }
}

TEST_CASE("originals score zero novelty against themselves") {
    const auto games = testsupport::learned_games();
    KnowledgeBase kb(games);
    for (const auto& g : games) {
        CHECK(novelty(g, kb) == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(surprise(g, kb) >= 0.0);
    }
    REQUIRE(kb.references().size() == games.size());
    for (const auto& ref : kb.references()) {
        double sum = 0;
        for (double x : ref) sum += x;
        CHECK(sum == doctest::Approx(1.0));
        CHECK(std::is_sorted(ref.begin(), ref.end(), std::greater<>()));
    }
}

TEST_CASE("value ignores knowledge-base growth; novelty and surprise do not") {
    Fixture fx;
    const GameGraph cand = fx.random_expansion(21, 6);
    KnowledgeBase kb(fx.games);
    Rng r1(5);
    const auto refs = build_references(kb, r1);
    const HeuristicScore before = heuristic_total(cand, kb, refs, 77);

    KnowledgeBase grown(fx.games);
    // a node holding every sprite edge of the candidate: all candidate sprite
    // nodes map onto it, concentrating the magnitude vector
    GameGraph hub;
    hub.id = "hub";
    hub.provenance = Provenance::Expanded;
    GameGraphNode& h = hub.nodes["hub"];
    h.id = "hub";
    for (const auto& [id, n] : cand.nodes)
        if (n.role == NodeRole::Sprite) h.edges.insert(h.edges.end(), n.edges.begin(), n.edges.end());
    grown.add_generated(hub);
    for (std::uint64_t s : {31, 32, 33}) grown.add_generated(fx.random_expansion(s, 3));
    Rng r2(5);
    const auto refs2 = build_references(grown, r2);
    const HeuristicScore after = heuristic_total(cand, grown, refs2, 77);

    CHECK(after.value == before.value);
    for (std::size_t i = 0; i < refs.size(); ++i) CHECK(refs[i].stats() == refs2[i].stats());
    MESSAGE("novelty " << before.novelty << " -> " << after.novelty << ", surprise " << before.surprise << " -> "
                       << after.surprise);
    CHECK(after.novelty < before.novelty);
    CHECK(std::fabs(after.surprise - before.surprise) > 0.05);
}

TEST_CASE("heuristic components stay in bounds over random expansions") {
    Fixture fx;
    KnowledgeBase kb(fx.games);
    Rng r(9);
    const auto refs = build_references(kb, r);
    for (std::uint64_t seed = 0; seed < 60; ++seed) {
        const GameGraph g = fx.random_expansion(seed, int(seed % 12));
        const HeuristicScore s = heuristic_total(g, kb, refs, seed);
        CAPTURE(seed);
        for (double c : {s.novelty, s.surprise, s.value}) {
            CHECK(c >= 0.0);
            CHECK(c <= 1.0);
        }
        CHECK(s.total == doctest::Approx(s.novelty + s.surprise + s.value));
        CHECK(s.total <= 3.0);
    }
}

TEST_CASE("heuristic scores are reproducible for a fixed value seed") {
    Fixture fx;
    KnowledgeBase kb(fx.games);
    Rng r(9);
    const auto refs = build_references(kb, r);
    const GameGraph g = fx.random_expansion(4, 5);
    const auto a = heuristic_total(g, kb, refs, 123);
    const auto b = heuristic_total(g, kb, refs, 123);
    CHECK(a.novelty == b.novelty);
    CHECK(a.surprise == b.surprise);
    CHECK(a.value == b.value);
    CHECK(score_to_json(a) == score_to_json(b));
}
