#include "doctest.h"

#include <map>
#include <set>

#include "expforge/combinators.hpp"
#include "expforge/heuristic.hpp"
#include "test_support.hpp"

using namespace expforge;
using testsupport::stripped_edges;
using testsupport::Toy;

namespace {

std::size_t count_edges(const GameGraph& g) {
    std::size_t n = 0;
    for (const auto& [id, node] : g.nodes) n += node.edges.size();
    return n;
}

/// Stripped edges of a set of kb nodes, concatenated.
std::vector<std::string> source_edges(const Sources& src, const std::vector<NodeRef>& refs) {
    std::vector<Edge> all;
    for (const auto& r : refs)
        for (const auto& e : src.node(r).edges) all.push_back(e);
    return stripped_edges(all);
}

} // namespace

TEST_CASE("init weights are (1 - d) / (1 - dmin)") {
    const auto w = init_weights({{{"a", "x"}, 0.2}, {{"b", "y"}, 0.6}});
    REQUIRE(w.size() == 2);
    CHECK(w[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(w[1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(init_weights({}).empty());
}

TEST_CASE("initial expansion includes every edge of the closest term") {
    Toy toy;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed);
        const auto ce = expansion_from_init(*toy.src, rng);
        for (const auto& [id, node] : ce.nodes) {
            const auto& entries = toy.mapping.of(id);
            REQUIRE(node.terms.size() == entries.size());
            if (entries.empty()) continue;
            for (const auto& f : node.terms.front().filters) CHECK(f.include);
        }
    }
}

TEST_CASE("a scale of 2 doubles a velocity effect") {
    Toy toy;
    ConceptualExpansion ce;
    for (const auto& [id, p] : toy.src->proto().nodes) ce.nodes[id];
    const NodeRef hero{"toyA", "heroA"};
    Term t{hero, std::vector<EdgeFilter>(toy.src->node(hero).edges.size())};
    for (std::size_t i = 0; i < t.filters.size(); ++i)
        if (std::holds_alternative<RuleEffectEdge>(toy.src->node(hero).edges[i].kind)) t.filters[i].scale = 2.0;
    ce.nodes["pHero"].terms.push_back(t);
    const GameGraph g = realize(ce, *toy.src);
    bool seen = false;
    for (const auto& e : g.find("pHero")->edges)
        if (const auto* eff = std::get_if<RuleEffectEdge>(&e.kind))
            if (const auto* v = std::get_if<VelocityXFact>(&eff->post)) {
                CHECK(v->vx == 4);
                CHECK(std::get<VelocityXFact>(eff->pre).vx == 0);
                seen = true;
            }
    CHECK(seen);
}

TEST_CASE("realize is a pure function of the expansion") {
    Toy toy;
    Rng rng(11);
    auto ce = expansion_from_init(*toy.src, rng);
    for (int i = 0; i < 30; ++i) ce = get_neighbor(ce, *toy.src, rng);
    const auto kbBefore = toy.kb;
    const auto copy = ce;
    const GameGraph a = realize(ce, *toy.src);
    const GameGraph b = realize(ce, *toy.src);
    CHECK(a == b);
    CHECK(serialize(a) == serialize(b));
    CHECK(ce == copy);
    CHECK(toy.kb == kbBefore);
}

TEST_CASE("random neighbor walks always realize to valid graphs") {
    Toy toy;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        Rng rng(seed);
        auto ce = expansion_from_init(*toy.src, rng);
        for (int i = 0; i < 20; ++i) {
            ce = get_neighbor(ce, *toy.src, rng);
            GameGraph g;
            CHECK_NOTHROW(g = realize(ce, *toy.src));
            CHECK_NOTHROW(validate(g));
        }
    }
}

TEST_CASE("neighbor operators are drawn uniformly when all apply") {
    Toy toy;
    Rng init(5);
    auto ce = expansion_from_init(*toy.src, init);
    // free one mapped entry so AddTerm applies too
    ce.nodes.at("pHero").terms.pop_back();
    std::map<NeighborOp, int> counts;
    Rng rng(99);
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        NeighborOp op{};
        const auto next = get_neighbor(ce, *toy.src, rng, &op);
        ++counts[op];
        CHECK_FALSE(next == ce);
    }
    REQUIRE(counts.size() == kNeighborOps.size());
    for (const auto& [op, c] : counts) CHECK(std::abs(double(c) / n - 0.2) <= 0.02);
}

TEST_CASE("constant heuristic stops after exactly patience x neighbors evaluations") {
    Toy toy;
    Rng rng(3);
    SearchOptions so;
    so.threads = 1;
    int calls = 0;
    const auto res = ce_search(
        *toy.src, [&](const ConceptualExpansion&, const GameGraph&) { ++calls; return 0.5; }, rng, so);
    CHECK(res.steps == 10);
    CHECK(res.evaluations == 1 + 10 * 10);
    CHECK(calls == res.evaluations);
    CHECK(res.score == 0.5);
}

TEST_CASE("search never returns less than the initial score") {
    Toy toy;
    KnowledgeBase kb(toy.kb);
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng(seed);
        SearchOptions so;
        so.threads = 1;
        so.patience = 3;
        so.neighbors = 4;
        std::vector<double> seen;
        const auto res = ce_search(
            *toy.src,
            [&](const ConceptualExpansion&, const GameGraph& g) {
                const double v = novelty(g, kb) + 0.01 * double(count_edges(g) % 7);
                seen.push_back(v);
                return v;
            },
            rng, so);
        CHECK(res.score >= res.initialScore);
        CHECK(res.score == *std::max_element(seen.begin(), seen.end()));
        for (std::size_t i = 1; i < res.history.size(); ++i) CHECK(res.history[i] >= res.history[i - 1]);
    }
}

TEST_CASE("step budget bounds the search") {
    Toy toy;
    Rng rng(8);
    SearchOptions so;
    so.threads = 1;
    so.maxSteps = 4;
    int calls = 0;
    const auto res = ce_search(
        *toy.src, [&](const ConceptualExpansion&, const GameGraph&) { return double(++calls); }, rng, so);
    CHECK(res.steps == 4);
    CHECK(res.evaluations == 1 + 4 * 10);
}

TEST_CASE("amalgam candidates take one kb node per output node") {
    Toy toy;
    const Sources& src = *toy.src;
    std::uint64_t expected = 1;
    for (const auto& [id, p] : src.proto().nodes) expected *= std::max<std::size_t>(1, toy.mapping.of(id).size());
    REQUIRE(amalgam_space_size(src) == expected);
    std::set<NodeChoice> distinct;
    for (std::uint64_t i = 0; i < expected; ++i) {
        const NodeChoice c = amalgam_candidate(src, i);
        distinct.insert(c);
        const GameGraph g = assemble(c, src, "amalgam", Provenance::Amalgam);
        for (const auto& [id, refs] : c) {
            CHECK(refs.size() <= 1);
            // no mixed node: the output node carries exactly one source node's edges
            CHECK(stripped_edges(g.find(id)->edges) == source_edges(src, refs));
        }
    }
    CHECK(distinct.size() == expected);
}

TEST_CASE("blend index 0 is the full union and has at least as many edges as any amalgam") {
    Toy toy;
    const Sources& src = *toy.src;
    const NodeChoice full = blend_candidate(src, 0);
    for (const auto& [id, p] : src.proto().nodes) {
        std::vector<NodeRef> all;
        for (const auto& e : toy.mapping.of(id)) all.push_back(e.ref);
        auto got = full.count(id) ? full.at(id) : std::vector<NodeRef>{};
        std::sort(all.begin(), all.end());
        std::sort(got.begin(), got.end());
        CHECK(got == all);
    }
    const GameGraph blend = assemble(full, src, "blend", Provenance::Blend);
    for (const auto& [id, refs] : full) CHECK(stripped_edges(blend.find(id)->edges) == source_edges(src, refs));
    const std::size_t blendEdges = count_edges(blend);
    for (std::uint64_t i = 0; i < amalgam_space_size(src); ++i)
        CHECK(blendEdges >= count_edges(assemble(amalgam_candidate(src, i), src, "a", Provenance::Amalgam)));

    // every non-empty subset of each node's entries appears exactly once
    std::uint64_t expected = 1;
    for (const auto& [id, p] : src.proto().nodes) {
        const auto n = toy.mapping.of(id).size();
        expected *= n == 0 ? 1 : (std::uint64_t(1) << n) - 1;
    }
    REQUIRE(blend_space_size(src) == expected);
    std::set<NodeChoice> distinct;
    for (std::uint64_t i = 0; i < expected; ++i) distinct.insert(blend_candidate(src, i));
    CHECK(distinct.size() == expected);
}

TEST_CASE("composition rewires endpoints only") {
    Toy toy;
    const Sources& src = *toy.src;
    bool multiTarget = false;
    for (std::uint64_t b = 0; b < amalgam_space_size(src); ++b) {
        const NodeChoice base = amalgam_candidate(src, b);
        const GameGraph plain = assemble(base, src, "a", Provenance::Amalgam);
        const auto options = composition_options(base, src);
        // every combination of reroute targets for this base
        std::vector<std::size_t> pick(options.size(), 0);
        while (true) {
            Reroutes rr;
            for (std::size_t k = 0; k < options.size(); ++k) rr[options[k].key] = options[k].targets[pick[k]];
            const GameGraph g = assemble(base, src, "c", Provenance::Composition, rr);
            for (const auto& [id, refs] : base) {
                const auto& out = g.find(id)->edges;
                CHECK(stripped_edges(out) == stripped_edges(plain.find(id)->edges));
                // targets are the remapped target or an admissible reroute
                std::set<std::string> allowed;
                for (const auto& e : plain.find(id)->edges) allowed.insert(e.target);
                for (const auto& o : options)
                    if (std::get<0>(o.key) == id) allowed.insert(o.targets.begin(), o.targets.end());
                for (const auto& e : out) CHECK(allowed.count(e.target) == 1);
            }
            for (const auto& o : options) multiTarget = multiTarget || o.targets.size() > 1;
            std::size_t k = 0;
            while (k < options.size() && ++pick[k] == options[k].targets.size()) pick[k++] = 0;
            if (k == options.size()) break;
        }
    }
    CHECK(multiTarget);
}

TEST_CASE("amalgam and blend candidates are reproducible as conceptual expansions") {
    Toy toy;
    const Sources& src = *toy.src;
    for (std::uint64_t i = 0; i < amalgam_space_size(src); ++i) {
        const NodeChoice c = amalgam_candidate(src, i);
        CHECK(realize(expansion_of_choice(c, src), src, "x", Provenance::Amalgam) ==
              assemble(c, src, "x", Provenance::Amalgam));
    }
    for (std::uint64_t i = 0; i < blend_space_size(src); ++i) {
        const NodeChoice c = blend_candidate(src, i);
        CHECK(realize(expansion_of_choice(c, src), src, "x", Provenance::Blend) ==
              assemble(c, src, "x", Provenance::Blend));
    }
}

TEST_CASE("baseline searches are exhaustive under the cap and deterministic") {
    Toy toy;
    const Sources& src = *toy.src;
    KnowledgeBase kb(toy.kb);
    const GraphHeuristic h = [&](const GameGraph& g) { return novelty(g, kb); };
    BaselineOptions bo;
    bo.threads = 1;
    Rng r1(1), r2(1);
    const auto a = amalgam_search(src, h, r1, bo);
    const auto b = amalgam_search(src, h, r2, bo);
    CHECK(a.exhaustive);
    CHECK(a.evaluated == amalgam_space_size(src));
    CHECK(a.graph == b.graph);
    // the exhaustive winner is the brute-force maximum
    double best = -1.0;
    for (std::uint64_t i = 0; i < amalgam_space_size(src); ++i)
        best = std::max(best, h(assemble(amalgam_candidate(src, i), src, "x", Provenance::Amalgam)));
    CHECK(a.score == doctest::Approx(best).epsilon(1e-12));

    bo.exhaustiveCap = 10;
    bo.samples = 25;
    Rng r3(2);
    const auto s = blend_search(src, h, r3, bo);
    CHECK_FALSE(s.exhaustive);
    CHECK(s.evaluated == 25);

    Rng r4(4);
    bo.exhaustiveCap = 1000000;
    const auto c = composition_search(src, h, r4, bo);
    CHECK(c.exhaustive);
    CHECK(c.graph.provenance == Provenance::Composition);
}

TEST_CASE("parallel_for visits every index once and rethrows") {
    std::vector<int> hits(257, 0);
    parallel_for(hits.size(), 4, [&](std::size_t i) { ++hits[i]; });
    for (int h : hits) CHECK(h == 1);
    CHECK_THROWS(parallel_for(10, 2, [](std::size_t i) {
        if (i == 7) throw std::runtime_error("boom");
    }));
}
