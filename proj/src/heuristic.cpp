#include "expforge/heuristic.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>

namespace expforge {

namespace {

/// Graph content without its id and provenance.
bool same_content(const GameGraph& a, const GameGraph& b) {
    return a.nodes == b.nodes && a.chunkWidth == b.chunkWidth && a.chunkHeight == b.chunkHeight;
}

} // namespace

KnowledgeBase::KnowledgeBase(std::vector<GameGraph> originals)
    : originals_(std::move(originals)), cache_(std::make_shared<ChamferCache>()) {
    if (originals_.empty()) throw std::invalid_argument("knowledge base needs at least one original game");
    for (std::size_t i = 0; i < originals_.size(); ++i) {
        std::vector<const GameGraph*> others;
        for (std::size_t j = 0; j < originals_.size(); ++j)
            if (j != i) others.push_back(&originals_[j]);
        references_.push_back(others.empty() ? MagnitudeVector{}
                                             : mapping_magnitude_vector(originals_[i], others, cache_.get()));
    }
}

void KnowledgeBase::add_generated(GameGraph g) { generated_.push_back(std::move(g)); }

std::vector<const GameGraph*> KnowledgeBase::members() const {
    std::vector<const GameGraph*> out;
    for (const auto& g : originals_) out.push_back(&g);
    for (const auto& g : generated_) out.push_back(&g);
    return out;
}

double novelty(const GameGraph& g, const KnowledgeBase& kb) {
    double best = 1.0;
    for (const GameGraph* m : kb.members()) best = std::min(best, kb.cache().graph(g, *m));
    return std::clamp(best, 0.0, 1.0);
}

MagnitudeVector mapping_magnitude_vector(const GameGraph& src, const std::vector<const GameGraph*>& targets,
                                         ChamferCache* cache) {
    std::map<std::pair<std::size_t, std::string>, int> counts;
    for (const auto& [id, n] : src.nodes) {
        std::optional<std::pair<std::size_t, std::string>> best;
        double bestD = 2.0;
        for (std::size_t t = 0; t < targets.size(); ++t)
            for (const auto& [tid, m] : targets[t]->nodes) {
                if (m.role != n.role) continue;
                const double d = cache ? cache->node(n, m) : node_chamfer(n, m);
                if (d < bestD) {
                    bestD = d;
                    best = {t, tid};
                }
            }
        if (best) ++counts[*best];
    }
    MagnitudeVector v;
    double total = 0.0;
    for (const auto& [k, c] : counts) {
        v.push_back(c);
        total += c;
    }
    std::sort(v.begin(), v.end(), std::greater<>());
    for (double& x : v) x /= total;
    return v;
}

double surprise_between(const MagnitudeVector& a, const MagnitudeVector& b) {
    const std::size_t n = std::min(a.size(), b.size());
    if (n == 0) return a.size() == b.size() ? 0.0 : 1.0;
    double sa = 0.0, sb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sa += a[i];
        sb += b[i];
    }
    if (sa <= 0.0 || sb <= 0.0) return sa == sb ? 0.0 : 1.0;
    double l1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) l1 += std::abs(a[i] / sa - b[i] / sb);
    return std::clamp(l1 / 2.0, 0.0, 1.0);
}

double surprise(const GameGraph& g, const KnowledgeBase& kb) {
    std::vector<const GameGraph*> targets;
    for (const GameGraph* m : kb.members())
        if (!same_content(*m, g)) targets.push_back(m);
    if (targets.empty() || kb.references().empty()) return 0.0;
    const MagnitudeVector v = mapping_magnitude_vector(g, targets, &kb.cache());
    double best = 1.0;
    for (const auto& ref : kb.references()) best = std::min(best, surprise_between(v, ref));
    return best;
}

double value_from_stats(const StatVector& stats, const ReferenceDistribution& refs) {
    double best = 0.0;
    for (const auto& ref : refs) {
        const StatVector r = ref.stats();
        double total = 0.0;
        for (std::size_t i = 0; i < r.size(); ++i)
            total += std::abs(stats[i] - r[i]) / std::max(ref.metrics[i / 3].range(), 1.0);
        best = std::max(best, std::clamp(1.0 - total / static_cast<double>(r.size()), 0.0, 1.0));
    }
    return best;
}

StatVector value_stats(const GameGraph& g, Rng& rng, const AStarOptions& opts) {
    const LevelDesignModel model = level_model_from_graph(g);
    const auto agent = agent_for(g);
    std::vector<ChallengeStats> stats;
    for (int i = 0; i < kValueChunks; ++i) stats.push_back(sample_chunk_stats(model, agent, rng, opts));
    return stat_vector(stats);
}

double value(const GameGraph& g, const ReferenceDistribution& refs, Rng& rng, const AStarOptions& opts) {
    return value_from_stats(value_stats(g, rng, opts), refs);
}

ReferenceDistribution build_references(const KnowledgeBase& kb, Rng& rng, const AStarOptions& opts) {
    ReferenceDistribution out;
    for (const auto& o : kb.originals()) {
        Rng sub = rng.substream(o.id);
        out.push_back(build_reference(o, sub, kReferenceSamples, opts));
    }
    return out;
}

HeuristicScore heuristic_total(const GameGraph& g, const KnowledgeBase& kb, const ReferenceDistribution& refs,
                               std::uint64_t valueSeed, const AStarOptions& opts) {
    HeuristicScore s;
    s.seed = valueSeed;
    s.novelty = novelty(g, kb);
    s.surprise = surprise(g, kb);
    Rng rng(valueSeed);
    s.value = value(g, refs, rng, opts);
    s.total = s.novelty + s.surprise + s.value;
    return s;
}

nlohmann::json score_to_json(const HeuristicScore& s) {
    return {{"novelty", s.novelty}, {"surprise", s.surprise}, {"value", s.value}, {"total", s.total}, {"seed", s.seed}};
}

} // namespace expforge
