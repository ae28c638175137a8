#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "expforge/chamfer.hpp"
#include "expforge/game_graph.hpp"
#include "expforge/simulate.hpp"

namespace expforge {

/// Sorted non-increasing, sums to 1 (or empty).
using MagnitudeVector = std::vector<double>;

/// Original games plus every graph generated so far.
class KnowledgeBase {
public:
    /// Reference magnitude vectors are computed here, one per original against
    /// the remaining originals.
    explicit KnowledgeBase(std::vector<GameGraph> originals);

    const std::vector<GameGraph>& originals() const { return originals_; }
    const std::vector<GameGraph>& generated() const { return generated_; }
    const std::vector<MagnitudeVector>& references() const { return references_; }
    void add_generated(GameGraph g);
    /// Originals then generated, in insertion order.
    std::vector<const GameGraph*> members() const;
    ChamferCache& cache() const { return *cache_; }

private:
    std::vector<GameGraph> originals_;
    std::vector<GameGraph> generated_;
    std::vector<MagnitudeVector> references_;
    std::shared_ptr<ChamferCache> cache_;
};

/// min over kb members m of graph_chamfer(g -> m).
double novelty(const GameGraph& g, const KnowledgeBase& kb);

/// Each node of src counts once for its closest node (same role) across all
/// targets; counts sorted descending and normalized.
MagnitudeVector mapping_magnitude_vector(const GameGraph& src, const std::vector<const GameGraph*>& targets,
                                         ChamferCache* cache = nullptr);

/// Truncate the longer vector, renormalize both, half the L1 distance.
double surprise_between(const MagnitudeVector& a, const MagnitudeVector& b);

/// Candidate vector against kb members (members equal to g are skipped), min
/// distance to the reference vectors.
double surprise(const GameGraph& g, const KnowledgeBase& kb);

inline constexpr int kValueChunks = 5;

/// max over references of 1 - mean_i |s_i - r_i| / max(range, 1), clamped.
double value_from_stats(const StatVector& stats, const ReferenceDistribution& refs);

/// Stats of kValueChunks sampled chunks of g.
StatVector value_stats(const GameGraph& g, Rng& rng, const AStarOptions& opts = {});
double value(const GameGraph& g, const ReferenceDistribution& refs, Rng& rng, const AStarOptions& opts = {});

ReferenceDistribution build_references(const KnowledgeBase& kb, Rng& rng, const AStarOptions& opts = {});

struct HeuristicScore {
    double novelty = 0.0;
    double surprise = 0.0;
    double value = 0.0;
    double total = 0.0;
    std::uint64_t seed = 0;
};

/// Value draws its chunks from Rng(valueSeed) so a candidate scores the same
/// wherever it is evaluated.
HeuristicScore heuristic_total(const GameGraph& g, const KnowledgeBase& kb, const ReferenceDistribution& refs,
                               std::uint64_t valueSeed, const AStarOptions& opts = {});

nlohmann::json score_to_json(const HeuristicScore& s);

} // namespace expforge
