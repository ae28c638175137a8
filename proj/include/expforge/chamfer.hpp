#pragma once

#include <cstdint>
#include <mutex>
#include <unordered_map>

#include "expforge/game_graph.hpp"

namespace expforge {

/// |u - v| / max(|u|, |v|, 1)
double numeric_dist(double u, double v);
/// 1 - overlap/union of occupied cells, both matrices aligned at the top-left.
double shape_dist(const Shape& a, const Shape& b);
/// 1 if tags differ, else the mean over the payload's numeric and enum fields.
/// Sprite ids are graph-local names and are not compared.
double fact_dist(const Fact& a, const Fact& b);

/// Distance between two edges of the same variant (1 otherwise). Identifier
/// fields (rule, style, chunk ids) and targets are ignored.
double edge_dist(const Edge& a, const Edge& b);

/// Asymmetric: mean over a's edges of the closest same-variant edge of b.
double node_chamfer(const GameGraphNode& a, const GameGraphNode& b);

double graph_chamfer(const GameGraph& a, const GameGraph& b);

/// Memoizes node_chamfer by node fingerprints. Safe to share between threads.
class ChamferCache {
public:
    double node(const GameGraphNode& a, const GameGraphNode& b);
    double graph(const GameGraph& a, const GameGraph& b);
    std::size_t size() const;

private:
    struct PairHash {
        std::size_t operator()(const std::pair<std::uint64_t, std::uint64_t>& p) const {
            return static_cast<std::size_t>(p.first * 0x9e3779b97f4a7c15ULL ^ p.second);
        }
    };
    double lookup(const GameGraphNode& a, std::uint64_t fa, const GameGraphNode& b, std::uint64_t fb);

    mutable std::mutex mutex_;
    std::unordered_map<std::pair<std::uint64_t, std::uint64_t>, double, PairHash> memo_;
};

} // namespace expforge
