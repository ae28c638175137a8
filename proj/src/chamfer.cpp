#include "expforge/chamfer.hpp"

#include <algorithm>
#include <cmath>

#include "expforge/log.hpp"

namespace expforge {

namespace {

double mean(std::initializer_list<double> xs) {
    if (xs.size() == 0) return 0.0;
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

double payload_dist(const EdgeKind& a, const EdgeKind& b) {
    return std::visit(
        [&](const auto& x) -> double {
            using T = std::decay_t<decltype(x)>;
            const T& y = std::get<T>(b);
            if constexpr (std::is_same_v<T, GShapeEdge>) {
                return mean({numeric_dist(x.x, y.x), numeric_dist(x.y, y.y), shape_dist(x.shape, y.shape)});
            } else if constexpr (std::is_same_v<T, DRelationEdge>) {
                return mean({numeric_dist(x.dx, y.dx), numeric_dist(x.dy, y.dy),
                             numeric_dist(x.probability, y.probability)});
            } else if constexpr (std::is_same_v<T, NCountEdge>) {
                return numeric_dist(x.count, y.count);
            } else if constexpr (std::is_same_v<T, RuleConditionEdge>) {
                return fact_dist(x.fact, y.fact);
            } else if constexpr (std::is_same_v<T, RuleEffectEdge>) {
                return mean({fact_dist(x.pre, y.pre), fact_dist(x.post, y.post)});
            } else if constexpr (std::is_same_v<T, LevelChunkTypeEdge>) {
                return 0.0;
            } else if constexpr (std::is_same_v<T, LevelChunkRepeatsEdge>) {
                return mean({numeric_dist(x.min, y.min), numeric_dist(x.max, y.max)});
            } else if constexpr (std::is_same_v<T, LevelChunkPositionEdge>) {
                return numeric_dist(x.avgNormPos, y.avgNormPos);
            } else {
                return numeric_dist(x.probability, y.probability);
            }
        },
        a);
}

} // namespace

double numeric_dist(double u, double v) {
    const double denom = std::max({std::abs(u), std::abs(v), 1.0});
    return std::min(1.0, std::abs(u - v) / denom);
}

double shape_dist(const Shape& a, const Shape& b) {
    if (a == b) return 0.0;
    const int ha = shape_height(a), hb = shape_height(b);
    const int h = std::max(ha, hb);
    const int w = std::max(shape_width(a), shape_width(b));
    int overlap = 0, uni = 0;
    for (int r = 0; r < h; ++r) {
        const std::vector<int>* ra = r < ha ? &a[r] : nullptr;
        const std::vector<int>* rb = r < hb ? &b[r] : nullptr;
        const int wa = ra ? static_cast<int>(ra->size()) : 0, wb = rb ? static_cast<int>(rb->size()) : 0;
        for (int c = 0; c < w; ++c) {
            const bool x = c < wa && (*ra)[c] != 0, y = c < wb && (*rb)[c] != 0;
            overlap += x && y;
            uni += x || y;
        }
    }
    if (uni == 0) return 0.0;
    return 1.0 - static_cast<double>(overlap) / uni;
}

double fact_dist(const Fact& a, const Fact& b) {
    if (!same_tag(a, b)) return 1.0;
    return std::visit(
        [&](const auto& x) -> double {
            using T = std::decay_t<decltype(x)>;
            const T& y = std::get<T>(b);
            if constexpr (std::is_same_v<T, AnimationFact>)
                return mean({numeric_dist(x.width, y.width), numeric_dist(x.height, y.height)});
            else if constexpr (std::is_same_v<T, SpatialFact>)
                return mean({numeric_dist(x.x, y.x), numeric_dist(x.y, y.y)});
            else if constexpr (std::is_same_v<T, RelationshipXFact>)
                return numeric_dist(x.dx, y.dx);
            else if constexpr (std::is_same_v<T, RelationshipYFact>)
                return numeric_dist(x.dy, y.dy);
            else if constexpr (std::is_same_v<T, VelocityXFact>)
                return numeric_dist(x.vx, y.vx);
            else if constexpr (std::is_same_v<T, VelocityYFact>)
                return numeric_dist(x.vy, y.vy);
            else if constexpr (std::is_same_v<T, CameraXFact>)
                return numeric_dist(x.x, y.x);
            else if constexpr (std::is_same_v<T, CameraYFact>)
                return numeric_dist(x.y, y.y);
            else
                return x.button == y.button ? 0.0 : 1.0;
        },
        a);
}

double edge_dist(const Edge& a, const Edge& b) {
    if (a.kind.index() != b.kind.index()) return 1.0;
    return payload_dist(a.kind, b.kind);
}

double node_chamfer(const GameGraphNode& a, const GameGraphNode& b) {
    if (a.edges.empty()) return 0.0;
    double total = 0.0;
    for (const Edge& e : a.edges) {
        double best = 1.0;
        for (const Edge& f : b.edges) {
            if (f.kind.index() != e.kind.index()) continue;
            best = std::min(best, payload_dist(e.kind, f.kind));
            if (best == 0.0) break;
        }
        total += best;
    }
    return total / static_cast<double>(a.edges.size());
}

double graph_chamfer(const GameGraph& a, const GameGraph& b) {
    ChamferCache cache;
    return cache.graph(a, b);
}

double ChamferCache::node(const GameGraphNode& a, const GameGraphNode& b) {
    return lookup(a, node_fingerprint(a), b, node_fingerprint(b));
}

double ChamferCache::lookup(const GameGraphNode& a, std::uint64_t fa, const GameGraphNode& b, std::uint64_t fb) {
    const auto key = std::make_pair(fa, fb);
    {
        std::lock_guard lock(mutex_);
        auto it = memo_.find(key);
        if (it != memo_.end()) return it->second;
    }
    const double d = node_chamfer(a, b);
    std::lock_guard lock(mutex_);
    memo_.emplace(key, d);
    return d;
}

double ChamferCache::graph(const GameGraph& a, const GameGraph& b) {
    if (a.nodes.empty()) {
        log_warn("graph_chamfer: graph '" + a.id + "' has no nodes");
        return 0.0;
    }
    if (b.nodes.empty()) return 1.0;
    std::vector<std::pair<const GameGraphNode*, std::uint64_t>> bs;
    for (const auto& [ib, nb] : b.nodes) bs.emplace_back(&nb, node_fingerprint(nb));
    double total = 0.0;
    for (const auto& [ia, na] : a.nodes) {
        const std::uint64_t fa = node_fingerprint(na);
        double best = 1.0;
        for (const auto& [nb, fb] : bs) {
            best = std::min(best, lookup(na, fa, *nb, fb));
            if (best == 0.0) break;
        }
        total += best;
    }
    return total / static_cast<double>(a.nodes.size());
}

std::size_t ChamferCache::size() const {
    std::lock_guard lock(mutex_);
    return memo_.size();
}

} // namespace expforge
