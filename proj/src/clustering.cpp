#include "expforge/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace expforge {

namespace {

double sq_dist(const Point& a, const Point& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
}

double l1_dist(const Point& a, const Point& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Relabel clusters by first occurrence so equal partitions compare equal.
void canonicalize(Clustering& c) {
    std::map<int, int> remap;
    for (int l : c.labels)
        if (!remap.count(l)) remap.emplace(l, static_cast<int>(remap.size()));
    std::vector<Point> centers(remap.size());
    for (auto [from, to] : remap) centers[to] = c.centers[from];
    for (int& l : c.labels) l = remap.at(l);
    c.centers = std::move(centers);
}

template <class Dist>
std::vector<Point> plus_plus_seeds(const std::vector<Point>& pts, int k, Rng& rng, Dist dist) {
    std::vector<Point> centers{pts[rng.below(pts.size())]};
    std::vector<double> best(pts.size(), std::numeric_limits<double>::infinity());
    while (static_cast<int>(centers.size()) < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            best[i] = std::min(best[i], dist(pts[i], centers.back()));
            total += best[i];
        }
        std::size_t pick = 0;
        if (total <= 0.0) {
            pick = rng.below(pts.size());
        } else {
            double r = rng.uniform() * total;
            for (pick = 0; pick + 1 < pts.size(); ++pick) {
                r -= best[pick];
                if (r < 0.0) break;
            }
        }
        centers.push_back(pts[pick]);
    }
    return centers;
}

template <class Dist, class Update>
Clustering lloyd(const std::vector<Point>& pts, int k, Rng& rng, int restarts, Dist dist, Update update) {
    if (pts.empty()) throw std::invalid_argument("clustering needs at least one point");
    k = std::clamp(k, 1, static_cast<int>(pts.size()));
    Clustering best;
    best.cost = std::numeric_limits<double>::infinity();
    for (int run = 0; run < std::max(1, restarts); ++run) {
        Clustering c;
        c.centers = plus_plus_seeds(pts, k, rng, dist);
        c.labels.assign(pts.size(), -1);
        for (int iter = 0; iter < 100; ++iter) {
            bool changed = false;
            for (std::size_t i = 0; i < pts.size(); ++i) {
                int arg = 0;
                double d = dist(pts[i], c.centers[0]);
                for (int j = 1; j < k; ++j) {
                    const double e = dist(pts[i], c.centers[j]);
                    if (e < d) {
                        d = e;
                        arg = j;
                    }
                }
                changed = changed || c.labels[i] != arg;
                c.labels[i] = arg;
            }
            for (int j = 0; j < k; ++j) {
                std::vector<const Point*> members;
                for (std::size_t i = 0; i < pts.size(); ++i)
                    if (c.labels[i] == j) members.push_back(&pts[i]);
                if (!members.empty()) c.centers[j] = update(members);
            }
            if (!changed) break;
        }
        // drop clusters that ended up empty
        std::vector<Point> used;
        std::map<int, int> remap;
        for (int& l : c.labels) {
            if (!remap.count(l)) {
                remap.emplace(l, static_cast<int>(used.size()));
                used.push_back(c.centers[l]);
            }
            l = remap.at(l);
        }
        c.centers = std::move(used);
        c.cost = 0.0;
        for (std::size_t i = 0; i < pts.size(); ++i) c.cost += dist(pts[i], c.centers[c.labels[i]]);
        canonicalize(c);
        const bool better = c.cost < best.cost - 1e-12 ||
                            (std::abs(c.cost - best.cost) <= 1e-12 && c.labels < best.labels);
        if (better) best = std::move(c);
    }
    return best;
}

} // namespace

Clustering kmeans(const std::vector<Point>& points, int k, Rng& rng, int restarts) {
    return lloyd(points, k, rng, restarts, sq_dist, [](const std::vector<const Point*>& m) {
        Point c(m.front()->size(), 0.0);
        for (const Point* p : m)
            for (std::size_t i = 0; i < c.size(); ++i) c[i] += (*p)[i];
        for (double& v : c) v /= static_cast<double>(m.size());
        return c;
    });
}

Clustering kmedians(const std::vector<Point>& points, int k, Rng& rng, int restarts) {
    return lloyd(points, k, rng, restarts, l1_dist, [](const std::vector<const Point*>& m) {
        Point c(m.front()->size(), 0.0);
        for (std::size_t i = 0; i < c.size(); ++i) {
            std::vector<double> col;
            for (const Point* p : m) col.push_back((*p)[i]);
            c[i] = median(std::move(col));
        }
        return c;
    });
}

std::vector<double> distortion_ratios(const std::vector<Point>& points, int kMax) {
    if (points.empty()) return {};
    const int n = static_cast<int>(points.size());
    const int upper = std::clamp(kMax, 1, n);
    const double nd = static_cast<double>(points.front().size());
    Rng rng(0x9e3779b97f4a7c15ULL);
    std::vector<double> f(upper, 1.0);
    double prevS = 0.0, alpha = 0.0;
    for (int k = 1; k <= upper; ++k) {
        const double s = kmeans(points, k, rng).cost;
        if (k == 2) alpha = 1.0 - 3.0 / (4.0 * std::max(nd, 1.0));
        else if (k > 2) alpha = alpha + (1.0 - alpha) / 6.0;
        if (k > 1 && prevS > 0.0) f[k - 1] = s / (alpha * prevS);
        prevS = s;
    }
    return f;
}

int estimate_k(const std::vector<Point>& points, int kMax) {
    const auto f = distortion_ratios(points, kMax);
    int best = 1;
    double bestF = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < f.size(); ++i)
        if (f[i] < bestF) {
            bestF = f[i];
            best = static_cast<int>(i) + 1;
        }
    return bestF < kDistortionThreshold ? best : 1;
}

std::vector<Point> z_normalize(const std::vector<Point>& points) {
    if (points.empty()) return {};
    const std::size_t d = points.front().size();
    std::vector<Point> out = points;
    const double n = static_cast<double>(points.size());
    for (std::size_t c = 0; c < d; ++c) {
        double mean = 0.0;
        for (const auto& p : points) mean += p[c];
        mean /= n;
        double var = 0.0;
        for (const auto& p : points) var += (p[c] - mean) * (p[c] - mean);
        const double sd = std::sqrt(var / n);
        for (auto& p : out) p[c] = sd > 1e-12 ? (p[c] - mean) / sd : 0.0;
    }
    return out;
}

} // namespace expforge
