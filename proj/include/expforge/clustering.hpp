#pragma once

#include <cstddef>
#include <vector>

#include "expforge/rng.hpp"

namespace expforge {

using Point = std::vector<double>;

struct Clustering {
    /// Cluster index per point, numbered by first occurrence.
    std::vector<int> labels;
    std::vector<Point> centers;
    /// Sum of squared (k-means) or Manhattan (k-medians) distances to centers.
    double cost = 0.0;
    int k() const { return static_cast<int>(centers.size()); }
};

inline constexpr int kDefaultRestarts = 10;

/// Lloyd's algorithm from k-means++ seeds; best of `restarts` runs.
Clustering kmeans(const std::vector<Point>& points, int k, Rng& rng, int restarts = kDefaultRestarts);

/// Manhattan distance, coordinate-wise medians as centers.
Clustering kmedians(const std::vector<Point>& points, int k, Rng& rng, int restarts = kDefaultRestarts);

/// Pham, Dimov and Nguyen f(K) for K = 1..min(kMax, n); entry K-1 holds f(K).
std::vector<double> distortion_ratios(const std::vector<Point>& points, int kMax);

/// K minimizing f(K) when that minimum is below 0.85, else 1.
int estimate_k(const std::vector<Point>& points, int kMax);

inline constexpr double kDistortionThreshold = 0.85;

/// Each column shifted to mean 0 and scaled to unit variance (constant columns become 0).
std::vector<Point> z_normalize(const std::vector<Point>& points);

} // namespace expforge
