#include "doctest.h"

#include <cmath>
#include <limits>
#include <map>

#include "expforge/clustering.hpp"
#include "expforge/ingest.hpp"
#include "test_support.hpp"

using namespace expforge;

namespace {

/// Multiset symmetric difference over 3x3 windows, counted with a map.
double oracle_sprite_distance(const Pixels& a, const Pixels& b) {
    auto windows = [](const Pixels& p) {
        std::map<std::vector<int>, int> m;
        int total = 0;
        for (std::size_t y = 0; y + 3 <= p.size(); ++y)
            for (std::size_t x = 0; x + 3 <= p[y].size(); ++x) {
                std::vector<int> w;
                for (int dy = 0; dy < 3; ++dy)
                    for (int dx = 0; dx < 3; ++dx) w.push_back(p[y + dy][x + dx]);
                ++m[w];
                ++total;
            }
        return std::pair{m, total};
    };
    const auto [ma, na] = windows(a);
    const auto [mb, nb] = windows(b);
    if (na + nb == 0) return 0.0;
    std::map<std::vector<int>, int> all = ma;
    for (const auto& [k, v] : mb) all[k];
    int sym = 0;
    for (const auto& [k, v] : all) {
        const int ca = ma.count(k) ? ma.at(k) : 0;
        const int cb = mb.count(k) ? mb.at(k) : 0;
        sym += std::abs(ca - cb);
    }
    return double(sym) / double(na + nb);
}

Pixels random_pixels(Rng& rng, int w, int h, int colors) {
    Pixels p(h, std::vector<int>(w));
    for (auto& row : p)
        for (int& c : row) c = int(rng.below(colors));
    return p;
}

/// Optimal 1-D k-means cost by dynamic programming over sorted points.
double optimal_1d_cost(std::vector<double> xs, int k) {
    std::sort(xs.begin(), xs.end());
    const int n = int(xs.size());
    auto seg = [&](int i, int j) {  // [i, j)
        double m = 0;
        for (int t = i; t < j; ++t) m += xs[t];
        m /= (j - i);
        double c = 0;
        for (int t = i; t < j; ++t) c += (xs[t] - m) * (xs[t] - m);
        return c;
    };
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> dp(k + 1, std::vector<double>(n + 1, inf));
    dp[0][0] = 0;
    for (int c = 1; c <= k; ++c)
        for (int j = 1; j <= n; ++j)
            for (int i = c - 1; i < j; ++i)
                if (dp[c - 1][i] < inf) dp[c][j] = std::min(dp[c][j], dp[c - 1][i] + seg(i, j));
    return dp[k][n];
}

nlohmann::json minimal_trace() {
    return nlohmann::json::parse(R"({
      "game": "g", "player": "hero", "viewWidth": 160, "viewHeight": 128,
      "frames": [
        {"t": 0, "camera": {"x": 0, "y": 0}, "inputs": [], "sprites": [{"spriteId": "hero", "x": 0, "y": 96, "w": 16, "h": 16}]},
        {"t": 1, "camera": {"x": 2, "y": 0}, "inputs": ["right"], "sprites": [{"spriteId": "hero", "x": 2, "y": 96, "w": 16, "h": 16}]}
      ]})");
}

} // namespace

TEST_CASE("sprite distance matches a multiset oracle") {
    Rng rng(8);
    for (int t = 0; t < 300; ++t) {
        const Pixels a = random_pixels(rng, 3 + int(rng.below(6)), 3 + int(rng.below(6)), 1 + int(rng.below(3)));
        const Pixels b = random_pixels(rng, 3 + int(rng.below(6)), 3 + int(rng.below(6)), 1 + int(rng.below(3)));
        const double d = sprite_distance(a, b);
        CHECK(d == doctest::Approx(oracle_sprite_distance(a, b)).epsilon(1e-12));
        CHECK(d >= 0.0);
        CHECK(d <= 1.0);
        CHECK(sprite_distance(a, a) == 0.0);
        CHECK(d == sprite_distance(b, a));
    }
    // solid colours share no window
    const Pixels red(4, std::vector<int>(4, 1)), blue(4, std::vector<int>(4, 2));
    CHECK(sprite_distance(red, blue) == 1.0);
}

TEST_CASE("sprite clusters are connected components under the threshold") {
    const Spritesheet sheet = load_spritesheet(testsupport::fixture("proto.sheet.json"));
    for (double th : {0.2, 0.4, 0.6}) {
        CAPTURE(th);
        const auto groups = cluster_sprites(sheet, th);
        std::map<std::string, int> groupOf;
        std::size_t members = 0;
        for (std::size_t g = 0; g < groups.size(); ++g) {
            CHECK(std::is_sorted(groups[g].begin(), groups[g].end()));
            for (const auto& id : groups[g]) groupOf[id] = int(g), ++members;
        }
        CHECK(members == sheet.sprites.size());
        CHECK(groupOf.size() == sheet.sprites.size());
        // every close pair shares a group
        for (const auto& a : sheet.sprites)
            for (const auto& b : sheet.sprites)
                if (sprite_distance(a.pixels, b.pixels) < th) CHECK(groupOf[a.spriteId] == groupOf[b.spriteId]);
        // every multi-member group is internally connected through close pairs
        for (const auto& g : groups) {
            std::set<std::string> reached = {g.front()};
            bool grew = true;
            while (grew) {
                grew = false;
                for (const auto& x : g)
                    if (!reached.count(x))
                        for (const auto& y : reached)
                            if (sprite_distance(sheet.find(x)->pixels, sheet.find(y)->pixels) < th) {
                                reached.insert(x);
                                grew = true;
                                break;
                            }
            }
            CHECK(reached.size() == g.size());
        }
        const auto rep = representatives(groups);
        for (const auto& g : groups)
            for (const auto& id : g) CHECK(rep.at(id) == g.front());
    }
}

TEST_CASE("three separated blobs give K = 3") {
    Rng rng(5);
    std::vector<Point> pts;
    const std::vector<Point> centers = {{0, 0}, {10, 0}, {5, 9}};
    for (const auto& c : centers)
        for (int i = 0; i < 20; ++i) pts.push_back({c[0] + rng.uniform(-0.5, 0.5), c[1] + rng.uniform(-0.5, 0.5)});
    CHECK(estimate_k(pts, 8) == 3);
    Rng r2(1);
    const Clustering km = kmeans(pts, 3, r2);
    for (int b = 0; b < 3; ++b)
        for (int i = 1; i < 20; ++i) CHECK(km.labels[b * 20 + i] == km.labels[b * 20]);
    CHECK(km.labels[0] == 0);
    CHECK(km.labels[20] == 1);
    CHECK(km.labels[40] == 2);
    const Clustering kmed = kmedians(pts, 3, r2);
    CHECK(kmed.labels == km.labels);

    // a single bell-shaped blob has no structure
    std::vector<Point> one;
    for (int i = 0; i < 100; ++i) {
        double x = 0, y = 0;
        for (int j = 0; j < 6; ++j) x += rng.uniform(), y += rng.uniform();
        one.push_back({x, y});
    }
    CHECK(estimate_k(one, 6) == 1);
}

TEST_CASE("distortion ratios follow the optimal costs") {
    const std::vector<double> xs = {0.0, 0.2, 0.3, 0.1, 5.0, 5.4, 5.2, 9.9, 10.0, 10.3, 10.1, 5.1};
    std::vector<Point> pts;
    for (double x : xs) pts.push_back({x});
    const auto f = distortion_ratios(pts, 5);
    REQUIRE(f.size() == 5);
    CHECK(f[0] == 1.0);
    double alpha = 0, prev = optimal_1d_cost(xs, 1);
    for (int k = 2; k <= 5; ++k) {
        alpha = k == 2 ? 1 - 3.0 / 4 : alpha + (1 - alpha) / 6;
        const double s = optimal_1d_cost(xs, k);
        CAPTURE(k);
        CHECK(f[k - 1] == doctest::Approx(s / (alpha * prev)).epsilon(1e-9));
        prev = s;
    }
    CHECK(estimate_k(pts, 5) == 3);
}

TEST_CASE("k-medians centres are coordinate medians") {
    Rng rng(2);
    std::vector<Point> pts;
    for (int i = 0; i < 15; ++i) pts.push_back({rng.uniform(0, 10), rng.uniform(0, 10)});
    const Clustering c = kmedians(pts, 3, rng);
    double cost = 0;
    for (int k = 0; k < c.k(); ++k)
        for (int dim = 0; dim < 2; ++dim) {
            std::vector<double> v;
            for (std::size_t i = 0; i < pts.size(); ++i)
                if (c.labels[i] == k) v.push_back(pts[i][dim]);
            REQUIRE_FALSE(v.empty());
            std::sort(v.begin(), v.end());
            // any value between the middle order statistics minimises the L1 cost
            CHECK(c.centers[k][dim] >= v[(v.size() - 1) / 2] - 1e-12);
            CHECK(c.centers[k][dim] <= v[v.size() / 2] + 1e-12);
            for (double x : v) cost += std::fabs(x - c.centers[k][dim]);
        }
    CHECK(c.cost == doctest::Approx(cost));
}

TEST_CASE("z-normalized columns have zero mean and unit variance") {
    Rng rng(6);
    std::vector<Point> pts;
    for (int i = 0; i < 40; ++i) pts.push_back({rng.uniform(-3, 7), 4.0, rng.uniform(100, 200)});
    const auto z = z_normalize(pts);
    for (int c : {0, 2}) {
        double m = 0, v = 0;
        for (const auto& p : z) m += p[c];
        m /= double(z.size());
        for (const auto& p : z) v += (p[c] - m) * (p[c] - m);
        CHECK(m == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(v / double(z.size()) == doctest::Approx(1.0));
    }
    for (const auto& p : z) CHECK(p[1] == 0.0);
}

TEST_CASE("traces parse, round-trip and reject malformed frames") {
    const Trace t = trace_from_json(minimal_trace());
    CHECK(t.player == std::optional<std::string>("hero"));
    REQUIRE(t.frames.size() == 2);
    CHECK(t.frames[1].inputs == std::vector<Button>{Button::Right});
    CHECK(trace_from_json(trace_to_json(t)) == t);

    auto back = minimal_trace();
    back["frames"][1]["t"] = 0;
    CHECK_THROWS_AS(trace_from_json(back), LoadError);
    auto outside = minimal_trace();
    outside["frames"][0]["sprites"][0]["x"] = 500;
    CHECK_THROWS_AS(trace_from_json(outside), LoadError);
    auto badInput = minimal_trace();
    badInput["frames"][1]["inputs"] = {"jump"};
    CHECK_THROWS_AS(trace_from_json(badInput), LoadError);
    CHECK_THROWS_AS(load_trace(testsupport::fixture("missing.trace.json")), LoadError);

    for (const char* g : {"walker", "faller", "climber"}) {
        const Trace full = load_trace(testsupport::fixture(std::string(g) + ".trace.json"));
        CHECK(trace_from_json(trace_to_json(full)) == full);
    }
}

TEST_CASE("frames become camera-relative chunks with representatives") {
    FrameObservation f;
    f.cameraX = 32;
    f.cameraY = 0;
    f.sprites = {{"brick2", 48, 112, 16, 16}, {"hero", 40, 96, 16, 16}, {"brick", 32, 112, 16, 16}};
    const LevelChunk c = frame_to_chunk(f, 160, 128);
    CHECK(c.width == 160);
    CHECK(c.height == 128);
    REQUIRE(c.placements.size() == 3);
    CHECK(std::is_sorted(c.placements.begin(), c.placements.end()));
    CHECK(c.placements.front() == SpritePlacement{"brick", 0, 112, 16, 16});

    Trace t;
    t.frames = {f};
    const auto chunks = chunks_from_trace(t, {{"brick2", "brick"}, {"brick", "brick"}, {"hero", "hero"}}, {"hero"});
    REQUIRE(chunks.size() == 1);
    REQUIRE(chunks[0].placements.size() == 2);
    for (const auto& p : chunks[0].placements) CHECK(p.spriteId == "brick");
}
