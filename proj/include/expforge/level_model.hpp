#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "expforge/game_graph.hpp"
#include "expforge/ingest.hpp"
#include "expforge/rng.hpp"

namespace expforge {

struct GValue {
    std::string type;
    int x = 0;
    int y = 0;
    Shape shape;
    int chunk = 0;
};

struct DValue {
    /// Indices into Observations::g, both in `chunk`.
    int from = 0;
    int to = 0;
    int dx = 0;
    int dy = 0;
    int chunk = 0;
};

struct NValue {
    std::string type;
    int count = 0;
    int chunk = 0;
};

struct Observations {
    std::vector<GValue> g;
    std::vector<DValue> d;
    std::vector<NValue> n;
};

/// G = maximal 4-connected same-type components (neighbours touch exactly
/// edge to edge), D = every ordered pair of G in a chunk, N = sprites per type.
Observations extract_observations(const std::vector<LevelChunk>& chunks);

inline constexpr int kOffsetBucket = 8;
int offset_bucket(int d);

/// A shape placed in a chunk, labelled with its style.
struct StyledShape {
    std::string type;
    std::string sNodeId;
    int x = 0;
    int y = 0;
    Shape shape;
    auto operator<=>(const StyledShape&) const = default;
};

/// P(to | from, bucket(dx, dy)) for one chunk category.
struct TableEntry {
    std::string fromS;
    std::string toS;
    int dx = 0;
    int dy = 0;
    double probability = 0.0;
    /// Sprite type of toS, used when the model has no SNode for it.
    std::string toType;
    auto operator<=>(const TableEntry&) const = default;
};

struct LNode {
    std::string id;
    /// Training chunks in this category (positions in chunkOrder). Empty for
    /// models rebuilt from a graph.
    std::vector<int> chunks;
    std::vector<StyledShape> shapes;
    /// Per sprite type, the count observed in each member chunk (zeros included).
    std::map<std::string, std::vector<int>> nValues;
    std::vector<TableEntry> table;
    std::map<std::string, double> transitions;
    int repeatsMin = 1;
    int repeatsMax = 1;
    double avgNormPos = 0.0;
};

struct SNode {
    std::string id;
    std::string type;
    Shape modalShape;
};

struct LevelDesignModel {
    int chunkWidth = 0;
    int chunkHeight = 0;
    std::map<std::string, std::pair<int, int>> spriteSizes;
    std::vector<SNode> sNodes;
    std::vector<LNode> lNodes;
    /// L label of each training chunk in play order.
    std::vector<std::string> sequence;

    const LNode* find_l(const std::string& id) const;
    const SNode* find_s(const std::string& id) const;
};

inline constexpr int kMaxStyles = 8;

/// chunkOrder lists chunk indices in playthrough order.
LevelDesignModel learn_model(const std::vector<LevelChunk>& chunks, const std::vector<int>& chunkOrder, Rng& rng);

/// Run-length statistics of a label sequence.
struct SequenceStats {
    std::map<std::string, std::map<std::string, double>> transitions;
    std::map<std::string, std::pair<int, int>> repeats;
    std::map<std::string, double> avgNormPos;
};
SequenceStats sequence_stats(const std::vector<std::string>& labels);

struct SampledChunk {
    LevelChunk chunk;
    std::vector<StyledShape> shapes;
    std::map<std::string, int> targets;
    bool complete = false;
};

inline constexpr int kSampleIterationCap = 500;

SampledChunk sample_chunk(const LevelDesignModel& model, const std::string& lNodeId, Rng& rng);

/// Rebuilds the sampling-relevant part of a model from G/D/N and LevelChunk* edges.
LevelDesignModel level_model_from_graph(const GameGraph& g);

/// Sprite placements (pixel rectangles) covered by a styled shape.
std::vector<SpritePlacement> expand_shape(const StyledShape& s, int w, int h);

} // namespace expforge
