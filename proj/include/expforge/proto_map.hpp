#pragma once

#include <map>
#include <string>
#include <vector>

#include "expforge/chamfer.hpp"
#include "expforge/game_graph.hpp"
#include "expforge/ingest.hpp"
#include "expforge/rng.hpp"

namespace expforge {

/// Node per sprite cluster carrying Animation facts for its members and one
/// single-cell GShape, plus Camera and None. Throws std::invalid_argument when
/// the player sprite is not in the sheet.
GameGraph build_proto_graph(const Spritesheet& sheet, const std::string& playerSpriteId, double threshold,
                            const std::string& graphId = "proto");

struct NodeRef {
    std::string graphId;
    std::string nodeId;
    auto operator<=>(const NodeRef&) const = default;
};

struct MappingEntry {
    NodeRef ref;
    double distance = 0.0;
    bool operator==(const MappingEntry&) const = default;
};

struct Mapping {
    /// The proto graph with the consolidated chunk-category nodes added.
    GameGraph proto;
    /// Per proto node, mapped kb nodes sorted by (distance, graph, node).
    std::map<std::string, std::vector<MappingEntry>> entries;
    /// The proto node each mapped kb node belongs to.
    std::map<NodeRef, std::string> assignment;

    const std::vector<MappingEntry>& of(const std::string& protoNode) const;
};

/// Forward pass: every kb sprite node goes to the proto node closest to it,
/// measured proto -> kb, among nodes with the same player flag, when that
/// distance is < 1. Exact ties go to the visually closest proto sprite. Empty
/// proto nodes then take their closest kb node measured kb -> proto. Camera and
/// None map to their counterparts. kb chunk-category nodes are K-medians
/// clustered and each cluster becomes one proto chunk node "L:<k>".
Mapping build_mapping(const std::vector<GameGraph>& kb, const GameGraph& proto, Rng& rng,
                      ChamferCache* cache = nullptr);

/// Features used to cluster chunk-category nodes: (avgNormPos, mean repeats,
/// transition out-degree).
std::vector<double> chunk_node_features(const GameGraphNode& n);

nlohmann::json mapping_to_json(const Mapping& m);
/// Inverse of mapping_to_json. Each kb node is assigned to the proto node
/// where its distance is smallest. Throws std::invalid_argument on entries
/// naming proto nodes missing from `proto`.
Mapping mapping_from_json(const nlohmann::json& j, GameGraph proto);

} // namespace expforge
