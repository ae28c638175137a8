#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "expforge/proto_map.hpp"

namespace expforge {

inline constexpr double kMinScale = 0.25;
inline constexpr double kMaxScale = 4.0;

/// How one edge of a source node enters the expanded node.
struct EdgeFilter {
    bool include = true;
    double scale = 1.0;
    /// Output node overriding the remapped target (inter-node edges only).
    std::optional<std::string> retarget;
    auto operator<=>(const EdgeFilter&) const = default;
};

/// a_i * f_i: one kb node and a filter per edge of it.
struct Term {
    NodeRef ref;
    std::vector<EdgeFilter> filters;
    auto operator<=>(const Term&) const = default;
};

struct ExpandedNode {
    std::vector<Term> terms;
    bool operator==(const ExpandedNode&) const = default;
};

/// Output node id (= proto node id) to its terms.
struct ConceptualExpansion {
    std::map<std::string, ExpandedNode> nodes;
    bool operator==(const ConceptualExpansion&) const = default;

    std::size_t included_edges() const;
};

class RealizeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The knowledge base graphs plus a mapping onto a proto graph.
class Sources {
public:
    Sources(const std::vector<GameGraph>& kb, const Mapping& mapping);

    const GameGraphNode& node(const NodeRef& ref) const;
    int graph_index(const std::string& graphId) const;
    const Mapping& mapping() const { return *mapping_; }
    const GameGraph& proto() const { return mapping_->proto; }
    const std::vector<GameGraph>& kb() const { return *kb_; }
    /// Output node a kb node's edges point to after remapping, if any.
    const std::string* output_of(const NodeRef& ref) const;

private:
    const std::vector<GameGraph>* kb_;
    const Mapping* mapping_;
    std::map<std::string, int> graphIndex_;
};

/// Edges whose target is another node and may be rerouted.
bool is_inter_node(const Edge& e);

/// Every proto node takes all its mapped kb nodes as terms. The closest term
/// includes every edge; term i includes each edge with probability
/// (1 - d_i) / (1 - d_min).
ConceptualExpansion expansion_from_init(const Sources& src, Rng& rng);

/// Weights (1 - d_i) / (1 - d_min) of one node's mapped entries.
std::vector<double> init_weights(const std::vector<MappingEntry>& entries);

/// Materializes a graph: per output node the union of included, scaled edges
/// with targets remapped to output nodes, style ids made unique per output
/// node, chunk ids and sprite ids renamed, rules re-keyed, transitions
/// renormalized with self-loops dropped.
GameGraph realize(const ConceptualExpansion& ce, const Sources& src, const std::string& graphId = "expanded",
                  Provenance provenance = Provenance::Expanded);

enum class NeighborOp { Toggle, Jitter, AddTerm, DropTerm, Retarget };
inline constexpr std::array<NeighborOp, 5> kNeighborOps = {NeighborOp::Toggle, NeighborOp::Jitter, NeighborOp::AddTerm,
                                                          NeighborOp::DropTerm, NeighborOp::Retarget};

/// One mutation with the operator drawn uniformly; inapplicable draws are
/// redrawn. Returns the input unchanged only if no operator applies.
ConceptualExpansion get_neighbor(const ConceptualExpansion& ce, const Sources& src, Rng& rng,
                                 NeighborOp* applied = nullptr);

using ExpansionHeuristic = std::function<double(const ConceptualExpansion&, const GameGraph&)>;
using GraphHeuristic = std::function<double(const GameGraph&)>;

struct SearchOptions {
    int neighbors = 10;
    int patience = 10;
    /// 0 = no limit.
    int maxSteps = 0;
    /// Worker threads for neighbor evaluation (0 = hardware concurrency).
    int threads = 0;
};

struct SearchResult {
    ConceptualExpansion ce;
    GameGraph graph;
    double score = 0.0;
    double initialScore = 0.0;
    int steps = 0;
    int evaluations = 0;
    /// Incumbent score after each step.
    std::vector<double> history;
};

/// Hill climbing from expansion_from_init: sample `neighbors` neighbors of the
/// incumbent, move to the best if it is strictly better, stop after `patience`
/// consecutive steps without improvement.
SearchResult ce_search(const Sources& src, const ExpansionHeuristic& h, Rng& rng, const SearchOptions& opts = {});

/// Per output node, the kb nodes whose whole edge sets are combined.
using NodeChoice = std::map<std::string, std::vector<NodeRef>>;

/// (output node, position of the kb node in the choice, edge index in the kb node)
using RerouteKey = std::tuple<std::string, std::size_t, std::size_t>;
using Reroutes = std::map<RerouteKey, std::string>;

/// Direct assembly of whole kb nodes (no filters): the reference construction
/// the baselines are defined by. Reroutes override remapped edge targets.
GameGraph assemble(const NodeChoice& choice, const Sources& src, const std::string& graphId, Provenance provenance,
                   const Reroutes& reroutes = {});

/// The conceptual expansion whose realization equals assemble(choice).
ConceptualExpansion expansion_of_choice(const NodeChoice& choice, const Sources& src);

struct BaselineOptions {
    std::uint64_t exhaustiveCap = 1000000;
    std::uint64_t samples = 50000;
    int threads = 0;
};

struct BaselineResult {
    GameGraph graph;
    NodeChoice choice;
    Reroutes reroutes;
    double score = 0.0;
    std::uint64_t spaceSize = 0;
    std::uint64_t evaluated = 0;
    bool exhaustive = true;
};

/// Candidates enumerated (exhaustive) or sampled, in a fixed order.
std::uint64_t amalgam_space_size(const Sources& src);
NodeChoice amalgam_candidate(const Sources& src, std::uint64_t index);
std::uint64_t blend_space_size(const Sources& src);
/// Index 0 is the full union; subsets are ordered largest first per node.
NodeChoice blend_candidate(const Sources& src, std::uint64_t index);

BaselineResult amalgam_search(const Sources& src, const GraphHeuristic& h, Rng& rng, const BaselineOptions& opts = {});
BaselineResult blend_search(const Sources& src, const GraphHeuristic& h, Rng& rng, const BaselineOptions& opts = {});

struct RerouteOption {
    RerouteKey key;
    /// Output nodes whose mapped sets contain the edge's original target.
    std::vector<std::string> targets;
};

/// Inter-node edges of the chosen kb nodes with their admissible targets.
std::vector<RerouteOption> composition_options(const NodeChoice& base, const Sources& src);

BaselineResult composition_search(const Sources& src, const GraphHeuristic& h, Rng& rng,
                                  const BaselineOptions& opts = {});

/// Runs fn(i) for i in [0, n) on up to `threads` workers.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

} // namespace expforge
