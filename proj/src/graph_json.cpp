#include "expforge/graph_json.hpp"

#include <fstream>
#include <sstream>

namespace expforge {

namespace {

using nlohmann::json;

const json& field(const json& j, const char* key, const std::string& path) {
    if (!j.is_object() || !j.contains(key)) throw ParseError(path + ": missing field '" + key + "'");
    return j.at(key);
}

int int_at(const json& j, const char* key, const std::string& path) {
    const json& v = field(j, key, path);
    if (!v.is_number_integer()) throw ParseError(path + "." + key + ": expected integer");
    return v.get<int>();
}

double num_at(const json& j, const char* key, const std::string& path) {
    const json& v = field(j, key, path);
    if (!v.is_number()) throw ParseError(path + "." + key + ": expected number");
    return v.get<double>();
}

std::string str_at(const json& j, const char* key, const std::string& path) {
    const json& v = field(j, key, path);
    if (!v.is_string()) throw ParseError(path + "." + key + ": expected string");
    return v.get<std::string>();
}

Fact fact_at(const json& j, const char* key, const std::string& path) {
    const json& v = field(j, key, path);
    try {
        return fact_from_json(v);
    } catch (const std::exception& e) {
        throw ParseError(path + "." + key + ": " + e.what());
    }
}

Shape shape_at(const json& j, const std::string& path) {
    const json& v = field(j, "shape", path);
    if (!v.is_array()) throw ParseError(path + ".shape: expected array of rows");
    Shape s;
    for (const auto& row : v) {
        if (!row.is_array()) throw ParseError(path + ".shape: expected array of rows");
        std::vector<int> r;
        for (const auto& c : row) {
            if (!c.is_number_integer()) throw ParseError(path + ".shape: expected integer cells");
            r.push_back(c.get<int>());
        }
        s.push_back(std::move(r));
    }
    return s;
}

EdgeKind edge_kind_from_json(const json& j, std::size_t kind, const std::string& path) {
    switch (kind) {
    case 0:
        return GShapeEdge{int_at(j, "x", path), int_at(j, "y", path), shape_at(j, path), str_at(j, "sNodeId", path),
                          str_at(j, "lNodeId", path)};
    case 1:
        return DRelationEdge{int_at(j, "dx", path),          int_at(j, "dy", path),
                             num_at(j, "probability", path), str_at(j, "sNodeId", path),
                             str_at(j, "fromSNodeId", path), str_at(j, "lNodeId", path)};
    case 2:
        return NCountEdge{int_at(j, "count", path), str_at(j, "lNodeId", path)};
    case 3:
        return RuleConditionEdge{fact_at(j, "fact", path), str_at(j, "ruleId", path)};
    case 4:
        return RuleEffectEdge{fact_at(j, "pre", path), fact_at(j, "post", path), str_at(j, "ruleId", path)};
    case 5:
        return LevelChunkTypeEdge{str_at(j, "chunkCategoryId", path)};
    case 6:
        return LevelChunkRepeatsEdge{int_at(j, "min", path), int_at(j, "max", path)};
    case 7:
        return LevelChunkPositionEdge{num_at(j, "avgNormPos", path)};
    default:
        return LevelChunkTransitionEdge{num_at(j, "probability", path)};
    }
}

} // namespace

json edge_to_json(const Edge& e) {
    json j;
    j["kind"] = std::string(edge_kind_name(e.kind.index()));
    j["target"] = e.target;
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, GShapeEdge>) {
                j["x"] = v.x;
                j["y"] = v.y;
                j["shape"] = v.shape;
                j["sNodeId"] = v.sNodeId;
                j["lNodeId"] = v.lNodeId;
            } else if constexpr (std::is_same_v<T, DRelationEdge>) {
                j["dx"] = v.dx;
                j["dy"] = v.dy;
                j["probability"] = v.probability;
                j["sNodeId"] = v.sNodeId;
                j["fromSNodeId"] = v.fromSNodeId;
                j["lNodeId"] = v.lNodeId;
            } else if constexpr (std::is_same_v<T, NCountEdge>) {
                j["count"] = v.count;
                j["lNodeId"] = v.lNodeId;
            } else if constexpr (std::is_same_v<T, RuleConditionEdge>) {
                j["fact"] = fact_to_json(v.fact);
                j["ruleId"] = v.ruleId;
            } else if constexpr (std::is_same_v<T, RuleEffectEdge>) {
                j["pre"] = fact_to_json(v.pre);
                j["post"] = fact_to_json(v.post);
                j["ruleId"] = v.ruleId;
            } else if constexpr (std::is_same_v<T, LevelChunkTypeEdge>) {
                j["chunkCategoryId"] = v.chunkCategoryId;
            } else if constexpr (std::is_same_v<T, LevelChunkRepeatsEdge>) {
                j["min"] = v.min;
                j["max"] = v.max;
            } else if constexpr (std::is_same_v<T, LevelChunkPositionEdge>) {
                j["avgNormPos"] = v.avgNormPos;
            } else {
                j["probability"] = v.probability;
            }
        },
        e.kind);
    return j;
}

json graph_to_json(const GameGraph& g) {
    json j;
    j["id"] = g.id;
    j["provenance"] = std::string(provenance_name(g.provenance));
    j["chunk"] = {{"w", g.chunkWidth}, {"h", g.chunkHeight}};
    j["nodes"] = json::array();
    for (const auto& [id, n] : g.nodes) {
        json jn;
        jn["id"] = n.id;
        jn["role"] = std::string(role_name(n.role));
        jn["spriteIds"] = n.spriteIds;
        jn["isPlayer"] = n.isPlayer;
        jn["size"] = {{"w", n.spriteWidth}, {"h", n.spriteHeight}};
        if (!n.pixels.empty()) jn["pixels"] = n.pixels;
        jn["edges"] = json::array();
        for (const Edge& e : n.edges) jn["edges"].push_back(edge_to_json(e));
        j["nodes"].push_back(std::move(jn));
    }
    return j;
}

GameGraph graph_from_json(const json& j) {
    GameGraph g;
    g.id = str_at(j, "id", "$");
    const std::string prov = str_at(j, "provenance", "$");
    const auto p = parse_provenance(prov);
    if (!p) throw ParseError("$.provenance: unknown provenance '" + prov + "'");
    g.provenance = *p;
    if (j.contains("chunk")) {
        g.chunkWidth = int_at(j.at("chunk"), "w", "$.chunk");
        g.chunkHeight = int_at(j.at("chunk"), "h", "$.chunk");
    }
    const json& nodes = field(j, "nodes", "$");
    if (!nodes.is_array()) throw ParseError("$.nodes: expected array");
    for (std::size_t ni = 0; ni < nodes.size(); ++ni) {
        const json& jn = nodes[ni];
        const std::string npath = "$.nodes[" + std::to_string(ni) + "]";
        GameGraphNode n;
        n.id = str_at(jn, "id", npath);
        const std::string nodePath = npath + "(id=" + n.id + ")";
        const std::string role = jn.contains("role") ? str_at(jn, "role", nodePath) : "sprite";
        bool roleOk = false;
        for (auto r : {NodeRole::Sprite, NodeRole::Camera, NodeRole::None, NodeRole::ChunkCategory})
            if (role_name(r) == role) {
                n.role = r;
                roleOk = true;
            }
        if (!roleOk) throw ParseError(nodePath + ".role: unknown role '" + role + "'");
        const json& sprites = field(jn, "spriteIds", nodePath);
        if (!sprites.is_array()) throw ParseError(nodePath + ".spriteIds: expected array");
        for (const auto& s : sprites) {
            if (!s.is_string()) throw ParseError(nodePath + ".spriteIds: expected strings");
            n.spriteIds.push_back(s.get<std::string>());
        }
        const json& player = field(jn, "isPlayer", nodePath);
        if (!player.is_boolean()) throw ParseError(nodePath + ".isPlayer: expected boolean");
        n.isPlayer = player.get<bool>();
        if (jn.contains("size")) {
            n.spriteWidth = int_at(jn.at("size"), "w", nodePath + ".size");
            n.spriteHeight = int_at(jn.at("size"), "h", nodePath + ".size");
        }
        if (jn.contains("pixels")) {
            const json& px = jn.at("pixels");
            bool ok = px.is_array();
            if (ok)
                for (const auto& row : px) {
                    ok = ok && row.is_array() && row.size() == px.front().size();
                    if (ok)
                        for (const auto& c : row) ok = ok && c.is_number_integer();
                }
            if (!ok) throw ParseError(nodePath + ".pixels: expected rectangular integer matrix");
            n.pixels = px.get<std::vector<std::vector<int>>>();
        }
        const json& edges = field(jn, "edges", nodePath);
        if (!edges.is_array()) throw ParseError(nodePath + ".edges: expected array");
        for (std::size_t ei = 0; ei < edges.size(); ++ei) {
            const std::string epath = nodePath + ".edges[" + std::to_string(ei) + "]";
            const json& je = edges[ei];
            const std::string kindName = str_at(je, "kind", epath);
            const auto kind = parse_edge_kind(kindName);
            if (!kind) throw ParseError(epath + ".kind: unknown edge variant '" + kindName + "'");
            n.edges.push_back(Edge{edge_kind_from_json(je, *kind, epath), str_at(je, "target", epath)});
        }
        if (g.nodes.count(n.id)) throw ParseError(nodePath + ": duplicate node id");
        g.nodes.emplace(n.id, std::move(n));
    }
    return g;
}

std::string canonical_dump(const json& j) { return j.dump(2) + "\n"; }

std::string serialize(const GameGraph& g) { return canonical_dump(graph_to_json(g)); }

GameGraph deserialize(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("$: invalid JSON: ") + e.what());
    }
    return graph_from_json(j);
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

GameGraph load_graph(const std::filesystem::path& path) { return deserialize(read_text_file(path)); }

void save_graph(const std::filesystem::path& path, const GameGraph& g) { write_text_file(path, serialize(g)); }

} // namespace expforge
