#pragma once

#include <algorithm>
#include <deque>
#include <memory>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "expforge/combinators.hpp"
#include "expforge/graph_json.hpp"
#include "expforge/simulate.hpp"

namespace testsupport {

inline std::string fixture(const std::string& rel) { return std::string(FIXTURE_DIR) + "/" + rel; }

/// The committed toy kb (two games), proto graph and hand-written mapping.
struct Toy {
    std::vector<expforge::GameGraph> kb;
    expforge::Mapping mapping;
    std::unique_ptr<expforge::Sources> src;

    Toy() {
        kb.push_back(expforge::load_graph(fixture("toy/toyA.graph.json")));
        kb.push_back(expforge::load_graph(fixture("toy/toyB.graph.json")));
        const auto j = nlohmann::json::parse(expforge::read_text_file(fixture("toy/mapping.json")));
        mapping = expforge::mapping_from_json(j.at("mapping"), expforge::load_graph(fixture("toy/proto.graph.json")));
        src = std::make_unique<expforge::Sources>(kb, mapping);
    }
    Toy(const Toy&) = delete;
    Toy& operator=(const Toy&) = delete;
};

/// Learned graphs of the three fixture games, in a fixed order.
inline std::vector<expforge::GameGraph> learned_games() {
    std::vector<expforge::GameGraph> out;
    for (const char* g : {"walker", "faller", "climber"})
        out.push_back(expforge::load_graph(fixture(std::string("graphs/") + g + ".graph.json")));
    return out;
}

/// Edge payload with every identifier removed: targets, rule/style/chunk ids
/// and sprite names inside facts. Two edges with equal stripped forms differ
/// only in their endpoints and naming.
inline std::string stripped(const expforge::Edge& e) {
    nlohmann::json j = expforge::edge_to_json(e);
    for (const char* k : {"target", "ruleId", "sNodeId", "fromSNodeId", "lNodeId", "chunkCategoryId"}) j.erase(k);
    for (const char* f : {"fact", "pre", "post"})
        if (j.contains(f)) {
            j[f].erase("otherSpriteId");
            if (j[f].contains("spriteId") && j[f]["spriteId"] != "None") j[f]["spriteId"] = "*";
        }
    return j.dump();
}

inline std::vector<std::string> stripped_edges(const std::vector<expforge::Edge>& edges) {
    std::vector<std::string> out;
    for (const auto& e : edges) out.push_back(stripped(e));
    std::sort(out.begin(), out.end());
    return out;
}

/// Floor of 16px bricks across a 160x128 chunk with the listed columns missing.
inline expforge::LevelChunk floor_chunk(const std::string& sprite, const std::set<int>& gaps = {}) {
    expforge::LevelChunk c;
    c.width = 160;
    c.height = 128;
    for (int col = 0; col < 10; ++col)
        if (!gaps.count(col)) c.placements.push_back({sprite, col * 16, 112, 16, 16});
    std::sort(c.placements.begin(), c.placements.end());
    return c;
}

struct BfsResult {
    bool reachable = false;
    int ticks = -1;
    bool exhausted = false;
};

/// Breadth-first search over the same successor relation the agent uses:
/// one action per tick, states compared by their full entity lists.
inline BfsResult bfs_oracle(const expforge::LevelChunk& chunk, const expforge::AgentSpec& agent, int tickCap,
                            std::size_t stateCap) {
    namespace ef = expforge;
    BfsResult out;
    const auto start = ef::place_player(chunk, agent.playerWidth, agent.playerHeight);
    if (!start) return out;
    const ef::ChunkBounds b = ef::chunk_bounds(chunk, agent, *start);
    const ef::RuleIndex index(agent.rules);
    using Key = std::vector<std::tuple<std::string, std::string, int, int, int, int, int, int>>;
    auto key_of = [](const ef::World& w) {
        Key k;
        for (const auto& e : w.entities) k.emplace_back(e.key, e.sprite, e.x, e.y, e.w, e.h, e.vx, e.vy);
        return k;
    };
    std::set<Key> seen;
    std::deque<std::pair<ef::World, int>> queue;
    const ef::World w0 = ef::chunk_world(chunk, agent, *start);
    seen.insert(key_of(w0));
    queue.emplace_back(w0, 0);
    while (!queue.empty()) {
        auto [w, t] = std::move(queue.front());
        queue.pop_front();
        if (w.find(ef::kPlayerKey)->x >= b.goalX) {
            out.reachable = true;
            out.ticks = t;
            return out;
        }
        if (t >= tickCap) continue;
        for (const auto& a : ef::kAgentActions) {
            ef::World in = w;
            in.inputs = a ? std::vector<ef::Button>{*a} : std::vector<ef::Button>{};
            ef::World next = ef::step_world(in, index);
            next.inputs.clear();
            const ef::Entity* p = next.find(ef::kPlayerKey);
            if (!p || p->y > b.lowest || p->x < 0 || p->y + p->h < 0) continue;
            if (!seen.insert(key_of(next)).second) continue;
            if (seen.size() > stateCap) {
                out.exhausted = true;
                return out;
            }
            queue.emplace_back(std::move(next), t + 1);
        }
    }
    return out;
}

using Script = std::vector<std::vector<expforge::Button>>;

/// An input script completing a definition, found stretch by stretch: A* from
/// the current state to the next chunk boundary, keeping the first state past
/// it. nullopt when a stretch cannot be crossed within the expansion cap. The
/// caller replays the script to judge it.
inline std::optional<Script> play_through(const expforge::GameDefinition& d, int expansionCap = 20000) {
    namespace ef = expforge;
    const ef::Replayer start(d);
    const int playerW = d.entities.at(d.player).w;
    const int goal = int(d.level.size()) * d.chunkWidth - playerW;
    int lowest = 0;
    bool any = false;
    for (const auto& seg : d.level)
        for (const auto& p : seg.chunk.placements) lowest = std::max(lowest, p.y + p.h), any = true;
    if (!any) lowest = d.chunkHeight;
    const ef::RuleIndex index(d.rules);
    const int vmax = ef::max_speed(d.rules);

    Script script;
    ef::World cur = start.world();
    while (cur.find(ef::kPlayerKey)->x < goal) {
        const int target = std::min(goal, (cur.find(ef::kPlayerKey)->x / d.chunkWidth + 1) * d.chunkWidth);
        struct Node {
            ef::World w;
            std::size_t parent;
            int action;
            int g;
        };
        std::vector<Node> nodes{{cur, 0, -1, 0}};
        using Item = std::tuple<int, int, std::size_t>;  // f, -g, node
        std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
        std::unordered_map<std::uint64_t, int> best{{ef::state_key(cur), 0}};
        auto estimate = [&](int x) { return std::max(0, (target - x + vmax - 1) / vmax); };
        open.push({estimate(cur.find(ef::kPlayerKey)->x), 0, 0});
        std::optional<std::size_t> reached;
        int expansions = 0;
        while (!open.empty() && expansions < expansionCap) {
            const auto [f, ng, i] = open.top();
            open.pop();
            if (nodes[i].g > -ng) continue;
            if (nodes[i].w.find(ef::kPlayerKey)->x >= target) {
                reached = i;
                break;
            }
            ++expansions;
            for (int a = 0; a < int(ef::kAgentActions.size()); ++a) {
                ef::World in = nodes[i].w;
                const auto& act = ef::kAgentActions[a];
                in.inputs = act ? std::vector<ef::Button>{*act} : std::vector<ef::Button>{};
                ef::World next = ef::step_world(in, index);
                next.inputs.clear();
                const ef::Entity* p = next.find(ef::kPlayerKey);
                if (!p || p->y > lowest) continue;
                const int g = nodes[i].g + 1;
                auto [slot, fresh] = best.try_emplace(ef::state_key(next), g);
                if (!fresh) {
                    if (slot->second <= g) continue;
                    slot->second = g;
                }
                const int x = p->x;
                nodes.push_back({std::move(next), i, a, g});
                open.push({g + estimate(x), -g, nodes.size() - 1});
            }
        }
        if (!reached) return std::nullopt;
        Script stretch;
        for (std::size_t i = *reached; i != 0; i = nodes[i].parent) {
            const auto& act = ef::kAgentActions[nodes[i].action];
            stretch.push_back(act ? std::vector<ef::Button>{*act} : std::vector<ef::Button>{});
        }
        script.insert(script.end(), stretch.rbegin(), stretch.rend());
        cur = nodes[*reached].w;
    }
    return script;
}

} // namespace testsupport
