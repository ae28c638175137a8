#include "expforge/learn.hpp"

#include <set>

namespace expforge {

LearnedGame learn_game(const Trace& trace, const Spritesheet& sheet, const std::string& graphId, double threshold,
                       Rng& rng, const LearnOptions& opts) {
    LearnedGame out;
    Trace canon;
    std::string player;
    std::map<std::string, std::pair<int, int>> sizes;
    try {
        out.groups = cluster_sprites(sheet, threshold);
        const auto rep = representatives(out.groups);
        for (const auto& f : trace.frames)
            for (const auto& s : f.sprites)
                if (!rep.count(s.spriteId)) throw LoadError("sprite '" + s.spriteId + "' is not in the spritesheet");
        if (!trace.player) throw LoadError("trace names no player sprite");
        if (!rep.count(*trace.player)) throw LoadError("player sprite '" + *trace.player + "' is not in the spritesheet");
        player = rep.at(*trace.player);
        canon = canonicalize_trace(trace, rep);
        for (const auto& s : sheet.sprites) sizes[s.spriteId] = {s.width(), s.height()};
    } catch (const std::exception& e) {
        throw StageError("ingest", e.what());
    }

    try {
        const auto chunks = chunks_from_trace(trace, representatives(out.groups), {player});
        if (chunks.empty()) throw std::invalid_argument("trace has no frames");
        std::vector<int> order(chunks.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
        out.model = learn_model(chunks, order, rng);
    } catch (const std::exception& e) {
        throw StageError("level-model", e.what());
    }

    try {
        out.rules = learn_ruleset(track_trace(canon), opts);
    } catch (const std::exception& e) {
        throw StageError("rule-model", e.what());
    }

    try {
        int playerGroup = -1;
        for (std::size_t i = 0; i < out.groups.size(); ++i)
            for (const auto& s : out.groups[i])
                if (s == player) playerGroup = static_cast<int>(i);
        out.graph = construct_game_graph(graphId, out.model, out.rules.rules, out.groups, playerGroup, sizes);
        for (auto& [id, n] : out.graph.nodes)
            if (const SpriteImage* img = n.role == NodeRole::Sprite ? sheet.find(n.representative()) : nullptr)
                n.pixels = img->pixels;
    } catch (const std::exception& e) {
        throw StageError("graph", e.what());
    }
    return out;
}

} // namespace expforge
