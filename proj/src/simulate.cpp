#include "expforge/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <queue>
#include <set>
#include <unordered_map>

#include "expforge/construct.hpp"
#include "expforge/hashing.hpp"
#include "expforge/log.hpp"

namespace expforge {

namespace {

bool overlaps(int ax, int ay, int aw, int ah, const SpritePlacement& b) {
    return ax < b.x + b.w && b.x < ax + aw && ay < b.y + b.h && b.y < ay + ah;
}

std::string entity_key(std::size_t i) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "e%05zu", i);
    return buf;
}

int lowest_point(const std::vector<SpritePlacement>& sprites, int fallback) {
    int lowest = 0;
    for (const auto& s : sprites) lowest = std::max(lowest, s.y + s.h);
    return sprites.empty() ? fallback : lowest;
}

std::vector<Button> action_inputs(const std::optional<Button>& a) {
    return a ? std::vector<Button>{*a} : std::vector<Button>{};
}

std::vector<std::string> fact_sprites(const Fact& f) {
    if (const auto* a = std::get_if<AnimationFact>(&f)) return {a->spriteId};
    if (const auto* x = std::get_if<RelationshipXFact>(&f)) return {x->otherSpriteId};
    if (const auto* y = std::get_if<RelationshipYFact>(&f)) return {y->otherSpriteId};
    return {};
}

nlohmann::json placement_json(const SpritePlacement& p) {
    return {{"sprite", p.spriteId}, {"x", p.x}, {"y", p.y}, {"w", p.w}, {"h", p.h}};
}

template <typename T>
T field(const nlohmann::json& j, const char* key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) throw ExportError(where + ": missing '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ExportError(where + ": bad '" + key + "'");
    }
}

} // namespace

std::optional<AgentSpec> agent_for(const GameGraph& g) {
    const GameGraphNode* p = g.player();
    if (!p) return std::nullopt;
    AgentSpec a;
    a.rules = rules_from_graph(g);
    a.playerSprite = p->representative();
    if (p->spriteWidth > 0 && p->spriteHeight > 0) {
        a.playerWidth = p->spriteWidth;
        a.playerHeight = p->spriteHeight;
    }
    return a;
}

std::optional<std::pair<int, int>> place_player(const LevelChunk& chunk, int w, int h) {
    if (chunk.placements.empty()) {
        if (w > chunk.width || h > chunk.height) return std::nullopt;
        return std::pair{0, chunk.height - h};
    }
    std::vector<const SpritePlacement*> supports;
    for (const auto& s : chunk.placements) supports.push_back(&s);
    std::sort(supports.begin(), supports.end(), [](const SpritePlacement* a, const SpritePlacement* b) {
        if (a->x != b->x) return a->x < b->x;
        return a->y > b->y;
    });
    for (const SpritePlacement* s : supports) {
        const int x = s->x, y = s->y - h;
        if (x < 0 || y < 0 || x + w > chunk.width) continue;
        bool free = true;
        for (const auto& o : chunk.placements) free = free && !overlaps(x, y, w, h, o);
        if (free) return std::pair{x, y};
    }
    return std::nullopt;
}

World chunk_world(const LevelChunk& chunk, const AgentSpec& agent, std::pair<int, int> start, int xOffset) {
    World w;
    for (std::size_t i = 0; i < chunk.placements.size(); ++i) {
        const auto& p = chunk.placements[i];
        w.entities.push_back({entity_key(i), p.spriteId, p.x + xOffset, p.y, p.w, p.h, 0, 0});
    }
    w.entities.push_back({std::string(kPlayerKey), agent.playerSprite, start.first, start.second, agent.playerWidth,
                          agent.playerHeight, 0, 0});
    std::sort(w.entities.begin(), w.entities.end(), [](const Entity& a, const Entity& b) { return a.key < b.key; });
    return w;
}

ChunkBounds chunk_bounds(const LevelChunk& chunk, const AgentSpec& agent, std::pair<int, int> start) {
    return {chunk.width - agent.playerWidth, lowest_point(chunk.placements, chunk.height), start.first};
}

std::uint64_t state_key(const World& w) {
    // word-wise mixing; byte-wise FNV dominated the search
    std::uint64_t h = kFnvOffset;
    auto mix = [&](std::uint64_t v) {
        h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        h *= kFnvPrime;
    };
    for (const auto& e : w.entities) {
        mix(std::hash<std::string>{}(e.key));
        mix(std::hash<std::string>{}(e.sprite));
        for (int v : {e.x, e.y, e.w, e.h, e.vx, e.vy}) mix(static_cast<std::uint32_t>(v));
    }
    return h;
}

int max_speed(const Ruleset& rules) {
    int v = 1;
    auto see = [&](const Fact& f) {
        if (const auto* x = std::get_if<VelocityXFact>(&f)) v = std::max(v, std::abs(x->vx));
    };
    for (const auto& r : rules) {
        see(r.pre);
        see(r.post);
        for (const auto& c : r.conditions) see(c);
    }
    return v;
}

ChallengeStats astar_chunk(const LevelChunk& chunk, const AgentSpec& agent, const AStarOptions& opts) {
    ChallengeStats stats;
    const auto start = place_player(chunk, agent.playerWidth, agent.playerHeight);
    if (!start) return stats;
    const ChunkBounds b = chunk_bounds(chunk, agent, *start);
    const int vmax = max_speed(agent.rules);
    const RuleIndex index(agent.rules);
    auto progress = [&](int x) {
        if (b.goalX <= b.startX) return 1.0;
        return std::clamp(static_cast<double>(x - b.startX) / (b.goalX - b.startX), 0.0, 1.0);
    };
    auto estimate = [&](int x) { return std::max(0, (b.goalX - x + vmax - 1) / vmax); };

    struct Item {
        int f;
        int g;
        std::uint64_t seq;
        std::size_t node;
        bool operator>(const Item& o) const { return std::tie(f, o.g, seq) > std::tie(o.f, g, o.seq); }
    };
    std::vector<World> worlds{chunk_world(chunk, agent, *start)};
    std::unordered_map<std::uint64_t, int> best{{state_key(worlds[0]), 0}};
    std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
    std::uint64_t seq = 0;
    open.push({estimate(start->first), 0, seq++, 0});
    stats.maxDistNorm = progress(start->first);

    while (!open.empty() && stats.expansions < opts.expansionCap) {
        const Item it = open.top();
        open.pop();
        const World w = worlds[it.node];
        if (best.at(state_key(w)) < it.g) continue;
        const Entity* p = w.find(kPlayerKey);
        if (p->x >= b.goalX) {
            stats.completed = true;
            stats.ticks = it.g;
            stats.maxDistNorm = 1.0;
            return stats;
        }
        if (it.g >= opts.tickCap) continue;
        ++stats.expansions;
        bool died = false, fell = false;
        for (const auto& a : kAgentActions) {
            World in = w;
            in.inputs = action_inputs(a);
            World next = step_world(in, index);
            next.inputs.clear();
            const Entity* np = next.find(kPlayerKey);
            if (!np) {
                died = true;
                continue;
            }
            if (np->y > b.lowest) {
                fell = true;
                continue;
            }
            if (np->x < 0 || np->y + np->h < 0) continue;
            stats.maxDistNorm = std::max(stats.maxDistNorm, progress(np->x));
            const std::uint64_t key = state_key(next);
            const int g = it.g + 1;
            auto [slot, fresh] = best.try_emplace(key, g);
            if (!fresh) {
                if (slot->second <= g) continue;
                slot->second = g;
            }
            const int x = np->x;
            worlds.push_back(std::move(next));
            open.push({g + estimate(x), g, seq++, worlds.size() - 1});
        }
        stats.deaths += died;
        stats.falls += fell;
    }
    return stats;
}

double quantile(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) return 0.0;
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

MetricSummary summarize(std::vector<double> samples) {
    std::sort(samples.begin(), samples.end());
    MetricSummary m;
    m.q1 = quantile(samples, 0.25);
    m.median = quantile(samples, 0.5);
    m.q3 = quantile(samples, 0.75);
    m.samples = std::move(samples);
    return m;
}

StatVector GameReference::stats() const {
    StatVector v{};
    for (std::size_t m = 0; m < 3; ++m) {
        v[3 * m] = metrics[m].q1;
        v[3 * m + 1] = metrics[m].median;
        v[3 * m + 2] = metrics[m].q3;
    }
    return v;
}

StatVector stat_vector(const std::vector<ChallengeStats>& stats) {
    std::array<std::vector<double>, 3> cols;
    for (const auto& s : stats) {
        cols[0].push_back(s.maxDistNorm);
        cols[1].push_back(s.deaths);
        cols[2].push_back(s.falls);
    }
    GameReference r;
    for (std::size_t m = 0; m < 3; ++m) r.metrics[m] = summarize(cols[m]);
    return r.stats();
}

ChallengeStats sample_chunk_stats(const LevelDesignModel& model, const std::optional<AgentSpec>& agent, Rng& rng,
                                  const AStarOptions& opts) {
    if (!agent || model.lNodes.empty()) return {};
    const LNode& l = model.lNodes[rng.below(model.lNodes.size())];
    const SampledChunk sc = sample_chunk(model, l.id, rng);
    return astar_chunk(sc.chunk, *agent, opts);
}

GameReference build_reference(const GameGraph& original, Rng& rng, int samples, const AStarOptions& opts) {
    const LevelDesignModel model = level_model_from_graph(original);
    const auto agent = agent_for(original);
    std::array<std::vector<double>, 3> cols;
    for (int i = 0; i < samples; ++i) {
        const ChallengeStats s = sample_chunk_stats(model, agent, rng, opts);
        cols[0].push_back(s.maxDistNorm);
        cols[1].push_back(s.deaths);
        cols[2].push_back(s.falls);
    }
    GameReference r;
    r.graphId = original.id;
    for (std::size_t m = 0; m < 3; ++m) r.metrics[m] = summarize(cols[m]);
    return r;
}

std::vector<std::string> walk_categories(const LevelDesignModel& model, Rng& rng, int walkCap) {
    std::vector<std::string> out;
    if (model.lNodes.empty()) return out;
    const LNode* cur = &model.lNodes.front();
    for (const auto& l : model.lNodes)
        if (l.avgNormPos < cur->avgNormPos) cur = &l;
    for (int visit = 0; visit < walkCap && cur; ++visit) {
        const int lo = std::min(cur->repeatsMin, cur->repeatsMax);
        const int hi = std::max(cur->repeatsMin, cur->repeatsMax);
        const int n = lo + static_cast<int>(rng.below(static_cast<std::size_t>(hi - lo + 1)));
        for (int i = 0; i < std::max(1, n); ++i) out.push_back(cur->id);
        std::vector<std::pair<const LNode*, double>> next;
        double total = 0.0;
        for (const auto& [to, p] : cur->transitions)
            if (const LNode* l = model.find_l(to); l && p > 0.0) {
                next.push_back({l, p});
                total += p;
            }
        if (next.empty()) break;
        double r = rng.uniform() * total;
        cur = next.back().first;
        for (const auto& [l, p] : next) {
            r -= p;
            if (r < 0.0) {
                cur = l;
                break;
            }
        }
    }
    return out;
}

GeneratedLevel generate_level(const GameGraph& g, Rng& rng, const LevelOptions& opts) {
    const LevelDesignModel model = level_model_from_graph(g);
    const auto agent = agent_for(g);
    if (!agent) throw LevelError("graph '" + g.id + "' has no player node", {});
    if (model.lNodes.empty()) throw LevelError("graph '" + g.id + "' has no chunk categories", {});
    GeneratedLevel best;
    std::size_t bestDone = 0;
    for (int attempt = 1; attempt <= opts.attemptCap; ++attempt) {
        GeneratedLevel cur;
        cur.attempts = attempt;
        bool ok = true;
        for (const auto& category : walk_categories(model, rng, opts.walkCap)) {
            bool done = false;
            for (int r = 0; r < opts.chunkRetries && !done; ++r) {
                SampledChunk sc = sample_chunk(model, category, rng);
                const ChallengeStats s = astar_chunk(sc.chunk, *agent, opts.astar);
                if (!s.completed) continue;
                cur.level.push_back({category, std::move(sc.chunk)});
                cur.stats.push_back(s);
                done = true;
            }
            if (!done) {
                ok = false;
                break;
            }
        }
        if (ok) return cur;
        if (cur.level.size() >= bestDone) {
            bestDone = cur.level.size();
            best = std::move(cur);
        }
    }
    best.attempts = opts.attemptCap;
    throw LevelError("no completable level for '" + g.id + "' in " + std::to_string(opts.attemptCap) + " attempts",
                     std::move(best));
}

GameDefinition export_game(const GameGraph& g, const Level& level, const Spritesheet& sheet, std::uint64_t seed) {
    const GameGraphNode* player = g.player();
    if (!player) throw ExportError("graph '" + g.id + "' has no player node");
    if (level.empty()) throw ExportError("level is empty");
    GameDefinition d;
    d.chunkWidth = g.chunkWidth;
    d.chunkHeight = g.chunkHeight;
    d.rngSeed = seed;
    d.player = player->representative();
    for (const auto& [id, n] : g.nodes) {
        if (n.role != NodeRole::Sprite) continue;
        EntityDef e;
        e.isPlayer = n.isPlayer;
        e.spriteRef = n.representative();
        if (const SpriteImage* img = sheet.find(e.spriteRef)) e.pixels = img->pixels;
        else e.pixels = n.pixels;
        e.w = n.spriteWidth > 0 ? n.spriteWidth : (e.pixels.empty() ? 16 : static_cast<int>(e.pixels.front().size()));
        e.h = n.spriteHeight > 0 ? n.spriteHeight : (e.pixels.empty() ? 16 : static_cast<int>(e.pixels.size()));
        d.entities.emplace(n.representative(), std::move(e));
    }
    for (const auto& seg : level)
        for (const auto& p : seg.chunk.placements)
            if (!d.entities.count(p.spriteId))
                throw ExportError("level sprite '" + p.spriteId + "' has no entity");
    d.level = level;

    auto known = [&](const std::string& s) { return s == kNoneSprite || d.entities.count(s) > 0; };
    int next = 1;
    for (const auto& r : rules_from_graph(g)) {
        bool ok = known(r.subject);
        for (const auto& f : r.conditions)
            for (const auto& s : fact_sprites(f)) ok = ok && known(s);
        for (const auto& s : fact_sprites(r.post)) ok = ok && known(s);
        if (!ok) {
            if (r.subject != kCameraSubject) log_warn("export: dropping rule naming an unexported sprite");
            continue;
        }
        Rule copy = r;
        copy.id = next++;
        d.rules.push_back(std::move(copy));
    }
    const EntityDef& pe = d.entities.at(d.player);
    const auto start = place_player(level.front().chunk, pe.w, pe.h);
    if (!start) throw ExportError("no start position for the player in the first chunk");
    std::tie(d.startX, d.startY) = *start;
    return d;
}

nlohmann::json definition_to_json(const GameDefinition& d) {
    nlohmann::json ents = nlohmann::json::object();
    for (const auto& [id, e] : d.entities)
        ents[id] = {{"w", e.w}, {"h", e.h}, {"isPlayer", e.isPlayer}, {"spriteRef", e.spriteRef}, {"pixels", e.pixels}};
    nlohmann::json level = nlohmann::json::array();
    for (const auto& seg : d.level) {
        nlohmann::json sprites = nlohmann::json::array();
        for (const auto& p : seg.chunk.placements) sprites.push_back(placement_json(p));
        level.push_back({{"category", seg.category}, {"sprites", sprites}});
    }
    return {{"entities", ents},
            {"rules", ruleset_to_json(d.rules)},
            {"level", level},
            {"chunk", {{"w", d.chunkWidth}, {"h", d.chunkHeight}}},
            {"player", d.player},
            {"start", {{"x", d.startX}, {"y", d.startY}}},
            {"camera", d.camera},
            {"rngSeed", d.rngSeed}};
}

GameDefinition definition_from_json(const nlohmann::json& j) {
    GameDefinition d;
    const auto ents = field<nlohmann::json>(j, "entities", "definition");
    if (!ents.is_object()) throw ExportError("definition: 'entities' must be an object");
    for (const auto& [id, e] : ents.items()) {
        const std::string where = "definition.entities." + id;
        EntityDef ed;
        ed.w = field<int>(e, "w", where);
        ed.h = field<int>(e, "h", where);
        ed.isPlayer = field<bool>(e, "isPlayer", where);
        ed.spriteRef = field<std::string>(e, "spriteRef", where);
        if (e.contains("pixels")) ed.pixels = field<Pixels>(e, "pixels", where);
        d.entities.emplace(id, std::move(ed));
    }
    try {
        d.rules = ruleset_from_json(field<nlohmann::json>(j, "rules", "definition"));
    } catch (const ExportError&) {
        throw;
    } catch (const std::exception& e) {
        throw ExportError(std::string("definition.rules: ") + e.what());
    }
    const auto chunk = field<nlohmann::json>(j, "chunk", "definition");
    d.chunkWidth = field<int>(chunk, "w", "definition.chunk");
    d.chunkHeight = field<int>(chunk, "h", "definition.chunk");
    const auto level = field<nlohmann::json>(j, "level", "definition");
    if (!level.is_array()) throw ExportError("definition: 'level' must be an array");
    for (std::size_t i = 0; i < level.size(); ++i) {
        const std::string where = "definition.level[" + std::to_string(i) + "]";
        LevelSegment seg;
        seg.category = field<std::string>(level[i], "category", where);
        seg.chunk.width = d.chunkWidth;
        seg.chunk.height = d.chunkHeight;
        for (const auto& p : field<nlohmann::json>(level[i], "sprites", where)) {
            SpritePlacement sp;
            sp.spriteId = field<std::string>(p, "sprite", where);
            sp.x = field<int>(p, "x", where);
            sp.y = field<int>(p, "y", where);
            sp.w = field<int>(p, "w", where);
            sp.h = field<int>(p, "h", where);
            if (!d.entities.count(sp.spriteId)) throw ExportError(where + ": unknown sprite '" + sp.spriteId + "'");
            seg.chunk.placements.push_back(sp);
        }
        d.level.push_back(std::move(seg));
    }
    d.player = field<std::string>(j, "player", "definition");
    auto pe = d.entities.find(d.player);
    if (pe == d.entities.end() || !pe->second.isPlayer)
        throw ExportError("definition: player '" + d.player + "' is not a player entity");
    const auto start = field<nlohmann::json>(j, "start", "definition");
    d.startX = field<int>(start, "x", "definition.start");
    d.startY = field<int>(start, "y", "definition.start");
    d.camera = field<std::string>(j, "camera", "definition");
    d.rngSeed = field<std::uint64_t>(j, "rngSeed", "definition");
    return d;
}

std::string_view outcome_name(Outcome o) {
    switch (o) {
    case Outcome::Playing:
        return "playing";
    case Outcome::Complete:
        return "complete";
    case Outcome::Dead:
        return "dead";
    }
    return "playing";
}

Replayer::Replayer(const GameDefinition& def) : rules_(def.rules), index_(rules_) {
    const EntityDef& pe = def.entities.at(def.player);
    playerW_ = pe.w;
    std::vector<SpritePlacement> all;
    for (std::size_t c = 0; c < def.level.size(); ++c)
        for (auto p : def.level[c].chunk.placements) {
            p.x += static_cast<int>(c) * def.chunkWidth;
            all.push_back(p);
        }
    for (std::size_t i = 0; i < all.size(); ++i) {
        const auto& p = all[i];
        world_.entities.push_back({entity_key(i), p.spriteId, p.x, p.y, p.w, p.h, 0, 0});
    }
    world_.entities.push_back({std::string(kPlayerKey), def.player, def.startX, def.startY, pe.w, pe.h, 0, 0});
    std::sort(world_.entities.begin(), world_.entities.end(),
              [](const Entity& a, const Entity& b) { return a.key < b.key; });
    goalX_ = static_cast<int>(def.level.size()) * def.chunkWidth - pe.w;
    lowest_ = lowest_point(all, def.chunkHeight);
    outcome_ = classify();
}

Outcome Replayer::classify() const {
    const Entity* p = world_.find(kPlayerKey);
    if (!p || p->y > lowest_) return Outcome::Dead;
    if (p->x >= goalX_) return Outcome::Complete;
    return Outcome::Playing;
}

Outcome Replayer::step(const std::vector<Button>& inputs) {
    if (outcome_ != Outcome::Playing) return outcome_;
    world_.inputs = inputs;
    world_ = step_world(world_, index_);
    world_.inputs.clear();
    ++tick_;
    outcome_ = classify();
    return outcome_;
}

std::vector<std::uint64_t> replay_hashes(const GameDefinition& def, const std::vector<std::vector<Button>>& script) {
    Replayer r(def);
    std::vector<std::uint64_t> out{fact_set_hash(r.world())};
    for (const auto& inputs : script) {
        r.step(inputs);
        out.push_back(fact_set_hash(r.world()));
    }
    return out;
}

std::vector<std::vector<Button>> input_script_from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw std::invalid_argument("input script must be an array of button arrays");
    std::vector<std::vector<Button>> out;
    for (const auto& tick : j) {
        std::vector<Button> buttons;
        for (const auto& b : tick) {
            const auto parsed = b.is_string() ? parse_button(b.get<std::string>()) : std::nullopt;
            if (!parsed) throw std::invalid_argument("input script: unknown button " + b.dump());
            buttons.push_back(*parsed);
        }
        std::sort(buttons.begin(), buttons.end());
        buttons.erase(std::unique(buttons.begin(), buttons.end()), buttons.end());
        out.push_back(std::move(buttons));
    }
    return out;
}

nlohmann::json input_script_to_json(const std::vector<std::vector<Button>>& script) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& tick : script) {
        nlohmann::json t = nlohmann::json::array();
        for (Button b : tick) t.push_back(std::string(button_name(b)));
        j.push_back(t);
    }
    return j;
}

} // namespace expforge
