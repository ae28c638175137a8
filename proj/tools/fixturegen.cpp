// Writes the synthetic fixture games: traces simulated from hand-authored
// rules, per-game spritesheets, and the 12-sprite proto sheet.
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>

#include "CLI11.hpp"
#include "expforge/engine.hpp"
#include "expforge/graph_json.hpp"
#include "expforge/ingest.hpp"

using namespace expforge;
namespace fs = std::filesystem;

namespace {

constexpr int kTile = 16;

struct GameSpec {
    std::string name;
    std::string player;
    std::map<char, std::string> legend;
    std::vector<std::string> layout;
    int playerX = 0;
    int playerY = 0;
    int frames = 60;
    Ruleset rules;
    std::map<int, std::vector<Button>> inputs;
    /// frame -> screen x of a respawned player, standing on the ground below
    std::map<int, int> respawns;
};

Rule rule(int id, std::string subject, FactSet conds, Fact pre, Fact post) {
    conds.push_back(pre);
    normalize(conds);
    Rule r{id, std::move(subject), std::move(conds), std::move(pre), std::move(post), std::nullopt};
    validate_rule(r);
    return r;
}

Fact anim(const std::string& s) { return AnimationFact{s, kTile, kTile}; }

/// Gravity start, support override and landing shared by walker and faller.
void add_gravity(Ruleset& rules, const std::string& p, const std::string& ground) {
    rules.push_back(rule(1, p, {anim(p)}, VelocityYFact{0}, VelocityYFact{2}));
    rules.push_back(rule(2, p, {anim(p), RelationshipYFact{ground, 16}}, VelocityYFact{0}, VelocityYFact{0}));
    rules.push_back(rule(3, p, {anim(p), RelationshipYFact{ground, 16}}, VelocityYFact{2}, VelocityYFact{0}));
}

void add_walk(Ruleset& rules, const std::string& p) {
    rules.push_back(rule(4, p, {anim(p), InputFact{Button::Right}}, VelocityXFact{0}, VelocityXFact{2}));
    rules.push_back(rule(5, p, {anim(p), InputFact{Button::Left}}, VelocityXFact{2}, VelocityXFact{0}));
}

GameSpec walker() {
    GameSpec g;
    g.name = "walker";
    g.player = "hero";
    g.legend = {{'#', "brick"}, {'B', "block"}};
    g.layout = {
        "........................",
        "........................",
        "...B.......BB......B....",
        "........................",
        "........................",
        "........................",
        "........................",
        "#######.##.#############",
    };
    g.playerX = 80;
    g.playerY = 96;
    g.frames = 60;
    add_gravity(g.rules, "hero", "brick");
    add_walk(g.rules, "hero");
    g.rules.push_back(rule(6, "hero", {anim("hero"), RelationshipYFact{"brick", 16}, InputFact{Button::Up}},
                           VelocityYFact{0}, VelocityYFact{-8}));
    int id = 7;
    for (int v = -8; v < 0; v += 2) g.rules.push_back(rule(id++, "hero", {anim("hero")}, VelocityYFact{v}, VelocityYFact{v + 2}));
    g.inputs = {{2, {Button::Right}}, {12, {Button::Up}}, {30, {Button::Left}}, {33, {Button::Right}},
                {36, {Button::Left}},  {39, {Button::Right}}, {42, {Button::Up}}};
    return g;
}

GameSpec faller() {
    GameSpec g;
    g.name = "faller";
    g.player = "runner";
    g.legend = {{'#', "dirt"}, {'^', "spike"}};
    g.layout = {
        "........................................",
        "........................................",
        "........................................",
        "........................................",
        "........................................",
        "#######.....^...........................",
        "...##..##########...^...................",
        "########################################",
    };
    g.playerX = 80;
    g.playerY = 64;
    g.frames = 120;
    g.respawns = {{71, 100}};
    add_gravity(g.rules, "runner", "dirt");
    add_walk(g.rules, "runner");
    g.rules.push_back(rule(6, "runner", {anim("runner"), VelocityXFact{2}, RelationshipXFact{"spike", 16}},
                           AnimationFact{"runner", kTile, kTile}, AnimationFact{std::string(kNoneSprite), kTile, kTile}));
    g.inputs = {{2, {Button::Right}}, {73, {Button::Right}}};
    return g;
}

GameSpec climber() {
    GameSpec g;
    g.name = "climber";
    g.player = "climber";
    g.legend = {{'#', "stone"}, {'=', "ledge"}};
    g.layout = {
        "..................................",
        "..................................",
        "..................................",
        "......========.=========..........",
        "..................................",
        "..................................",
        "..................................",
        "##################################",
    };
    g.playerX = 80;
    g.playerY = 96;
    g.frames = 116;
    g.inputs = {{2, {Button::Right}},  {8, {Button::Up}},    {32, {Button::Down}},
                {52, {Button::Left}},  {56, {Button::Right}}, {70, {Button::Up}},
                {90, {Button::Down}},  {108, {Button::Left}}, {111, {Button::Right}}};
    add_walk(g.rules, "climber");
    const std::string p = "climber";
    g.rules.push_back(rule(6, p, {anim(p), InputFact{Button::Up}}, VelocityYFact{0}, VelocityYFact{-2}));
    g.rules.push_back(rule(7, p, {anim(p), RelationshipYFact{"ledge", -16}}, VelocityYFact{-2}, VelocityYFact{0}));
    g.rules.push_back(rule(8, p, {anim(p), InputFact{Button::Down}}, VelocityYFact{0}, VelocityYFact{2}));
    g.rules.push_back(rule(9, p, {anim(p), RelationshipYFact{"stone", 16}}, VelocityYFact{2}, VelocityYFact{0}));
    return g;
}

World initial_world(const GameSpec& g) {
    World w;
    std::map<std::string, int> counters;
    for (std::size_t r = 0; r < g.layout.size(); ++r)
        for (std::size_t c = 0; c < g.layout[r].size(); ++c) {
            auto it = g.legend.find(g.layout[r][c]);
            if (it == g.legend.end()) continue;
            const std::string& s = it->second;
            w.entities.push_back({s + "#" + std::to_string(counters[s]++), s, static_cast<int>(c) * kTile,
                                  static_cast<int>(r) * kTile, kTile, kTile, 0, 0});
        }
    w.entities.push_back({g.player + "#p", g.player, g.playerX, g.playerY, kTile, kTile, 0, 0});
    w.entities.push_back({std::string(kCameraKey), std::string(kCameraKey), 0, 0, kDefaultViewWidth,
                          kDefaultViewHeight, 2, 0});
    std::sort(w.entities.begin(), w.entities.end(), [](const Entity& a, const Entity& b) { return a.key < b.key; });
    return w;
}

int ground_below(const World& w, int x, const std::string& player) {
    int best = 1 << 20;
    for (const auto& e : w.entities)
        if (!is_camera(e) && e.sprite != player && e.x < x + kTile && x < e.x + e.w) best = std::min(best, e.y);
    return best - kTile;
}

Trace simulate(const GameSpec& g) {
    Trace tr;
    tr.game = g.name;
    tr.player = g.player;
    World w = initial_world(g);
    RuleIndex index(g.rules);
    int respawned = 0;
    for (int t = 0; t < g.frames; ++t) {
        if (auto r = g.respawns.find(t); r != g.respawns.end()) {
            const Entity* cam = w.find(kCameraKey);
            const int x = cam->x + r->second;
            w.entities.push_back({g.player + "#r" + std::to_string(respawned++), g.player, x,
                                  ground_below(w, x, g.player), kTile, kTile, 0, 0});
            std::sort(w.entities.begin(), w.entities.end(),
                      [](const Entity& a, const Entity& b) { return a.key < b.key; });
        }
        auto in = g.inputs.find(t);
        w.inputs = in == g.inputs.end() ? std::vector<Button>{} : in->second;
        const Entity* cam = w.find(kCameraKey);
        FrameObservation f;
        f.t = t;
        f.cameraX = cam->x;
        f.cameraY = cam->y;
        f.inputs = w.inputs;
        const View view{cam->x, cam->y, kDefaultViewWidth, kDefaultViewHeight};
        for (const auto& e : w.entities)
            if (!is_camera(e) && view.contains(e)) f.sprites.push_back({e.sprite, e.x, e.y, e.w, e.h});
        std::sort(f.sprites.begin(), f.sprites.end());
        tr.frames.push_back(std::move(f));
        w = step_world(w, index);
    }
    return tr;
}

Pixels blank() { return Pixels(kTile, std::vector<int>(kTile, 0)); }

/// Distinct 16x16 palette art, one pattern per style.
Pixels art(const std::string& style, int variant) {
    Pixels p = blank();
    auto set = [&](int r, int c, int v) {
        if (r >= 0 && r < kTile && c >= 0 && c < kTile) p[r][c] = v;
    };
    if (style == "figure") {
        for (int r = 1; r < 6; ++r)
            for (int c = 5; c < 11; ++c) set(r, c, 2);
        for (int r = 6; r < 12; ++r)
            for (int c = 4; c < 12; ++c) set(r, c, 3);
        for (int r = 12; r < 16; ++r) {
            set(r, 5, 4);
            set(r, 6, 4);
            set(r, 9, 4);
            set(r, 10, 4);
        }
    } else if (style == "brick") {
        for (int r = 0; r < kTile; ++r)
            for (int c = 0; c < kTile; ++c) set(r, c, (r % 4 == 0 || (c + (r / 4) * 4) % 8 == 0) ? 5 : 6);
    } else if (style == "spike") {
        for (int r = 0; r < kTile; ++r)
            for (int c = 8 - r / 2; c < 8 + r / 2; ++c) set(r, c, 7);
    } else if (style == "cloud") {
        for (int r = 4; r < 12; ++r)
            for (int c = 1; c < 15; ++c) set(r, c, ((r + c) % 3 == 0) ? 8 : 9);
    } else if (style == "grass") {
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < kTile; ++c) set(r, c, 10);
        for (int r = 4; r < kTile; ++r)
            for (int c = 0; c < kTile; ++c) set(r, c, (r * 7 + c * 3) % 5 == 0 ? 12 : 11);
    } else if (style == "ring") {
        for (int r = 0; r < kTile; ++r)
            for (int c = 0; c < kTile; ++c) {
                const int d = (r - 8) * (r - 8) + (c - 8) * (c - 8);
                if (d < 49 && d > 16) set(r, c, 13);
            }
    } else if (style == "stripe") {
        for (int r = 0; r < kTile; ++r)
            for (int c = 0; c < kTile; ++c) set(r, c, (c / 2) % 2 ? 14 : 1);
    } else if (style == "lattice") {
        for (int r = 0; r < kTile; ++r)
            for (int c = 0; c < kTile; ++c) set(r, c, (r % 5 == 0 || c % 5 == 0) ? 15 : 0);
    }
    // family variants differ in a few isolated pixels
    for (int k = 0; k < variant; ++k) set(2 + 5 * k, 13 - 4 * k, 1 + k);
    return p;
}

Spritesheet game_sheet(const std::vector<std::pair<std::string, std::string>>& sprites) {
    Spritesheet s;
    for (const auto& [id, style] : sprites) s.sprites.push_back({id, art(style, 0)});
    return s;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
    write_text_file(path, canonical_dump(j));
    std::cout << "wrote " << path.string() << "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"fixture generator"};
    std::string out = "fixtures";
    app.add_option("--out", out, "output directory");
    CLI11_PARSE(app, argc, argv);

    const fs::path dir(out);
    struct Entry {
        GameSpec spec;
        std::vector<std::pair<std::string, std::string>> sprites;
    };
    std::vector<Entry> games = {
        {walker(), {{"hero", "figure"}, {"brick", "brick"}, {"block", "cloud"}}},
        {faller(), {{"runner", "ring"}, {"dirt", "grass"}, {"spike", "spike"}}},
        {climber(), {{"climber", "stripe"}, {"stone", "lattice"}, {"ledge", "brick"}}},
    };
    // the climber's ledge reuses brick art; give it a variant so sheets stay distinct
    for (auto& e : games) {
        Trace tr = simulate(e.spec);
        write_json(dir / (e.spec.name + ".trace.json"), trace_to_json(tr));
        Spritesheet sheet = game_sheet(e.sprites);
        if (e.spec.name == "climber") sheet.sprites[2].pixels = art("brick", 3);
        write_json(dir / (e.spec.name + ".sheet.json"), spritesheet_to_json(sheet));
        write_json(dir / (e.spec.name + ".rules.json"), ruleset_to_json(e.spec.rules));
    }

    Spritesheet proto;
    const std::vector<std::pair<std::string, std::string>> families = {
        {"knight", "figure"}, {"moss", "grass"}, {"thorn", "spike"}, {"slab", "brick"}};
    for (const auto& [name, style] : families)
        for (int v = 0; v < 3; ++v) proto.sprites.push_back({name + "_" + std::to_string(v + 1), art(style, v)});
    write_json(dir / "proto.sheet.json", spritesheet_to_json(proto));
    return 0;
}
