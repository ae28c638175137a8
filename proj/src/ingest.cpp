#include "expforge/ingest.hpp"

#include <algorithm>
#include <numeric>

#include "expforge/graph_json.hpp"

namespace expforge {

namespace {

using nlohmann::json;

int get_int(const json& j, const char* key, const std::string& where) {
    if (!j.is_object() || !j.contains(key) || !j.at(key).is_number_integer())
        throw LoadError(where + ": missing or non-integer field '" + key + "'");
    return j.at(key).get<int>();
}

std::string get_str(const json& j, const char* key, const std::string& where) {
    if (!j.is_object() || !j.contains(key) || !j.at(key).is_string())
        throw LoadError(where + ": missing or non-string field '" + key + "'");
    return j.at(key).get<std::string>();
}

Pixels padded(const Pixels& p) {
    const int h = std::max<int>(3, static_cast<int>(p.size()));
    int w = 3;
    for (const auto& row : p) w = std::max<int>(w, static_cast<int>(row.size()));
    Pixels out(h, std::vector<int>(w, 0));
    for (std::size_t r = 0; r < p.size(); ++r)
        for (std::size_t c = 0; c < p[r].size(); ++c) out[r][c] = p[r][c];
    return out;
}

} // namespace

Trace trace_from_json(const json& j) {
    Trace tr;
    tr.game = j.contains("game") ? get_str(j, "game", "trace") : "";
    if (j.contains("player")) tr.player = get_str(j, "player", "trace");
    if (j.contains("view")) {
        tr.viewWidth = get_int(j.at("view"), "w", "trace.view");
        tr.viewHeight = get_int(j.at("view"), "h", "trace.view");
    }
    if (!j.contains("frames") || !j.at("frames").is_array()) throw LoadError("trace: missing 'frames' array");
    const json& frames = j.at("frames");
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const json& jf = frames[i];
        const std::string where = "frame " + std::to_string(i);
        FrameObservation f;
        f.t = get_int(jf, "t", where);
        if (!jf.contains("camera")) throw LoadError(where + ": missing field 'camera'");
        f.cameraX = get_int(jf.at("camera"), "x", where + ".camera");
        f.cameraY = get_int(jf.at("camera"), "y", where + ".camera");
        if (jf.contains("inputs")) {
            for (const auto& b : jf.at("inputs")) {
                const auto btn = b.is_string() ? parse_button(b.get<std::string>()) : std::nullopt;
                if (!btn) throw LoadError(where + ": unknown input " + b.dump());
                f.inputs.push_back(*btn);
            }
            std::sort(f.inputs.begin(), f.inputs.end());
            f.inputs.erase(std::unique(f.inputs.begin(), f.inputs.end()), f.inputs.end());
        }
        if (!jf.contains("sprites") || !jf.at("sprites").is_array())
            throw LoadError(where + ": missing 'sprites' array");
        for (const auto& js : jf.at("sprites")) {
            SpritePlacement s{get_str(js, "spriteId", where), get_int(js, "x", where), get_int(js, "y", where),
                              get_int(js, "w", where), get_int(js, "h", where)};
            if (s.w <= 0 || s.h <= 0) throw LoadError(where + ": sprite '" + s.spriteId + "' has non-positive size");
            const int rx = s.x - f.cameraX, ry = s.y - f.cameraY;
            if (rx < 0 || ry < 0 || rx + s.w > tr.viewWidth || ry + s.h > tr.viewHeight)
                throw LoadError(where + ": sprite '" + s.spriteId + "' lies outside the camera view");
            f.sprites.push_back(std::move(s));
        }
        if (!tr.frames.empty() && f.t <= tr.frames.back().t) {
            if (f.t == tr.frames.back().t)
                throw LoadError(where + ": duplicate t=" + std::to_string(f.t));
            throw LoadError(where + ": t=" + std::to_string(f.t) + " is not increasing");
        }
        tr.frames.push_back(std::move(f));
    }
    return tr;
}

json trace_to_json(const Trace& tr) {
    json j;
    j["game"] = tr.game;
    if (tr.player) j["player"] = *tr.player;
    j["view"] = {{"w", tr.viewWidth}, {"h", tr.viewHeight}};
    j["frames"] = json::array();
    for (const auto& f : tr.frames) {
        json jf;
        jf["t"] = f.t;
        jf["camera"] = {{"x", f.cameraX}, {"y", f.cameraY}};
        jf["inputs"] = json::array();
        for (Button b : f.inputs) jf["inputs"].push_back(std::string(button_name(b)));
        jf["sprites"] = json::array();
        for (const auto& s : f.sprites)
            jf["sprites"].push_back({{"spriteId", s.spriteId}, {"x", s.x}, {"y", s.y}, {"w", s.w}, {"h", s.h}});
        j["frames"].push_back(std::move(jf));
    }
    return j;
}

Trace load_trace(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        throw LoadError(path.string() + ": " + e.what());
    } catch (const std::runtime_error& e) {
        throw LoadError(e.what());
    }
    return trace_from_json(j);
}

const SpriteImage* Spritesheet::find(std::string_view id) const {
    for (const auto& s : sprites)
        if (s.spriteId == id) return &s;
    return nullptr;
}

Spritesheet spritesheet_from_json(const json& j) {
    if (!j.contains("sprites") || !j.at("sprites").is_array()) throw LoadError("spritesheet: missing 'sprites' array");
    Spritesheet sheet;
    std::set<std::string> seen;
    for (const auto& js : j.at("sprites")) {
        SpriteImage img;
        img.spriteId = get_str(js, "spriteId", "spritesheet");
        if (!seen.insert(img.spriteId).second) throw LoadError("spritesheet: duplicate spriteId '" + img.spriteId + "'");
        if (!js.contains("pixels") || !js.at("pixels").is_array() || js.at("pixels").empty())
            throw LoadError("spritesheet: sprite '" + img.spriteId + "' has no pixels");
        for (const auto& row : js.at("pixels")) {
            std::vector<int> r;
            for (const auto& v : row) {
                if (!v.is_number_integer() || v.get<int>() < 0)
                    throw LoadError("spritesheet: sprite '" + img.spriteId + "' has a bad palette index");
                r.push_back(v.get<int>());
            }
            if (r.empty() || (!img.pixels.empty() && r.size() != img.pixels.front().size()))
                throw LoadError("spritesheet: sprite '" + img.spriteId + "' is not rectangular");
            img.pixels.push_back(std::move(r));
        }
        sheet.sprites.push_back(std::move(img));
    }
    return sheet;
}

json spritesheet_to_json(const Spritesheet& sheet) {
    json arr = json::array();
    for (const auto& s : sheet.sprites) arr.push_back({{"spriteId", s.spriteId}, {"pixels", s.pixels}});
    return {{"sprites", arr}};
}

Spritesheet load_spritesheet(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        throw LoadError(path.string() + ": " + e.what());
    } catch (const std::runtime_error& e) {
        throw LoadError(e.what());
    }
    return spritesheet_from_json(j);
}

std::vector<Patch> sprite_bag_features(const Pixels& pixels) {
    const Pixels p = padded(pixels);
    const int h = static_cast<int>(p.size()), w = static_cast<int>(p.front().size());
    std::vector<Patch> bag;
    bag.reserve(static_cast<std::size_t>((h - 2) * (w - 2)));
    for (int r = 0; r + 3 <= h; ++r)
        for (int c = 0; c + 3 <= w; ++c) {
            Patch patch{};
            for (int i = 0; i < 3; ++i)
                for (int k = 0; k < 3; ++k) patch[i * 3 + k] = p[r + i][c + k];
            bag.push_back(patch);
        }
    std::sort(bag.begin(), bag.end());
    return bag;
}

double bag_distance(const std::vector<Patch>& a, const std::vector<Patch>& b) {
    if (a.empty() && b.empty()) return 0.0;
    std::size_t common = 0;
    auto i = a.begin(), k = b.begin();
    while (i != a.end() && k != b.end()) {
        if (*i < *k) ++i;
        else if (*k < *i) ++k;
        else {
            ++common;
            ++i;
            ++k;
        }
    }
    const double sym = static_cast<double>(a.size() + b.size() - 2 * common);
    return sym / static_cast<double>(a.size() + b.size());
}

double sprite_distance(const Pixels& a, const Pixels& b) {
    return bag_distance(sprite_bag_features(a), sprite_bag_features(b));
}

std::vector<std::vector<std::string>> cluster_sprites(const Spritesheet& sheet, double threshold) {
    const std::size_t n = sheet.sprites.size();
    std::vector<std::vector<Patch>> bags;
    bags.reserve(n);
    for (const auto& s : sheet.sprites) bags.push_back(sprite_bag_features(s.pixels));
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto root = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = i + 1; k < n; ++k)
            if (bag_distance(bags[i], bags[k]) < threshold) parent[root(i)] = root(k);
    std::map<std::size_t, std::vector<std::string>> byRoot;
    for (std::size_t i = 0; i < n; ++i) byRoot[root(i)].push_back(sheet.sprites[i].spriteId);
    std::vector<std::vector<std::string>> groups;
    for (auto& [r, g] : byRoot) {
        std::sort(g.begin(), g.end());
        groups.push_back(std::move(g));
    }
    std::sort(groups.begin(), groups.end());
    return groups;
}

std::map<std::string, std::string> representatives(const std::vector<std::vector<std::string>>& groups) {
    std::map<std::string, std::string> rep;
    for (const auto& g : groups)
        for (const auto& s : g) rep[s] = g.front();
    return rep;
}

LevelChunk frame_to_chunk(const FrameObservation& frame, int viewWidth, int viewHeight) {
    LevelChunk c;
    c.width = viewWidth;
    c.height = viewHeight;
    for (const auto& s : frame.sprites)
        c.placements.push_back({s.spriteId, s.x - frame.cameraX, s.y - frame.cameraY, s.w, s.h});
    std::sort(c.placements.begin(), c.placements.end());
    return c;
}

std::vector<LevelChunk> chunks_from_trace(const Trace& trace, const std::map<std::string, std::string>& rep,
                                          const std::set<std::string>& exclude) {
    std::vector<LevelChunk> out;
    for (const auto& f : trace.frames) {
        LevelChunk c = frame_to_chunk(f, trace.viewWidth, trace.viewHeight);
        std::vector<SpritePlacement> kept;
        for (auto p : c.placements) {
            auto it = rep.find(p.spriteId);
            if (it != rep.end()) p.spriteId = it->second;
            if (!exclude.count(p.spriteId)) kept.push_back(std::move(p));
        }
        std::sort(kept.begin(), kept.end());
        c.placements = std::move(kept);
        out.push_back(std::move(c));
    }
    return out;
}

} // namespace expforge
