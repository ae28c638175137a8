#include "expforge/engine.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "expforge/hashing.hpp"

namespace expforge {

const Entity* World::find(std::string_view key) const {
    auto it = std::lower_bound(entities.begin(), entities.end(), key,
                               [](const Entity& e, std::string_view k) { return e.key < k; });
    return it != entities.end() && it->key == key ? &*it : nullptr;
}

bool is_camera(const Entity& e) { return e.key == kCameraKey; }

FactSet input_facts(const std::vector<Button>& inputs) {
    FactSet out;
    for (Button b : inputs) out.push_back(InputFact{b});
    normalize(out);
    return out;
}

FactSet entity_facts(const World& w, const Entity& e, bool withRelationships) {
    FactSet f;
    if (is_camera(e)) {
        f = {CameraXFact{e.x}, CameraYFact{e.y}, VelocityXFact{e.vx}, VelocityYFact{e.vy}};
        normalize(f);
        return f;
    }
    f = {AnimationFact{e.sprite, e.w, e.h}, SpatialFact{e.x, e.y}, VelocityXFact{e.vx}, VelocityYFact{e.vy}};
    if (withRelationships) {
        for (const auto& o : w.entities) {
            if (&o == &e || is_camera(o)) continue;
            const int dx = o.x - e.x, dy = o.y - e.y;
            if (dx * dx + dy * dy > kRelationRadius * kRelationRadius) continue;
            if (o.y < e.y + e.h && e.y < o.y + o.h) f.push_back(RelationshipXFact{o.sprite, dx});
            if (o.x < e.x + e.w && e.x < o.x + o.w) f.push_back(RelationshipYFact{o.sprite, dy});
        }
    }
    normalize(f);
    return f;
}

FrameFacts frame_facts(const World& w) {
    FrameFacts out;
    for (const auto& e : w.entities) out.entities[e.key] = entity_facts(w, e);
    out.inputs = w.inputs;
    return out;
}

World world_from_facts(const FrameFacts& f) {
    World w;
    for (const auto& [key, facts] : f.entities) {
        Entity e;
        e.key = key;
        if (key == kCameraKey) e.sprite = std::string(kCameraKey);
        for (const auto& fact : facts) {
            if (const auto* a = std::get_if<AnimationFact>(&fact)) {
                e.sprite = a->spriteId;
                e.w = a->width;
                e.h = a->height;
            } else if (const auto* s = std::get_if<SpatialFact>(&fact)) {
                e.x = s->x;
                e.y = s->y;
            } else if (const auto* cx = std::get_if<CameraXFact>(&fact)) {
                e.x = cx->x;
            } else if (const auto* cy = std::get_if<CameraYFact>(&fact)) {
                e.y = cy->y;
            } else if (const auto* vx = std::get_if<VelocityXFact>(&fact)) {
                e.vx = vx->vx;
            } else if (const auto* vy = std::get_if<VelocityYFact>(&fact)) {
                e.vy = vy->vy;
            }
        }
        w.entities.push_back(std::move(e));
    }
    w.inputs = f.inputs;
    return w;
}

RuleIndex::RuleIndex(const Ruleset& rules) : rules_(&rules) {
    for (const auto& r : rules) bySubject_[r.subject].push_back(&r);
}

const std::vector<const Rule*>& RuleIndex::for_subject(std::string_view subject) const {
    auto it = bySubject_.find(subject);
    return it == bySubject_.end() ? empty_ : it->second;
}

bool RuleIndex::has_subject(std::string_view subject) const { return bySubject_.count(subject) > 0; }

namespace {

void merge_into(FactSet& facts, const FactSet& extra) {
    if (extra.empty()) return;
    facts.insert(facts.end(), extra.begin(), extra.end());
    normalize(facts);
}

bool rule_matches(const Rule& r, const FactSet& facts) {
    if (!includes(facts, r.conditions)) return false;
    if (r.requiresInput && !contains(facts, Fact{*r.requiresInput})) return false;
    return true;
}

/// Returns false if the entity is removed.
bool apply_effect(Entity& e, const Fact& post) {
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, AnimationFact>) {
                e.sprite = v.spriteId;
                e.w = v.width;
                e.h = v.height;
            } else if constexpr (std::is_same_v<T, SpatialFact>) {
                e.x = v.x;
                e.y = v.y;
            } else if constexpr (std::is_same_v<T, VelocityXFact>) {
                e.vx = v.vx;
            } else if constexpr (std::is_same_v<T, VelocityYFact>) {
                e.vy = v.vy;
            } else if constexpr (std::is_same_v<T, CameraXFact>) {
                e.x = v.x;
            } else if constexpr (std::is_same_v<T, CameraYFact>) {
                e.y = v.y;
            }
        },
        post);
    if (const auto* a = std::get_if<AnimationFact>(&post)) return a->spriteId != kNoneSprite;
    return true;
}

} // namespace

World step_world(const World& w, const RuleIndex& rules, std::vector<Firing>* firings) {
    World out;
    out.entities.reserve(w.entities.size());
    const FactSet inputs = input_facts(w.inputs);
    for (const auto& e : w.entities) {
        Entity n = e;
        bool alive = true;
        const auto& candidates = rules.for_subject(is_camera(e) ? kCameraKey : std::string_view(e.sprite));
        if (!candidates.empty()) {
            FactSet facts = entity_facts(w, e);
            merge_into(facts, inputs);
            Firing firing;
            firing.key = e.key;
            for (const Rule* r : candidates) {
                if (!rule_matches(*r, facts)) continue;
                firing.fired.push_back(r);
                auto& slot = firing.winners[tag_of(r->pre)];
                if (!slot || r->id > slot->id) slot = r;
            }
            for (const auto& [tag, r] : firing.winners) alive = apply_effect(n, r->post) && alive;
            if (firings && !firing.fired.empty()) firings->push_back(std::move(firing));
        }
        if (!alive) continue;
        n.x += n.vx;
        n.y += n.vy;
        out.entities.push_back(std::move(n));
    }
    out.view = w.view;
    if (const Entity* cam = out.find(kCameraKey); cam && out.view) {
        out.view->x = cam->x;
        out.view->y = cam->y;
    }
    return out;
}

World step_world(const World& w, const Ruleset& rules) {
    RuleIndex index(rules);
    return step_world(w, index);
}

FrameFacts predict(const Ruleset& rules, const FrameFacts& facts) {
    return frame_facts(step_world(world_from_facts(facts), rules));
}

World track_frame(const World* prev, const FrameObservation& cur, int viewW, int viewH,
                  std::map<std::string, int>& keyCounters) {
    World w;
    w.inputs = cur.inputs;
    w.view = View{cur.cameraX, cur.cameraY, viewW, viewH};
    Entity cam{std::string(kCameraKey), std::string(kCameraKey), cur.cameraX, cur.cameraY, viewW, viewH, 0, 0};
    if (prev)
        if (const Entity* pc = prev->find(kCameraKey)) {
            cam.vx = cur.cameraX - pc->x;
            cam.vy = cur.cameraY - pc->y;
        }
    w.entities.push_back(cam);

    std::vector<SpritePlacement> sprites = cur.sprites;
    std::sort(sprites.begin(), sprites.end(), [](const SpritePlacement& a, const SpritePlacement& b) {
        return std::tie(a.spriteId, a.x, a.y) < std::tie(b.spriteId, b.x, b.y);
    });
    std::vector<int> match(sprites.size(), -1);
    if (prev) {
        // (distance², cur x, cur y, prev x, prev y, cur index, prev index)
        std::vector<std::tuple<long, int, int, int, int, std::size_t, std::size_t>> pairs;
        for (std::size_t c = 0; c < sprites.size(); ++c)
            for (std::size_t p = 0; p < prev->entities.size(); ++p) {
                const Entity& pe = prev->entities[p];
                if (is_camera(pe) || pe.sprite != sprites[c].spriteId) continue;
                const long dx = sprites[c].x - pe.x, dy = sprites[c].y - pe.y;
                const long d2 = dx * dx + dy * dy;
                if (d2 > static_cast<long>(kTrackRadius) * kTrackRadius) continue;
                pairs.emplace_back(d2, sprites[c].x, sprites[c].y, pe.x, pe.y, c, p);
            }
        std::sort(pairs.begin(), pairs.end());
        std::vector<bool> prevUsed(prev->entities.size(), false);
        for (const auto& [d2, cx, cy, px, py, c, p] : pairs) {
            if (match[c] >= 0 || prevUsed[p]) continue;
            match[c] = static_cast<int>(p);
            prevUsed[p] = true;
        }
    }
    for (std::size_t c = 0; c < sprites.size(); ++c) {
        const auto& s = sprites[c];
        Entity e{"", s.spriteId, s.x, s.y, s.w, s.h, 0, 0};
        if (match[c] >= 0) {
            const Entity& pe = prev->entities[match[c]];
            e.key = pe.key;
            e.vx = s.x - pe.x;
            e.vy = s.y - pe.y;
        } else {
            e.key = s.spriteId + "#" + std::to_string(keyCounters[s.spriteId]++);
        }
        w.entities.push_back(std::move(e));
    }
    std::sort(w.entities.begin(), w.entities.end(), [](const Entity& a, const Entity& b) { return a.key < b.key; });
    return w;
}

std::vector<World> track_trace(const Trace& trace) {
    std::vector<World> out;
    std::map<std::string, int> counters;
    for (const auto& f : trace.frames) {
        const World* prev = out.empty() ? nullptr : &out.back();
        out.push_back(track_frame(prev, f, trace.viewWidth, trace.viewHeight, counters));
    }
    return out;
}

FrameFacts facts_from_frames(const FrameObservation& prev, const FrameObservation& cur, int viewW, int viewH) {
    std::map<std::string, int> counters;
    const World a = track_frame(nullptr, prev, viewW, viewH, counters);
    return frame_facts(track_frame(&a, cur, viewW, viewH, counters));
}

Trace canonicalize_trace(const Trace& trace, const std::map<std::string, std::string>& rep) {
    Trace out = trace;
    auto rename = [&](std::string& id) {
        auto it = rep.find(id);
        if (it != rep.end()) id = it->second;
    };
    if (out.player) rename(*out.player);
    for (auto& f : out.frames)
        for (auto& s : f.sprites) rename(s.spriteId);
    return out;
}

std::vector<std::string> fact_lines(const World& w) {
    std::vector<std::string> lines;
    for (const auto& e : w.entities) {
        for (const auto& f : entity_facts(w, e, false)) {
            std::string s = to_string(f);
            const auto open = s.find('(');
            std::string fields = s.substr(open + 1, s.size() - open - 2);
            lines.push_back(e.key + "|" + s.substr(0, open) + "|" + fields);
        }
    }
    std::sort(lines.begin(), lines.end());
    return lines;
}

std::uint64_t fact_set_hash(const World& w) {
    Fnv1a h;
    for (const auto& line : fact_lines(w)) {
        h.bytes(line.data(), line.size());
        h.bytes("\n", 1);
    }
    return h.value();
}

} // namespace expforge
