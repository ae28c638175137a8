#include "expforge/rule_learner.hpp"

#include <algorithm>

namespace expforge {

namespace {

FactSet primary(const World& w, const Entity& e) { return entity_facts(w, e, false); }

int sym_diff(const FactSet& a, const FactSet& b) {
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
    return static_cast<int>(a.size() + b.size() - 2 * common);
}

FactSet intersect(const FactSet& a, const FactSet& b) {
    FactSet out;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

std::optional<Fact> fact_with_tag(const FactSet& facts, FactTag t) {
    for (const auto& f : facts)
        if (tag_of(f) == t) return f;
    return std::nullopt;
}

struct Desired {
    std::string key;
    FactTag tag;
    Fact post;
};

} // namespace

int frame_distance(const World& current, const World& predicted, const World& actual) {
    int d = 0;
    for (const auto& p : predicted.entities) {
        if (const Entity* a = actual.find(p.key)) {
            d += sym_diff(primary(predicted, p), primary(actual, *a));
        } else if (actual.view && actual.view->contains(p) && !is_camera(p)) {
            d += static_cast<int>(primary(predicted, p).size());
        }
    }
    for (const auto& a : actual.entities)
        if (current.find(a.key) && !predicted.find(a.key)) d += static_cast<int>(primary(actual, a).size());
    return d;
}

std::vector<int> replay_errors(const Ruleset& rules, const std::vector<World>& worlds) {
    RuleIndex index(rules);
    std::vector<int> out;
    for (std::size_t i = 0; i + 1 < worlds.size(); ++i)
        out.push_back(frame_distance(worlds[i], step_world(worlds[i], index), worlds[i + 1]));
    return out;
}

Ruleset apply_modification(const Ruleset& rules, const EngineModification& m) {
    Ruleset out;
    switch (m.kind) {
    case ModKind::Add:
        out = rules;
        out.push_back(m.rule);
        break;
    case ModKind::Modify:
        out = rules;
        for (auto& r : out)
            if (r.id == m.ruleId) r = m.rule;
        break;
    case ModKind::Remove:
        for (const auto& r : rules)
            if (r.id != m.ruleId) out.push_back(r);
        break;
    }
    return out;
}

std::vector<EngineModification> candidate_modifications(const Ruleset& rules, const World& current,
                                                        const World& actual, int nextId) {
    RuleIndex index(rules);
    std::vector<Firing> firings;
    const World predicted = step_world(current, index, &firings);
    auto fired_for = [&](const std::string& key) -> const Firing* {
        for (const auto& f : firings)
            if (f.key == key) return &f;
        return nullptr;
    };

    std::vector<Desired> wanted;
    std::vector<std::pair<std::string, FactTag>> wronglyFired;
    for (const auto& cur : current.entities) {
        const Entity* p = predicted.find(cur.key);
        const Entity* a = actual.find(cur.key);
        const bool cam = is_camera(cur);
        if (!a) {
            if (p && !cam && actual.view && actual.view->contains(*p))
                wanted.push_back({cur.key, FactTag::Animation, AnimationFact{std::string(kNoneSprite), cur.w, cur.h}});
            continue;
        }
        if (!p) {
            wanted.push_back({cur.key, FactTag::Animation, AnimationFact{cur.sprite, cur.w, cur.h}});
            wronglyFired.push_back({cur.key, FactTag::Animation});
            continue;
        }
        if (!cam && (p->sprite != a->sprite || p->w != a->w || p->h != a->h))
            wanted.push_back({cur.key, FactTag::Animation, AnimationFact{a->sprite, a->w, a->h}});
        if (p->vx != a->vx) wanted.push_back({cur.key, FactTag::VelocityX, VelocityXFact{a->vx}});
        if (p->vy != a->vy) wanted.push_back({cur.key, FactTag::VelocityY, VelocityYFact{a->vy}});
        if (p->vx == a->vx && p->vy == a->vy && (p->x != a->x || p->y != a->y)) {
            if (cam) {
                if (p->x != a->x) wanted.push_back({cur.key, FactTag::CameraX, CameraXFact{a->x - a->vx}});
                if (p->y != a->y) wanted.push_back({cur.key, FactTag::CameraY, CameraYFact{a->y - a->vy}});
            } else {
                wanted.push_back({cur.key, FactTag::Spatial, SpatialFact{a->x - a->vx, a->y - a->vy}});
            }
        }
        for (FactTag t : {FactTag::Animation, FactTag::VelocityX, FactTag::VelocityY, FactTag::Spatial,
                          FactTag::CameraX, FactTag::CameraY})
            wronglyFired.push_back({cur.key, t});
    }

    std::vector<EngineModification> modifies, adds, removes;
    const FactSet inputs = input_facts(current.inputs);
    for (const auto& w : wanted) {
        const Entity* cur = current.find(w.key);
        FactSet conds = entity_facts(current, *cur);
        conds.insert(conds.end(), inputs.begin(), inputs.end());
        normalize(conds);
        const auto pre = fact_with_tag(conds, w.tag);
        if (!pre) continue;
        const std::string subject = is_camera(*cur) ? std::string(kCameraKey) : cur->sprite;
        for (const auto& r : rules) {
            if (r.subject != subject || r.pre != *pre || r.post != w.post) continue;
            if (includes(conds, r.conditions)) continue;
            Rule g = r;
            g.conditions = intersect(r.conditions, conds);
            if (g.requiresInput && !contains(conds, Fact{*g.requiresInput})) g.requiresInput.reset();
            modifies.push_back({ModKind::Modify, g, r.id});
        }
        adds.push_back({ModKind::Add, Rule{nextId, subject, conds, *pre, w.post, std::nullopt}, nextId});
    }
    // rules that fired on an entity whose prediction is wrong in that tag
    for (const auto& [key, tag] : wronglyFired) {
        const Firing* f = fired_for(key);
        if (!f) continue;
        const Entity* p = predicted.find(key);
        const Entity* a = actual.find(key);
        for (const Rule* r : f->fired) {
            if (tag_of(r->pre) != tag) continue;
            bool wrong = !p;
            if (p && a) {
                const FactSet pf = entity_facts(predicted, *p, false), af = entity_facts(actual, *a, false);
                wrong = fact_with_tag(pf, tag) != fact_with_tag(af, tag);
            }
            if (!wrong) continue;
            const bool seen = std::any_of(removes.begin(), removes.end(),
                                          [&](const EngineModification& m) { return m.ruleId == r->id; });
            if (!seen) removes.push_back({ModKind::Remove, *r, r->id});
        }
    }
    std::vector<EngineModification> out;
    for (auto* v : {&modifies, &adds, &removes}) out.insert(out.end(), v->begin(), v->end());
    return out;
}

LearnReport learn_ruleset(const std::vector<World>& worlds, const LearnOptions& opts) {
    LearnReport rep;
    int nextId = 1;
    for (int pass = 0; pass < opts.passCap; ++pass) {
        ++rep.passes;
        int changes = 0;
        for (std::size_t i = 0; i + 1 < worlds.size(); ++i) {
            const World& cur = worlds[i];
            const World& act = worlds[i + 1];
            int d = frame_distance(cur, step_world(cur, rep.rules), act);
            while (d > 0) {
                if (rep.modifications >= opts.budget) {
                    rep.budgetExhausted = true;
                    break;
                }
                const auto cands = candidate_modifications(rep.rules, cur, act, nextId);
                int bestD = d;
                const EngineModification* best = nullptr;
                Ruleset bestRules;
                for (const auto& c : cands) {
                    Ruleset trial = apply_modification(rep.rules, c);
                    const int td = frame_distance(cur, step_world(cur, trial), act);
                    if (td < bestD) {
                        bestD = td;
                        best = &c;
                        bestRules = std::move(trial);
                    }
                }
                if (!best) break;
                if (best->kind == ModKind::Add) ++nextId;
                rep.rules = std::move(bestRules);
                ++rep.modifications;
                ++changes;
                d = bestD;
            }
            if (rep.budgetExhausted) break;
        }
        if (changes == 0 || rep.budgetExhausted) break;
    }
    rep.pairErrors = replay_errors(rep.rules, worlds);
    for (int e : rep.pairErrors) rep.residualError += e;
    return rep;
}

} // namespace expforge
