#include "expforge/level_model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>
#include <tuple>
#include <stdexcept>

#include "expforge/clustering.hpp"

namespace expforge {

namespace {

struct Rect {
    int x, y, w, h;
};

bool overlaps(const Rect& a, const Rect& b) {
    return a.x < b.x + b.w && b.x < a.x + a.w && a.y < b.y + b.h && b.y < a.y + a.h;
}

/// Most frequent shape; ties go to the smallest.
Shape modal_shape(const std::vector<const Shape*>& shapes) {
    std::map<Shape, int> counts;
    for (const Shape* s : shapes) ++counts[*s];
    Shape best;
    int bestCount = -1;
    for (const auto& [s, c] : counts)
        if (c > bestCount) {
            best = s;
            bestCount = c;
        }
    return best;
}

std::vector<StyledShape> sorted(std::vector<StyledShape> v) {
    std::sort(v.begin(), v.end());
    return v;
}

} // namespace

const LNode* LevelDesignModel::find_l(const std::string& id) const {
    for (const auto& l : lNodes)
        if (l.id == id) return &l;
    return nullptr;
}

const SNode* LevelDesignModel::find_s(const std::string& id) const {
    for (const auto& s : sNodes)
        if (s.id == id) return &s;
    return nullptr;
}

int offset_bucket(int d) {
    return d >= 0 ? d / kOffsetBucket : -((-d + kOffsetBucket - 1) / kOffsetBucket);
}

Observations extract_observations(const std::vector<LevelChunk>& chunks) {
    Observations obs;
    for (std::size_t ci = 0; ci < chunks.size(); ++ci) {
        const int chunk = static_cast<int>(ci);
        std::map<std::string, std::vector<const SpritePlacement*>> byType;
        for (const auto& p : chunks[ci].placements) byType[p.spriteId].push_back(&p);
        const std::size_t firstG = obs.g.size();
        for (const auto& [type, ps] : byType) {
            obs.n.push_back({type, static_cast<int>(ps.size()), chunk});
            std::vector<int> comp(ps.size(), -1);
            int ncomp = 0;
            for (std::size_t s = 0; s < ps.size(); ++s) {
                if (comp[s] >= 0) continue;
                std::vector<std::size_t> stack{s};
                comp[s] = ncomp;
                while (!stack.empty()) {
                    const auto* a = ps[stack.back()];
                    stack.pop_back();
                    for (std::size_t o = 0; o < ps.size(); ++o) {
                        if (comp[o] >= 0) continue;
                        const auto* b = ps[o];
                        const int dx = b->x - a->x, dy = b->y - a->y;
                        const bool adjacent = (dy == 0 && std::abs(dx) == a->w) || (dx == 0 && std::abs(dy) == a->h);
                        if (adjacent) {
                            comp[o] = ncomp;
                            stack.push_back(o);
                        }
                    }
                }
                ++ncomp;
            }
            for (int c = 0; c < ncomp; ++c) {
                int minX = INT32_MAX, minY = INT32_MAX, maxX = INT32_MIN, maxY = INT32_MIN, w = 1, h = 1;
                for (std::size_t s = 0; s < ps.size(); ++s) {
                    if (comp[s] != c) continue;
                    minX = std::min(minX, ps[s]->x);
                    minY = std::min(minY, ps[s]->y);
                    maxX = std::max(maxX, ps[s]->x);
                    maxY = std::max(maxY, ps[s]->y);
                    w = ps[s]->w;
                    h = ps[s]->h;
                }
                Shape shape((maxY - minY) / h + 1, std::vector<int>((maxX - minX) / w + 1, 0));
                for (std::size_t s = 0; s < ps.size(); ++s)
                    if (comp[s] == c) shape[(ps[s]->y - minY) / h][(ps[s]->x - minX) / w] = 1;
                obs.g.push_back({type, minX, minY, std::move(shape), chunk});
            }
        }
        for (std::size_t a = firstG; a < obs.g.size(); ++a)
            for (std::size_t b = firstG; b < obs.g.size(); ++b)
                if (a != b)
                    obs.d.push_back({static_cast<int>(a), static_cast<int>(b), obs.g[b].x - obs.g[a].x,
                                     obs.g[b].y - obs.g[a].y, chunk});
    }
    return obs;
}

SequenceStats sequence_stats(const std::vector<std::string>& labels) {
    SequenceStats st;
    std::vector<std::pair<std::string, int>> runs;
    for (const auto& l : labels) {
        if (!runs.empty() && runs.back().first == l) ++runs.back().second;
        else runs.push_back({l, 1});
    }
    std::map<std::string, std::map<std::string, int>> counts;
    for (std::size_t i = 0; i + 1 < runs.size(); ++i) ++counts[runs[i].first][runs[i + 1].first];
    for (const auto& [from, tos] : counts) {
        int total = 0;
        for (const auto& [to, c] : tos) total += c;
        for (const auto& [to, c] : tos) st.transitions[from][to] = static_cast<double>(c) / total;
    }
    for (const auto& [l, len] : runs) {
        auto it = st.repeats.find(l);
        if (it == st.repeats.end()) st.repeats[l] = {len, len};
        else it->second = {std::min(it->second.first, len), std::max(it->second.second, len)};
    }
    std::map<std::string, std::pair<double, int>> pos;
    const double n = static_cast<double>(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        pos[labels[i]].first += static_cast<double>(i) / n;
        ++pos[labels[i]].second;
    }
    for (const auto& [l, p] : pos) st.avgNormPos[l] = p.first / p.second;
    return st;
}

LevelDesignModel learn_model(const std::vector<LevelChunk>& chunks, const std::vector<int>& chunkOrder, Rng& rng) {
    if (chunks.empty()) throw std::invalid_argument("learn_model needs at least one chunk");
    if (chunkOrder.size() != chunks.size()) throw std::invalid_argument("chunkOrder must list every chunk once");
    LevelDesignModel m;
    m.chunkWidth = chunks.front().width;
    m.chunkHeight = chunks.front().height;
    for (const auto& c : chunks)
        for (const auto& p : c.placements) m.spriteSizes[p.spriteId] = {p.w, p.h};

    // reorder so chunk indices follow play order
    std::vector<LevelChunk> ordered;
    for (int i : chunkOrder) ordered.push_back(chunks.at(i));
    const Observations obs = extract_observations(ordered);

    // S nodes: cluster G values per type
    std::vector<std::string> gStyle(obs.g.size());
    std::map<std::string, std::vector<int>> gByType;
    for (std::size_t i = 0; i < obs.g.size(); ++i) gByType[obs.g[i].type].push_back(static_cast<int>(i));
    std::vector<std::pair<double, double>> dMean(obs.g.size(), {0.0, 0.0});
    {
        std::vector<std::array<double, 3>> acc(obs.g.size(), {0.0, 0.0, 0.0});
        for (const auto& d : obs.d) {
            acc[d.from][0] += d.dx;
            acc[d.from][1] += d.dy;
            acc[d.from][2] += 1;
        }
        for (std::size_t i = 0; i < obs.g.size(); ++i)
            if (acc[i][2] > 0) dMean[i] = {acc[i][0] / acc[i][2], acc[i][1] / acc[i][2]};
    }
    int sCounter = 0;
    for (const auto& [type, idx] : gByType) {
        std::vector<Point> feats;
        for (int i : idx) {
            const auto& g = obs.g[i];
            feats.push_back({static_cast<double>(shape_cells(g.shape)), static_cast<double>(shape_width(g.shape)),
                             static_cast<double>(shape_height(g.shape)), static_cast<double>(g.x),
                             static_cast<double>(g.y), dMean[i].first, dMean[i].second});
        }
        feats = z_normalize(feats);
        const int k = estimate_k(feats, kMaxStyles);
        const Clustering c = kmeans(feats, k, rng);
        std::vector<std::string> ids;
        for (int j = 0; j < c.k(); ++j) ids.push_back("S" + std::to_string(sCounter++));
        for (std::size_t p = 0; p < idx.size(); ++p) gStyle[idx[p]] = ids[c.labels[p]];
        for (int j = 0; j < c.k(); ++j) {
            std::vector<const Shape*> members;
            for (std::size_t p = 0; p < idx.size(); ++p)
                if (c.labels[p] == j) members.push_back(&obs.g[idx[p]].shape);
            m.sNodes.push_back({ids[j], type, modal_shape(members)});
        }
    }

    // L nodes: cluster chunks on (shapes per style, sprites per type)
    std::vector<std::string> types;
    for (const auto& [t, s] : m.spriteSizes) types.push_back(t);
    const std::size_t nChunks = ordered.size();
    std::vector<Point> chunkFeats(nChunks, Point(m.sNodes.size() + types.size(), 0.0));
    std::map<std::string, std::size_t> sIndex;
    for (std::size_t i = 0; i < m.sNodes.size(); ++i) sIndex[m.sNodes[i].id] = i;
    for (std::size_t i = 0; i < obs.g.size(); ++i) chunkFeats[obs.g[i].chunk][sIndex[gStyle[i]]] += 1.0;
    std::vector<std::map<std::string, int>> nByChunk(nChunks);
    for (const auto& n : obs.n) {
        const auto t = std::find(types.begin(), types.end(), n.type) - types.begin();
        chunkFeats[n.chunk][m.sNodes.size() + t] = n.count;
        nByChunk[n.chunk][n.type] = n.count;
    }
    const auto normFeats = z_normalize(chunkFeats);
    const int kL = estimate_k(normFeats, kMaxStyles);
    const Clustering lc = kmeans(normFeats, kL, rng);
    for (std::size_t i = 0; i < nChunks; ++i) m.sequence.push_back("L" + std::to_string(lc.labels[i]));

    const SequenceStats st = sequence_stats(m.sequence);
    for (int j = 0; j < lc.k(); ++j) {
        LNode l;
        l.id = "L" + std::to_string(j);
        for (std::size_t i = 0; i < nChunks; ++i)
            if (lc.labels[i] == j) l.chunks.push_back(static_cast<int>(i));
        std::set<std::string> typesHere;
        for (int ci : l.chunks)
            for (const auto& [t, c] : nByChunk[ci]) typesHere.insert(t);
        for (const auto& t : typesHere)
            for (int ci : l.chunks) {
                auto it = nByChunk[ci].find(t);
                l.nValues[t].push_back(it == nByChunk[ci].end() ? 0 : it->second);
            }
        std::set<int> member(l.chunks.begin(), l.chunks.end());
        for (std::size_t i = 0; i < obs.g.size(); ++i)
            if (member.count(obs.g[i].chunk))
                l.shapes.push_back({obs.g[i].type, gStyle[i], obs.g[i].x, obs.g[i].y, obs.g[i].shape});
        // conditional table: counts per (fromS, bucket) normalized over (toS, dx, dy)
        std::map<std::tuple<std::string, int, int>, std::map<std::tuple<std::string, int, int>, int>> counts;
        std::map<std::string, std::string> styleType;
        for (const auto& d : obs.d) {
            styleType[gStyle[d.to]] = obs.g[d.to].type;
            if (!member.count(d.chunk)) continue;
            counts[{gStyle[d.from], offset_bucket(d.dx), offset_bucket(d.dy)}][{gStyle[d.to], d.dx, d.dy}]++;
        }
        for (const auto& [key, tos] : counts) {
            int total = 0;
            for (const auto& [to, c] : tos) total += c;
            for (const auto& [to, c] : tos)
                l.table.push_back({std::get<0>(key), std::get<0>(to), std::get<1>(to), std::get<2>(to),
                                   static_cast<double>(c) / total, styleType.at(std::get<0>(to))});
        }
        std::sort(l.table.begin(), l.table.end());
        if (auto it = st.transitions.find(l.id); it != st.transitions.end()) l.transitions = it->second;
        l.repeatsMin = st.repeats.at(l.id).first;
        l.repeatsMax = st.repeats.at(l.id).second;
        l.avgNormPos = st.avgNormPos.at(l.id);
        m.lNodes.push_back(std::move(l));
    }
    return m;
}

std::vector<SpritePlacement> expand_shape(const StyledShape& s, int w, int h) {
    std::vector<SpritePlacement> out;
    for (int r = 0; r < shape_height(s.shape); ++r)
        for (int c = 0; c < shape_width(s.shape); ++c)
            if (s.shape[r][c]) out.push_back({s.type, s.x + c * w, s.y + r * h, w, h});
    return out;
}

SampledChunk sample_chunk(const LevelDesignModel& model, const std::string& lNodeId, Rng& rng) {
    const LNode* l = model.find_l(lNodeId);
    if (!l) throw std::invalid_argument("unknown chunk category '" + lNodeId + "'");
    SampledChunk out;
    out.chunk.width = model.chunkWidth;
    out.chunk.height = model.chunkHeight;

    auto size_of = [&](const std::string& type) {
        auto it = model.spriteSizes.find(type);
        return it == model.spriteSizes.end() ? std::make_pair(16, 16) : it->second;
    };

    for (const auto& [type, values] : l->nValues) {
        if (values.empty()) continue;
        std::vector<int> v = values;
        std::sort(v.begin(), v.end());
        out.targets[type] = v[rng.below(v.size())];
    }
    std::map<std::string, int> placed;
    std::vector<Rect> occupied;

    auto try_place = [&](const StyledShape& s) {
        const auto [w, h] = size_of(s.type);
        const auto cells = expand_shape(s, w, h);
        if (cells.empty()) return false;
        auto target = out.targets.find(s.type);
        const int have = placed[s.type];
        if (target == out.targets.end() || have + static_cast<int>(cells.size()) > target->second) return false;
        for (const auto& c : cells) {
            if (c.x < 0 || c.y < 0 || c.x + c.w > model.chunkWidth || c.y + c.h > model.chunkHeight) return false;
            for (const auto& o : occupied)
                if (overlaps({c.x, c.y, c.w, c.h}, o)) return false;
        }
        for (const auto& c : cells) {
            occupied.push_back({c.x, c.y, c.w, c.h});
            out.chunk.placements.push_back(c);
        }
        placed[s.type] += static_cast<int>(cells.size());
        out.shapes.push_back(s);
        return true;
    };
    auto satisfied = [&] {
        for (const auto& [type, n] : out.targets)
            if (placed[type] != n) return false;
        return true;
    };

    const std::vector<StyledShape> shapes = sorted(l->shapes);
    if (!shapes.empty()) {
        std::map<StyledShape, int> counts;
        for (const auto& s : shapes) ++counts[s];
        const StyledShape* modal = nullptr;
        int best = 0;
        for (const auto& [s, c] : counts)
            if (c > best) {
                best = c;
                modal = &s;
            }
        try_place(*modal);
    }

    std::vector<TableEntry> table = l->table;
    std::sort(table.begin(), table.end());
    std::map<std::string, const SNode*> styles;
    for (const auto& s : model.sNodes) styles[s.id] = &s;

    for (int iter = 0; iter < kSampleIterationCap && !satisfied(); ++iter) {
        if (out.shapes.empty()) break;
        const StyledShape anchor = out.shapes[rng.below(out.shapes.size())];
        std::vector<const TableEntry*> options;
        double total = 0.0;
        for (const auto& e : table)
            if (e.fromS == anchor.sNodeId && (styles.count(e.toS) || !e.toType.empty())) {
                options.push_back(&e);
                total += e.probability;
            }
        if (options.empty() || total <= 0.0) continue;
        double r = rng.uniform() * total;
        const TableEntry* pick = options.back();
        for (const auto* e : options) {
            r -= e->probability;
            if (r < 0.0) {
                pick = e;
                break;
            }
        }
        if (auto it = styles.find(pick->toS); it != styles.end()) {
            const SNode* s = it->second;
            try_place({s->type, s->id, anchor.x + pick->dx, anchor.y + pick->dy, s->modalShape});
        } else {
            try_place({pick->toType, pick->toS, anchor.x + pick->dx, anchor.y + pick->dy, Shape{{1}}});
        }
    }
    out.complete = satisfied();
    std::sort(out.chunk.placements.begin(), out.chunk.placements.end());
    return out;
}

LevelDesignModel level_model_from_graph(const GameGraph& g) {
    LevelDesignModel m;
    m.chunkWidth = g.chunkWidth;
    m.chunkHeight = g.chunkHeight;
    std::map<std::string, LNode> ls;
    std::map<std::string, std::pair<std::string, std::vector<const Shape*>>> styleShapes;
    for (const auto& [id, n] : g.nodes) {
        if (n.role == NodeRole::ChunkCategory) {
            LNode& l = ls[id];
            l.id = id;
            int repeats = 0, positions = 0;
            double posSum = 0.0;
            for (const auto& e : n.edges) {
                if (const auto* r = std::get_if<LevelChunkRepeatsEdge>(&e.kind)) {
                    // several Repeats edges widen the range
                    l.repeatsMin = repeats ? std::min(l.repeatsMin, r->min) : r->min;
                    l.repeatsMax = repeats ? std::max(l.repeatsMax, r->max) : r->max;
                    ++repeats;
                } else if (const auto* p = std::get_if<LevelChunkPositionEdge>(&e.kind)) {
                    posSum += p->avgNormPos;
                    ++positions;
                } else if (const auto* t = std::get_if<LevelChunkTransitionEdge>(&e.kind)) {
                    l.transitions[e.target] += t->probability;
                }
            }
            if (positions > 0) l.avgNormPos = posSum / positions;
            continue;
        }
        if (n.role != NodeRole::Sprite) continue;
        const std::string& type = n.representative();
        if (n.spriteWidth > 0 && n.spriteHeight > 0) m.spriteSizes[type] = {n.spriteWidth, n.spriteHeight};
        for (const auto& e : n.edges) {
            if (const auto* gs = std::get_if<GShapeEdge>(&e.kind)) {
                ls[gs->lNodeId].shapes.push_back({type, gs->sNodeId, gs->x, gs->y, gs->shape});
                auto& st = styleShapes[gs->sNodeId];
                st.first = type;
                st.second.push_back(&gs->shape);
            } else if (const auto* c = std::get_if<NCountEdge>(&e.kind)) {
                ls[c->lNodeId].nValues[type].push_back(c->count);
            } else if (const auto* d = std::get_if<DRelationEdge>(&e.kind)) {
                const GameGraphNode* to = g.find(e.target);
                ls[d->lNodeId].table.push_back(
                    {d->fromSNodeId, d->sNodeId, d->dx, d->dy, d->probability, to ? to->representative() : type});
            }
        }
    }
    for (auto& [sid, st] : styleShapes) m.sNodes.push_back({sid, st.first, modal_shape(st.second)});
    for (auto& [id, l] : ls) {
        // only real chunk-category nodes become L nodes
        const GameGraphNode* n = g.find(id);
        if (!n || n->role != NodeRole::ChunkCategory) continue;
        std::sort(l.table.begin(), l.table.end());
        l.shapes = sorted(std::move(l.shapes));
        m.lNodes.push_back(std::move(l));
    }
    return m;
}

} // namespace expforge
