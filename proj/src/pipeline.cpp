#include "expforge/pipeline.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "expforge/graph_json.hpp"
#include "expforge/hashing.hpp"
#include "expforge/learn.hpp"
#include "expforge/log.hpp"

namespace expforge {

namespace {

template <typename T>
T config_value(const nlohmann::json& j, const char* key) {
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(std::string("config: bad value for '") + key + "'");
    }
}

template <typename F>
auto stage(const char* name, F&& f) {
    try {
        return f();
    } catch (const StageError&) {
        throw;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, e.what());
    }
}

std::vector<GameGraph> load_graphs(const std::vector<std::filesystem::path>& paths) {
    std::vector<GameGraph> out;
    std::set<std::string> ids;
    for (const auto& p : paths) {
        out.push_back(load_graph(p));
        if (!ids.insert(out.back().id).second) throw ConfigError("duplicate kb graph id '" + out.back().id + "'");
    }
    return out;
}

} // namespace

std::optional<Method> parse_method(std::string_view s) {
    if (s == "expand") return Method::Expand;
    if (s == "amalgam") return Method::Amalgam;
    if (s == "blend") return Method::Blend;
    if (s == "composition") return Method::Composition;
    return std::nullopt;
}

std::string_view method_name(Method m) {
    switch (m) {
    case Method::Expand:
        return "expand";
    case Method::Amalgam:
        return "amalgam";
    case Method::Blend:
        return "blend";
    case Method::Composition:
        return "composition";
    }
    return "expand";
}

std::filesystem::path PipelineConfig::manifest_path() const {
    return manifest.empty() ? outDir / "kb_manifest.json" : manifest;
}

PipelineConfig config_from_json(const nlohmann::json& j, PipelineConfig c) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    static const std::set<std::string> known = {"kb",         "sheet",      "player",         "outDir",
                                                "manifest",   "seed",       "method",         "threshold",
                                                "neighbors",  "patience",   "maxSteps",       "attemptCap",
                                                "searchRestarts", "exhaustiveCap", "samples", "threads"};
    for (const auto& [k, v] : j.items())
        if (!known.count(k)) throw ConfigError("config: unknown key '" + k + "'");
    if (j.contains("kb")) {
        c.kb.clear();
        for (const auto& p : config_value<std::vector<std::string>>(j, "kb")) c.kb.emplace_back(p);
    }
    if (j.contains("sheet")) c.protoSheet = config_value<std::string>(j, "sheet");
    if (j.contains("player")) c.player = config_value<std::string>(j, "player");
    if (j.contains("outDir")) c.outDir = config_value<std::string>(j, "outDir");
    if (j.contains("manifest")) c.manifest = config_value<std::string>(j, "manifest");
    if (j.contains("seed")) c.seed = config_value<std::uint64_t>(j, "seed");
    if (j.contains("method")) {
        const auto m = parse_method(config_value<std::string>(j, "method"));
        if (!m) throw ConfigError("config: unknown method '" + j.at("method").get<std::string>() + "'");
        c.method = *m;
    }
    if (j.contains("threshold")) c.threshold = config_value<double>(j, "threshold");
    if (j.contains("neighbors")) c.neighbors = config_value<int>(j, "neighbors");
    if (j.contains("patience")) c.patience = config_value<int>(j, "patience");
    if (j.contains("maxSteps")) c.maxSteps = config_value<int>(j, "maxSteps");
    if (j.contains("attemptCap")) c.attemptCap = config_value<int>(j, "attemptCap");
    if (j.contains("searchRestarts")) c.searchRestarts = config_value<int>(j, "searchRestarts");
    if (j.contains("exhaustiveCap")) c.exhaustiveCap = config_value<std::uint64_t>(j, "exhaustiveCap");
    if (j.contains("samples")) c.samples = config_value<std::uint64_t>(j, "samples");
    if (j.contains("threads")) c.threads = config_value<int>(j, "threads");
    return c;
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& seed) {
    if (seed) return *seed;
    if (const char* env = std::getenv("EXPFORGE_SEED"); env && *env) {
        try {
            std::size_t used = 0;
            const auto v = std::stoull(env, &used);
            if (used == std::string(env).size()) return v;
        } catch (const std::exception&) {
        }
        throw ConfigError(std::string("EXPFORGE_SEED is not an unsigned integer: '") + env + "'");
    }
    throw ConfigError("a seed is required (--seed, config \"seed\", or EXPFORGE_SEED)");
}

std::string text_hash(const std::string& text) { return to_hex(fnv1a64(text)); }

std::string file_hash(const std::filesystem::path& path) { return text_hash(read_text_file(path)); }

KbManifest KbManifest::load(const std::filesystem::path& path) {
    KbManifest m;
    m.path_ = path;
    if (!std::filesystem::exists(path)) return m;
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ManifestError("manifest " + path.string() + " is not valid JSON: " + e.what());
    }
    if (!j.is_object() || !j.contains("entries") || !j.at("entries").is_array())
        throw ManifestError("manifest " + path.string() + " has no 'entries' array");
    for (const auto& e : j.at("entries")) {
        ManifestEntry me;
        try {
            me.id = e.at("id").get<std::string>();
            me.path = e.at("path").get<std::string>();
            me.hash = e.at("hash").get<std::string>();
            me.method = e.at("method").get<std::string>();
            me.seed = e.at("seed").get<std::uint64_t>();
        } catch (const nlohmann::json::exception&) {
            throw ManifestError("manifest " + path.string() + ": malformed entry " + e.dump());
        }
        const auto file = m.directory() / me.path;
        if (!std::filesystem::exists(file)) throw ManifestError("manifest entry '" + me.id + "': missing " + file.string());
        if (file_hash(file) != me.hash)
            throw ManifestError("manifest entry '" + me.id + "': hash mismatch for " + file.string());
        m.entries_.push_back(std::move(me));
    }
    return m;
}

std::vector<GameGraph> KbManifest::graphs() const {
    std::vector<GameGraph> out;
    for (const auto& e : entries_) out.push_back(load_graph(directory() / e.path));
    return out;
}

void KbManifest::append(ManifestEntry e) { entries_.push_back(std::move(e)); }

void KbManifest::save() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : entries_)
        arr.push_back({{"id", e.id}, {"path", e.path}, {"hash", e.hash}, {"method", e.method}, {"seed", e.seed}});
    write_text_file(path_, canonical_dump({{"entries", arr}}));
}

Workspace open_workspace(const std::vector<GameGraph>& originals, const std::vector<GameGraph>& generated,
                         std::uint64_t seed) {
    Rng root(seed);
    Rng value = root.substream("value");
    Workspace ws{originals, KnowledgeBase(originals), {}, value.substream("candidates").seed()};
    for (const auto& g : generated) ws.kb.add_generated(g);
    Rng refRng = value.substream("references");
    ws.refs = build_references(ws.kb, refRng);
    return ws;
}

nlohmann::json kb_provenance(const Workspace& ws, const KbManifest* manifest) {
    nlohmann::json originals = nlohmann::json::array();
    for (const auto& g : ws.kb.originals()) originals.push_back({{"id", g.id}, {"hash", text_hash(serialize(g))}});
    nlohmann::json generated = nlohmann::json::array();
    for (std::size_t i = 0; i < ws.kb.generated().size(); ++i) {
        const GameGraph& g = ws.kb.generated()[i];
        nlohmann::json e = {{"id", g.id}, {"hash", text_hash(serialize(g))}, {"provenance", provenance_name(g.provenance)}};
        if (manifest && i < manifest->entries().size()) e["path"] = manifest->entries()[i].path;
        generated.push_back(e);
    }
    return {{"originals", originals}, {"generated", generated}};
}

GenerateResult run_generate(const PipelineConfig& cfg) {
    const std::uint64_t seed = resolve_seed(cfg.seed);
    if (cfg.kb.size() < 2) throw ConfigError("generate needs at least two kb graphs");
    if (cfg.protoSheet.empty()) throw ConfigError("generate needs a spritesheet");
    if (cfg.player.empty()) throw ConfigError("generate needs the player sprite id");
    const Rng root(seed);

    const auto originals = stage("ingest", [&] { return load_graphs(cfg.kb); });
    auto manifest = stage("kb", [&] { return KbManifest::load(cfg.manifest_path()); });
    const auto generated = stage("kb", [&] { return manifest.graphs(); });
    const Spritesheet sheet = stage("ingest", [&] { return load_spritesheet(cfg.protoSheet); });
    const Workspace ws = stage("heuristic", [&] { return open_workspace(originals, generated, seed); });

    const Mapping mapping = stage("proto-map", [&] {
        const GameGraph proto = build_proto_graph(sheet, cfg.player, cfg.threshold);
        Rng rng = root.substream("map");
        return build_mapping(originals, proto, rng, &ws.kb.cache());
    });
    const Sources src(originals, mapping);
    const GraphHeuristic h = [&](const GameGraph& g) { return heuristic_total(g, ws.kb, ws.refs, ws.valueSeed).total; };

    GameGraph graph;
    GeneratedLevel level;
    nlohmann::json search;
    const std::string id = std::string(method_name(cfg.method)) + "-" + std::to_string(manifest.entries().size() + 1);
    LevelOptions lopts;
    lopts.attemptCap = cfg.attemptCap;
    const int rounds = cfg.method == Method::Expand ? std::max(1, cfg.searchRestarts) : 1;
    for (int round = 0; round < rounds; ++round) {
        const std::string suffix = round == 0 ? "" : "/" + std::to_string(round);
        stage("combinator", [&] {
            Rng rng = root.substream("search" + suffix);
            if (cfg.method == Method::Expand) {
                SearchOptions so;
                so.neighbors = cfg.neighbors;
                so.patience = cfg.patience;
                so.maxSteps = cfg.maxSteps;
                so.threads = cfg.threads;
                auto res = ce_search(src, [&](const ConceptualExpansion&, const GameGraph& g) { return h(g); }, rng, so);
                graph = std::move(res.graph);
                search = {{"initialScore", res.initialScore}, {"score", res.score}, {"steps", res.steps},
                          {"evaluations", res.evaluations}, {"round", round}};
                return 0;
            }
            BaselineOptions bo{cfg.exhaustiveCap, cfg.samples, cfg.threads};
            BaselineResult res = cfg.method == Method::Amalgam ? amalgam_search(src, h, rng, bo)
                                 : cfg.method == Method::Blend ? blend_search(src, h, rng, bo)
                                                               : composition_search(src, h, rng, bo);
            graph = std::move(res.graph);
            search = {{"score", res.score}, {"spaceSize", res.spaceSize}, {"evaluated", res.evaluated},
                      {"exhaustive", res.exhaustive}};
            return 0;
        });
        graph.id = id;
        try {
            Rng rng = root.substream("generate" + suffix);
            level = generate_level(graph, rng, lopts);
            break;
        } catch (const LevelError& e) {
            if (round + 1 == rounds) throw StageError("generate", e.what());
            log_warn(std::string(e.what()) + "; searching again");
        }
    }

    const HeuristicScore score = heuristic_total(graph, ws.kb, ws.refs, ws.valueSeed);
    const GameDefinition def = stage("export", [&] { return export_game(graph, level.level, sheet, seed); });

    GenerateResult out;
    std::filesystem::create_directories(cfg.outDir);
    out.graphPath = cfg.outDir / (id + ".graph.json");
    out.definitionPath = cfg.outDir / (id + ".definition.json");
    out.reportPath = cfg.outDir / (id + ".report.json");
    const std::string graphText = serialize(graph);
    write_text_file(out.graphPath, graphText);
    write_text_file(out.definitionPath, canonical_dump(definition_to_json(def)));

    nlohmann::json report = score_to_json(score);
    report["id"] = id;
    report["method"] = method_name(cfg.method);
    report["provenance"] = provenance_name(graph.provenance);
    report["runSeed"] = seed;
    report["search"] = search;
    report["level"] = {{"chunks", level.level.size()}, {"attempts", level.attempts}};
    report["kb"] = kb_provenance(ws, &manifest);
    report["output"] = {{"graph", out.graphPath.filename().string()}, {"hash", text_hash(graphText)},
                        {"definition", out.definitionPath.filename().string()}};
    write_text_file(out.reportPath, canonical_dump(report));

    std::filesystem::create_directories(cfg.manifest_path().parent_path().empty() ? "."
                                                                                 : cfg.manifest_path().parent_path());
    const auto manifestDir = std::filesystem::absolute(cfg.manifest_path()).parent_path();
    const auto rel = std::filesystem::relative(std::filesystem::absolute(out.graphPath), manifestDir);
    manifest.append({id, rel.generic_string(), text_hash(graphText), std::string(method_name(cfg.method)), seed});
    manifest.save();

    out.graph = std::move(graph);
    out.definition = def;
    out.report = std::move(report);
    return out;
}

nlohmann::json run_evaluate(const GameGraph& g, const std::vector<GameGraph>& originals,
                            const std::vector<GameGraph>& generated, std::uint64_t seed) {
    const Workspace ws = stage("heuristic", [&] { return open_workspace(originals, generated, seed); });
    const HeuristicScore s = stage("heuristic", [&] { return heuristic_total(g, ws.kb, ws.refs, ws.valueSeed); });
    nlohmann::json report = score_to_json(s);
    report["graph"] = g.id;
    report["runSeed"] = seed;
    report["kb"] = kb_provenance(ws, nullptr);
    return report;
}

} // namespace expforge
