// Pipeline driver. Exit codes: 0 ok, 2 configuration error, 3 stage failure.
#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "expforge/graph_json.hpp"
#include "expforge/learn.hpp"
#include "expforge/log.hpp"
#include "expforge/pipeline.hpp"

using namespace expforge;
namespace fs = std::filesystem;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitStage = 3;

void write_or_print(const std::string& out, const std::string& text) {
    if (out.empty() || out == "-") std::cout << text;
    else write_text_file(out, text);
}

nlohmann::json read_json(const fs::path& p, const char* what) {
    try {
        return nlohmann::json::parse(read_text_file(p));
    } catch (const std::exception& e) {
        throw ConfigError(std::string(what) + " " + p.string() + ": " + e.what());
    }
}

std::vector<fs::path> as_paths(const std::vector<std::string>& v) { return {v.begin(), v.end()}; }

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Game graph learning, conceptual expansion and level generation"};
    app.require_subcommand(1);
    bool verbose = false, quiet = false;
    app.add_flag("-v,--verbose", verbose, "Log progress");
    app.add_flag("-q,--quiet", quiet, "Suppress warnings");

    std::optional<std::uint64_t> seed;
    std::string out;
    double threshold = kDefaultClusterThreshold;

    auto* learn = app.add_subcommand("learn", "Learn a game graph from a gameplay trace");
    std::string tracePath, sheetPath, graphId;
    learn->add_option("--trace", tracePath, "Gameplay trace JSON")->required();
    learn->add_option("--sheet", sheetPath, "Spritesheet JSON")->required();
    learn->add_option("--id", graphId, "Graph id (default: the trace's game name)");
    learn->add_option("--threshold", threshold, "Sprite clustering threshold");
    learn->add_option("--seed", seed, "Seed (else EXPFORGE_SEED)");
    learn->add_option("-o,--out", out, "Output graph path (default stdout)");

    auto* proto = app.add_subcommand("proto", "Build the proto game graph of a spritesheet");
    std::string player;
    proto->add_option("--sheet", sheetPath, "Spritesheet JSON")->required();
    proto->add_option("--player", player, "Player sprite id")->required();
    proto->add_option("--threshold", threshold, "Sprite clustering threshold");
    proto->add_option("-o,--out", out, "Output graph path (default stdout)");

    auto* map = app.add_subcommand("map", "Map knowledge-base graphs onto a proto game graph");
    std::vector<std::string> kbPaths;
    map->add_option("--kb", kbPaths, "Knowledge-base graph files")->required();
    map->add_option("--sheet", sheetPath, "Spritesheet JSON")->required();
    map->add_option("--player", player, "Player sprite id")->required();
    map->add_option("--threshold", threshold, "Sprite clustering threshold");
    map->add_option("--seed", seed, "Seed (else EXPFORGE_SEED)");
    map->add_option("-o,--out", out, "Output mapping path (default stdout)");

    auto* generate = app.add_subcommand("generate", "Combine knowledge-base games into a new game");
    std::string configPath, method, outDir, manifest;
    std::optional<int> neighbors, patience, maxSteps, attemptCap, restarts, threads;
    std::optional<std::uint64_t> exhaustiveCap, samples;
    std::optional<double> genThreshold;
    generate->add_option("--config", configPath, "Config JSON (flags take precedence)");
    generate->add_option("--kb", kbPaths, "Knowledge-base graph files");
    generate->add_option("--sheet", sheetPath, "Spritesheet JSON of the new game");
    generate->add_option("--player", player, "Player sprite id");
    generate->add_option("--method", method, "expand | amalgam | blend | composition");
    generate->add_option("--seed", seed, "Seed (else config, else EXPFORGE_SEED)");
    generate->add_option("--out-dir", outDir, "Output directory");
    generate->add_option("--manifest", manifest, "Knowledge-base manifest (default <out-dir>/kb_manifest.json)");
    generate->add_option("--threshold", genThreshold, "Sprite clustering threshold");
    generate->add_option("--neighbors", neighbors, "Neighbors per search step");
    generate->add_option("--patience", patience, "Non-improving steps before stopping");
    generate->add_option("--max-steps", maxSteps, "Search step budget (0 = until patience runs out)");
    generate->add_option("--attempt-cap", attemptCap, "Level walks before giving up");
    generate->add_option("--search-restarts", restarts, "Searches tried when no completable level is found");
    generate->add_option("--exhaustive-cap", exhaustiveCap, "Largest baseline space searched exhaustively");
    generate->add_option("--samples", samples, "Baseline samples beyond the exhaustive cap");
    generate->add_option("--threads", threads, "Worker threads (0 = hardware)");

    auto* evaluate = app.add_subcommand("evaluate", "Score a game graph against a knowledge base");
    std::string graphPath;
    evaluate->add_option("--graph", graphPath, "Graph to score")->required();
    evaluate->add_option("--kb", kbPaths, "Original knowledge-base graph files")->required();
    evaluate->add_option("--manifest", manifest, "Manifest of generated graphs to include");
    evaluate->add_option("--seed", seed, "Seed (else EXPFORGE_SEED)");
    evaluate->add_option("-o,--out", out, "Report path (default stdout)");

    auto* simulate = app.add_subcommand("simulate", "Replay a game definition under an input script");
    std::string definitionPath, inputsPath;
    simulate->add_option("--definition", definitionPath, "GameDefinition JSON")->required();
    simulate->add_option("--inputs", inputsPath, "Input script: array of per-tick button arrays")->required();
    simulate->add_option("-o,--out", out, "Trace of per-tick fact-set hashes (default stdout)");

    auto* exportCmd = app.add_subcommand("export", "Generate a level for a graph and export a game definition");
    exportCmd->add_option("--graph", graphPath, "Game graph")->required();
    exportCmd->add_option("--sheet", sheetPath, "Spritesheet JSON")->required();
    exportCmd->add_option("--seed", seed, "Seed (else EXPFORGE_SEED)");
    exportCmd->add_option("--attempt-cap", attemptCap, "Level walks before giving up");
    exportCmd->add_option("-o,--out", out, "Definition path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }
    set_log_level(quiet ? LogLevel::Quiet : verbose ? LogLevel::Info : LogLevel::Warn);

    try {
        if (*learn) {
            const std::uint64_t s = resolve_seed(seed);
            Trace trace;
            Spritesheet sheet;
            try {
                trace = load_trace(tracePath);
                sheet = load_spritesheet(sheetPath);
            } catch (const std::exception& e) {
                throw StageError("ingest", e.what());
            }
            Rng rng = Rng(s).substream("learn");
            const auto learned = learn_game(trace, sheet, graphId.empty() ? trace.game : graphId, threshold, rng);
            write_or_print(out, serialize(learned.graph));
        } else if (*proto) {
            Spritesheet sheet;
            try {
                sheet = load_spritesheet(sheetPath);
            } catch (const std::exception& e) {
                throw StageError("ingest", e.what());
            }
            GameGraph g;
            try {
                g = build_proto_graph(sheet, player, threshold);
            } catch (const std::exception& e) {
                throw StageError("proto-map", e.what());
            }
            write_or_print(out, serialize(g));
        } else if (*map) {
            const std::uint64_t s = resolve_seed(seed);
            std::vector<GameGraph> kb;
            Spritesheet sheet;
            try {
                for (const auto& p : kbPaths) kb.push_back(load_graph(p));
                sheet = load_spritesheet(sheetPath);
            } catch (const std::exception& e) {
                throw StageError("ingest", e.what());
            }
            try {
                Rng rng = Rng(s).substream("map");
                const Mapping m = build_mapping(kb, build_proto_graph(sheet, player, threshold), rng);
                nlohmann::json j = {{"mapping", mapping_to_json(m)}, {"proto", graph_to_json(m.proto)}};
                write_or_print(out, canonical_dump(j));
            } catch (const std::exception& e) {
                throw StageError("proto-map", e.what());
            }
        } else if (*generate) {
            PipelineConfig cfg;
            if (!configPath.empty()) cfg = config_from_json(read_json(configPath, "config"));
            if (!kbPaths.empty()) cfg.kb = as_paths(kbPaths);
            if (!sheetPath.empty()) cfg.protoSheet = sheetPath;
            if (!player.empty()) cfg.player = player;
            if (!method.empty()) {
                const auto m = parse_method(method);
                if (!m) {
                    std::cerr << "unknown method '" << method << "'\n" << generate->help();
                    return kExitConfig;
                }
                cfg.method = *m;
            }
            if (seed) cfg.seed = seed;
            if (!outDir.empty()) cfg.outDir = outDir;
            if (!manifest.empty()) cfg.manifest = manifest;
            if (genThreshold) cfg.threshold = *genThreshold;
            if (neighbors) cfg.neighbors = *neighbors;
            if (patience) cfg.patience = *patience;
            if (maxSteps) cfg.maxSteps = *maxSteps;
            if (attemptCap) cfg.attemptCap = *attemptCap;
            if (restarts) cfg.searchRestarts = *restarts;
            if (exhaustiveCap) cfg.exhaustiveCap = *exhaustiveCap;
            if (samples) cfg.samples = *samples;
            if (threads) cfg.threads = *threads;
            const GenerateResult r = run_generate(cfg);
            std::cout << canonical_dump(r.report);
        } else if (*evaluate) {
            const std::uint64_t s = resolve_seed(seed);
            GameGraph g;
            std::vector<GameGraph> kb, generated;
            try {
                g = load_graph(graphPath);
                for (const auto& p : kbPaths) kb.push_back(load_graph(p));
                if (!manifest.empty()) generated = KbManifest::load(manifest).graphs();
            } catch (const std::exception& e) {
                throw StageError("ingest", e.what());
            }
            write_or_print(out, canonical_dump(run_evaluate(g, kb, generated, s)));
        } else if (*simulate) {
            GameDefinition def;
            std::vector<std::vector<Button>> script;
            try {
                def = definition_from_json(read_json(definitionPath, "definition"));
                script = input_script_from_json(read_json(inputsPath, "input script"));
            } catch (const ConfigError&) {
                throw;
            } catch (const std::exception& e) {
                throw StageError("ingest", e.what());
            }
            Replayer r(def);
            nlohmann::json hashes = nlohmann::json::array({to_hex(fact_set_hash(r.world()))});
            for (const auto& inputs : script) {
                r.step(inputs);
                hashes.push_back(to_hex(fact_set_hash(r.world())));
            }
            write_or_print(out, canonical_dump({{"hashes", hashes}, {"outcome", outcome_name(r.outcome())}}));
        } else if (*exportCmd) {
            const std::uint64_t s = resolve_seed(seed);
            GameGraph g;
            Spritesheet sheet;
            try {
                g = load_graph(graphPath);
                sheet = load_spritesheet(sheetPath);
            } catch (const std::exception& e) {
                throw StageError("ingest", e.what());
            }
            LevelOptions lopts;
            if (attemptCap) lopts.attemptCap = *attemptCap;
            GeneratedLevel level;
            try {
                Rng rng = Rng(s).substream("generate");
                level = generate_level(g, rng, lopts);
            } catch (const std::exception& e) {
                throw StageError("generate", e.what());
            }
            try {
                write_or_print(out, canonical_dump(definition_to_json(export_game(g, level.level, sheet, s))));
            } catch (const std::exception& e) {
                throw StageError("export", e.what());
            }
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const StageError& e) {
        std::cerr << "stage " << e.stage() << " failed: " << e.what() << "\n";
        return kExitStage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitStage;
    }
    return 0;
}
