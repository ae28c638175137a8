#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "expforge/graph_json.hpp"
#include "expforge/learn.hpp"
#include "expforge/pipeline.hpp"
#include "test_support.hpp"

using namespace expforge;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / "expforge_tests" / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

/// Two completable originals and a short search: a full pipeline run in seconds.
PipelineConfig quick_config(const fs::path& outDir) {
    PipelineConfig c;
    c.kb = {testsupport::fixture("graphs/walker.graph.json"), testsupport::fixture("graphs/climber.graph.json")};
    c.protoSheet = testsupport::fixture("proto.sheet.json");
    c.player = "knight_1";
    c.outDir = outDir;
    c.seed = 42;
    c.maxSteps = 3;
    return c;
}

std::string slurp(const fs::path& p) { return read_text_file(p); }

int run_cli(const std::string& args, const fs::path& log) {
    const std::string cmd = std::string(EXPFORGE_BIN) + " " + args + " > " + log.string() + " 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

} // namespace

TEST_CASE("generate is byte-identical for a fixed seed") {
    const auto a = run_generate(quick_config(scratch("det_a")));
    const auto b = run_generate(quick_config(scratch("det_b")));
    CHECK(slurp(a.graphPath) == slurp(b.graphPath));
    CHECK(slurp(a.definitionPath) == slurp(b.definitionPath));
    CHECK(slurp(a.reportPath) == slurp(b.reportPath));
    CHECK(a.graph.provenance == Provenance::Expanded);
    CHECK(a.report.at("search").at("steps") == 3);
    CHECK(a.report.at("search").at("evaluations") == 31);

    PipelineConfig other = quick_config(scratch("det_c"));
    other.seed = 43;
    const auto c = run_generate(other);
    CHECK(slurp(c.graphPath) != slurp(a.graphPath));
}

TEST_CASE("a second run sees the first output in its knowledge base") {
    const fs::path dir = scratch("seq");
    const auto first = run_generate(quick_config(dir));
    CHECK(first.report.at("kb").at("generated").empty());
    const auto second = run_generate(quick_config(dir));

    const auto& gen = second.report.at("kb").at("generated");
    REQUIRE(gen.size() == 1);
    CHECK(gen[0].at("id") == first.report.at("id"));
    CHECK(gen[0].at("hash") == first.report.at("output").at("hash"));
    CHECK(gen[0].at("path") == first.graphPath.filename().string());
    CHECK(gen[0].at("provenance") == "expanded");
    CHECK(second.report.at("id") == "expand-2");
    CHECK(second.report.at("kb").at("originals").size() == 2);

    const KbManifest m = KbManifest::load(dir / "kb_manifest.json");
    REQUIRE(m.entries().size() == 2);
    CHECK(m.entries()[0].hash == file_hash(first.graphPath));
    CHECK(m.graphs()[1] == second.graph);
}

TEST_CASE("a tampered manifest entry stops the pipeline") {
    const fs::path dir = scratch("tamper");
    const auto first = run_generate(quick_config(dir));
    std::ofstream(first.graphPath, std::ios::app) << " ";
    CHECK_THROWS_AS(KbManifest::load(dir / "kb_manifest.json"), ManifestError);
    try {
        run_generate(quick_config(dir));
        FAIL("expected a stage error");
    } catch (const StageError& e) {
        CHECK(e.stage() == "kb");
    }

    fs::remove(first.graphPath);
    CHECK_THROWS_AS(KbManifest::load(dir / "kb_manifest.json"), ManifestError);
    std::ofstream(dir / "kb_manifest.json") << "{\"entries\": 3}";
    CHECK_THROWS_AS(KbManifest::load(dir / "kb_manifest.json"), ManifestError);
    CHECK(KbManifest::load(dir / "absent.json").entries().empty());
}

TEST_CASE("config parsing rejects unknown keys and bad values") {
    const PipelineConfig c = config_from_json({{"seed", 5}, {"method", "blend"}, {"maxSteps", 0}, {"kb", {"a", "b"}}});
    CHECK(c.seed == std::optional<std::uint64_t>(5));
    CHECK(c.method == Method::Blend);
    CHECK(c.maxSteps == 0);
    CHECK(c.kb.size() == 2);
    CHECK(c.neighbors == 10);
    CHECK(c.patience == 10);
    CHECK_THROWS_AS(config_from_json({{"neighbours", 3}}), ConfigError);
    CHECK_THROWS_AS(config_from_json({{"method", "mashup"}}), ConfigError);
    CHECK_THROWS_AS(config_from_json({{"patience", "ten"}}), ConfigError);
    CHECK_THROWS_AS(config_from_json(nlohmann::json::array()), ConfigError);
    for (auto m : {Method::Expand, Method::Amalgam, Method::Blend, Method::Composition})
        CHECK(parse_method(method_name(m)) == m);
}

TEST_CASE("the seed comes from the config, then the environment, else it is an error") {
    unsetenv("EXPFORGE_SEED");
    CHECK_THROWS_AS(resolve_seed(std::nullopt), ConfigError);
    setenv("EXPFORGE_SEED", "77", 1);
    CHECK(resolve_seed(std::nullopt) == 77);
    CHECK(resolve_seed(std::optional<std::uint64_t>(3)) == 3);
    setenv("EXPFORGE_SEED", "x7", 1);
    CHECK_THROWS_AS(resolve_seed(std::nullopt), ConfigError);
    unsetenv("EXPFORGE_SEED");

    PipelineConfig c = quick_config(scratch("noseed"));
    c.seed.reset();
    CHECK_THROWS_AS(run_generate(c), ConfigError);
    c.seed = 1;
    c.kb.pop_back();
    CHECK_THROWS_AS(run_generate(c), ConfigError);
}

TEST_CASE("evaluate reports zero novelty for an original and lists the kb") {
    const auto games = testsupport::learned_games();
    const auto r = run_evaluate(games[0], games, {}, 9);
    CHECK(r.at("novelty").get<double>() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(r.at("graph") == games[0].id);
    CHECK(r.at("kb").at("originals").size() == 3);
    for (const char* k : {"surprise", "value", "total"}) {
        CHECK(r.at(k).get<double>() >= 0.0);
        CHECK(r.at(k).get<double>() <= 3.0);
    }
    CHECK(run_evaluate(games[0], games, {}, 9) == r);
}

TEST_CASE("command line exit codes and simulate output") {
    const fs::path dir = scratch("cli");
    const fs::path log = dir / "log.txt";
    CHECK(run_cli("", log) == 2);
    CHECK(run_cli("frobnicate", log) == 2);
    CHECK(run_cli("simulate --definition", log) == 2);

    const std::string golden = std::string(FIXTURE_DIR) + "/golden/";
    const fs::path out = dir / "hashes.json";
    REQUIRE(run_cli("simulate --definition " + golden + "walker.definition.json --inputs " + golden +
                        "walker.inputs.json -o " + out.string(),
                    log) == 0);
    CHECK(nlohmann::json::parse(slurp(out)) == nlohmann::json::parse(slurp(golden + "walker.hashes.json")));

    CHECK(run_cli("simulate --definition " + (dir / "nope.json").string() + " --inputs " + golden +
                      "walker.inputs.json",
                  log) == 2);
    CHECK(run_cli("evaluate --graph " + (dir / "nope.json").string() + " --kb " + testsupport::fixture("graphs/walker.graph.json") +
                      " --seed 1",
                  log) == 3);
    const std::string kb = testsupport::fixture("graphs/walker.graph.json") + " " +
                           testsupport::fixture("graphs/climber.graph.json");
    const std::string common = "generate --kb " + kb + " --sheet " + testsupport::fixture("proto.sheet.json") +
                               " --out-dir " + (dir / "gen").string() + " --max-steps 3";
    CHECK(run_cli(common + " --player knight_1 --seed 42 --method mashup", log) == 2);
    CHECK(run_cli(common + " --seed 42 --player nobody", log) == 3);
    CHECK(slurp(log).find("nobody") != std::string::npos);
    unsetenv("EXPFORGE_SEED");
    CHECK(run_cli(common + " --player knight_1", log) == 2);
    CHECK(slurp(log).find("seed") != std::string::npos);

    // config file values, flags on top
    std::ofstream(dir / "cfg.json") << R"({"seed": 42, "maxSteps": 3, "unknownKey": 1})";
    CHECK(run_cli(common + " --player knight_1 --config " + (dir / "cfg.json").string(), log) == 2);
    std::ofstream(dir / "cfg.json") << R"({"seed": 42, "maxSteps": 3})";
    REQUIRE(run_cli(common + " --player knight_1 --config " + (dir / "cfg.json").string(), log) == 0);
    const auto report = nlohmann::json::parse(slurp(log));
    CHECK(report.at("runSeed") == 42);
    CHECK(report.at("search").at("steps") == 3);
}

TEST_CASE("learn on the command line reproduces the committed graph") {
    const fs::path dir = scratch("learn");
    const fs::path out = dir / "walker.graph.json";
    REQUIRE(run_cli("learn --trace " + testsupport::fixture("walker.trace.json") + " --sheet " +
                        testsupport::fixture("walker.sheet.json") + " --seed 1 -o " + out.string(),
                    dir / "log.txt") == 0);
    CHECK(load_graph(out) == load_graph(testsupport::fixture("graphs/walker.graph.json")));
}
