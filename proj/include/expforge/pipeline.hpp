#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "expforge/combinators.hpp"
#include "expforge/heuristic.hpp"
#include "expforge/simulate.hpp"

namespace expforge {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Method { Expand, Amalgam, Blend, Composition };
std::optional<Method> parse_method(std::string_view s);
std::string_view method_name(Method m);

struct PipelineConfig {
    std::vector<std::filesystem::path> kb;
    std::filesystem::path protoSheet;
    std::string player;
    std::filesystem::path outDir = ".";
    /// Defaults to outDir/kb_manifest.json.
    std::filesystem::path manifest;
    std::optional<std::uint64_t> seed;
    Method method = Method::Expand;
    double threshold = kDefaultClusterThreshold;
    int neighbors = 10;
    int patience = 10;
    /// Search step budget (0 = until patience runs out).
    int maxSteps = 100;
    int attemptCap = 50;
    /// Fresh searches tried when the best expansion yields no completable level.
    int searchRestarts = 3;
    std::uint64_t exhaustiveCap = 1000000;
    std::uint64_t samples = 50000;
    int threads = 0;

    std::filesystem::path manifest_path() const;
};

/// Fields present in `j` override `base`. Unknown keys are a ConfigError.
PipelineConfig config_from_json(const nlohmann::json& j, PipelineConfig base = {});

/// Seed from the config, else EXPFORGE_SEED; ConfigError when neither is set.
std::uint64_t resolve_seed(const std::optional<std::uint64_t>& seed);

/// Hex FNV-1a of a file's bytes.
std::string file_hash(const std::filesystem::path& path);
std::string text_hash(const std::string& text);

struct ManifestEntry {
    std::string id;
    /// Relative to the manifest's directory.
    std::string path;
    std::string hash;
    std::string method;
    std::uint64_t seed = 0;
    bool operator==(const ManifestEntry&) const = default;
};

class ManifestError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Append-only list of generated graphs. Loading verifies every entry's hash.
class KbManifest {
public:
    /// A missing file is an empty manifest.
    static KbManifest load(const std::filesystem::path& path);

    const std::vector<ManifestEntry>& entries() const { return entries_; }
    std::vector<GameGraph> graphs() const;
    void append(ManifestEntry e);
    void save() const;
    std::filesystem::path directory() const { return path_.parent_path(); }

private:
    std::filesystem::path path_;
    std::vector<ManifestEntry> entries_;
};

/// Learned originals and the seeded pieces every command shares.
struct Workspace {
    std::vector<GameGraph> originals;
    KnowledgeBase kb;
    ReferenceDistribution refs;
    std::uint64_t valueSeed = 0;
};

Workspace open_workspace(const std::vector<GameGraph>& originals, const std::vector<GameGraph>& generated,
                         std::uint64_t seed);

nlohmann::json kb_provenance(const Workspace& ws, const KbManifest* manifest);

struct GenerateResult {
    GameGraph graph;
    GameDefinition definition;
    nlohmann::json report;
    std::filesystem::path graphPath;
    std::filesystem::path definitionPath;
    std::filesystem::path reportPath;
};

/// proto-map -> combinator -> heuristic -> level generation -> export, then
/// appends the output graph to the manifest. Errors are StageErrors.
GenerateResult run_generate(const PipelineConfig& cfg);

/// Heuristic report of one graph against the originals plus the manifest's graphs.
nlohmann::json run_evaluate(const GameGraph& g, const std::vector<GameGraph>& originals,
                            const std::vector<GameGraph>& generated, std::uint64_t seed);

} // namespace expforge
