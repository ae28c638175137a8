#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "expforge/game_graph.hpp"

namespace expforge {

/// Malformed graph JSON. The message starts with the path of the offending field.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

nlohmann::json edge_to_json(const Edge& e);
nlohmann::json graph_to_json(const GameGraph& g);
GameGraph graph_from_json(const nlohmann::json& j);

/// Canonical text: sorted keys, two-space indent, LF endings, trailing newline.
std::string serialize(const GameGraph& g);
GameGraph deserialize(const std::string& text);

std::string canonical_dump(const nlohmann::json& j);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

GameGraph load_graph(const std::filesystem::path& path);
void save_graph(const std::filesystem::path& path, const GameGraph& g);

} // namespace expforge
