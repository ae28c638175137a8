#include "expforge/fact.hpp"

#include <algorithm>
#include <array>
#include <sstream>
#include <stdexcept>

namespace expforge {

namespace {

constexpr std::array<std::string_view, 5> kButtonNames = {"left", "right", "up", "down", "action"};
constexpr std::array<std::string_view, 9> kTagNames = {"Animation",  "Spatial",   "RelationshipX",
                                                       "RelationshipY", "VelocityX", "VelocityY",
                                                       "CameraX",    "CameraY",   "Input"};

int int_field(const nlohmann::json& j, const char* key) {
    if (!j.contains(key)) throw std::runtime_error(std::string("missing field '") + key + "'");
    const auto& v = j.at(key);
    if (!v.is_number_integer()) throw std::runtime_error(std::string("field '") + key + "' must be an integer");
    return v.get<int>();
}

std::string str_field(const nlohmann::json& j, const char* key) {
    if (!j.contains(key)) throw std::runtime_error(std::string("missing field '") + key + "'");
    const auto& v = j.at(key);
    if (!v.is_string()) throw std::runtime_error(std::string("field '") + key + "' must be a string");
    return v.get<std::string>();
}

} // namespace

std::string_view button_name(Button b) { return kButtonNames[static_cast<std::size_t>(b)]; }

std::optional<Button> parse_button(std::string_view name) {
    for (std::size_t i = 0; i < kButtonNames.size(); ++i)
        if (kButtonNames[i] == name) return static_cast<Button>(i);
    return std::nullopt;
}

std::string_view tag_name(FactTag t) { return kTagNames[static_cast<std::size_t>(t)]; }

std::string to_string(const Fact& f) {
    std::ostringstream os;
    os << tag_name(tag_of(f)) << '(';
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, AnimationFact>) os << v.spriteId << ',' << v.width << ',' << v.height;
            else if constexpr (std::is_same_v<T, SpatialFact>) os << v.x << ',' << v.y;
            else if constexpr (std::is_same_v<T, RelationshipXFact>) os << v.otherSpriteId << ',' << v.dx;
            else if constexpr (std::is_same_v<T, RelationshipYFact>) os << v.otherSpriteId << ',' << v.dy;
            else if constexpr (std::is_same_v<T, VelocityXFact>) os << v.vx;
            else if constexpr (std::is_same_v<T, VelocityYFact>) os << v.vy;
            else if constexpr (std::is_same_v<T, CameraXFact>) os << v.x;
            else if constexpr (std::is_same_v<T, CameraYFact>) os << v.y;
            else os << button_name(v.button);
        },
        f);
    os << ')';
    return os.str();
}

nlohmann::json fact_to_json(const Fact& f) {
    nlohmann::json j;
    j["type"] = std::string(tag_name(tag_of(f)));
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, AnimationFact>) {
                j["spriteId"] = v.spriteId;
                j["w"] = v.width;
                j["h"] = v.height;
            } else if constexpr (std::is_same_v<T, SpatialFact>) {
                j["x"] = v.x;
                j["y"] = v.y;
            } else if constexpr (std::is_same_v<T, RelationshipXFact>) {
                j["otherSpriteId"] = v.otherSpriteId;
                j["dx"] = v.dx;
            } else if constexpr (std::is_same_v<T, RelationshipYFact>) {
                j["otherSpriteId"] = v.otherSpriteId;
                j["dy"] = v.dy;
            } else if constexpr (std::is_same_v<T, VelocityXFact>) {
                j["vx"] = v.vx;
            } else if constexpr (std::is_same_v<T, VelocityYFact>) {
                j["vy"] = v.vy;
            } else if constexpr (std::is_same_v<T, CameraXFact>) {
                j["x"] = v.x;
            } else if constexpr (std::is_same_v<T, CameraYFact>) {
                j["y"] = v.y;
            } else {
                j["button"] = std::string(button_name(v.button));
            }
        },
        f);
    return j;
}

Fact fact_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw std::runtime_error("fact must be an object");
    const std::string type = str_field(j, "type");
    if (type == "Animation") {
        AnimationFact a{str_field(j, "spriteId"), int_field(j, "w"), int_field(j, "h")};
        if (a.width <= 0 || a.height <= 0) throw std::runtime_error("Animation w and h must be positive");
        return a;
    }
    if (type == "Spatial") return SpatialFact{int_field(j, "x"), int_field(j, "y")};
    if (type == "RelationshipX") return RelationshipXFact{str_field(j, "otherSpriteId"), int_field(j, "dx")};
    if (type == "RelationshipY") return RelationshipYFact{str_field(j, "otherSpriteId"), int_field(j, "dy")};
    if (type == "VelocityX") return VelocityXFact{int_field(j, "vx")};
    if (type == "VelocityY") return VelocityYFact{int_field(j, "vy")};
    if (type == "CameraX") return CameraXFact{int_field(j, "x")};
    if (type == "CameraY") return CameraYFact{int_field(j, "y")};
    if (type == "Input") {
        const auto b = parse_button(str_field(j, "button"));
        if (!b) throw std::runtime_error("unknown input button '" + j.at("button").get<std::string>() + "'");
        return InputFact{*b};
    }
    throw std::runtime_error("unknown fact type '" + type + "'");
}

void normalize(FactSet& facts) {
    std::sort(facts.begin(), facts.end());
    facts.erase(std::unique(facts.begin(), facts.end()), facts.end());
}

bool contains(const FactSet& sorted, const Fact& f) { return std::binary_search(sorted.begin(), sorted.end(), f); }

bool includes(const FactSet& super, const FactSet& sub) {
    return std::includes(super.begin(), super.end(), sub.begin(), sub.end());
}

} // namespace expforge
