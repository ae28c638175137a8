#include "expforge/rule.hpp"

#include <stdexcept>

namespace expforge {

void validate_rule(const Rule& r) {
    if (!same_tag(r.pre, r.post))
        throw std::invalid_argument("rule " + std::to_string(r.id) + ": effect pre/post tags differ");
    if (!contains(r.conditions, r.pre))
        throw std::invalid_argument("rule " + std::to_string(r.id) + ": pre fact missing from conditions");
}

bool rule_requires_input(const Rule& r) {
    if (r.requiresInput) return true;
    for (const auto& c : r.conditions)
        if (tag_of(c) == FactTag::Input) return true;
    return false;
}

nlohmann::json rule_to_json(const Rule& r) {
    nlohmann::json j;
    j["id"] = r.id;
    j["subject"] = r.subject;
    j["conditions"] = nlohmann::json::array();
    for (const auto& c : r.conditions) j["conditions"].push_back(fact_to_json(c));
    j["effect"] = {{"pre", fact_to_json(r.pre)}, {"post", fact_to_json(r.post)}};
    if (r.requiresInput) j["requiresInput"] = fact_to_json(*r.requiresInput);
    return j;
}

Rule rule_from_json(const nlohmann::json& j) {
    Rule r;
    r.id = j.at("id").get<int>();
    r.subject = j.at("subject").get<std::string>();
    for (const auto& c : j.at("conditions")) r.conditions.push_back(fact_from_json(c));
    normalize(r.conditions);
    r.pre = fact_from_json(j.at("effect").at("pre"));
    r.post = fact_from_json(j.at("effect").at("post"));
    if (j.contains("requiresInput")) {
        const Fact f = fact_from_json(j.at("requiresInput"));
        if (tag_of(f) != FactTag::Input) throw std::runtime_error("requiresInput must be an Input fact");
        r.requiresInput = std::get<InputFact>(f);
    }
    validate_rule(r);
    return r;
}

nlohmann::json ruleset_to_json(const Ruleset& rules) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : rules) arr.push_back(rule_to_json(r));
    return {{"rules", arr}};
}

Ruleset ruleset_from_json(const nlohmann::json& j) {
    Ruleset out;
    for (const auto& r : j.at("rules")) out.push_back(rule_from_json(r));
    return out;
}

} // namespace expforge
