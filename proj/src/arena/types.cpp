#include "playforge/arena/types.hpp"

#include "playforge/error.hpp"

namespace playforge::arena {

namespace {

constexpr std::array<std::string_view, 8> kGenreNames = {
    "puzzle", "strategy", "card", "action", "platformer", "management", "shooter", "other"};

constexpr std::array<std::string_view, 5> kDimensionNames = {
    "mechanics", "controls", "progression", "interface", "visual_feedback"};

}  // namespace

std::string_view to_string(Genre genre) { return kGenreNames[static_cast<std::size_t>(genre)]; }

std::string_view to_string(Dimension dimension) {
    return kDimensionNames[static_cast<std::size_t>(dimension)];
}

std::optional<Genre> parse_genre(std::string_view text) {
    for (std::size_t i = 0; i < kGenreNames.size(); ++i) {
        if (kGenreNames[i] == text) return static_cast<Genre>(i);
    }
    return std::nullopt;
}

std::optional<Dimension> parse_dimension(std::string_view text) {
    for (std::size_t i = 0; i < kDimensionNames.size(); ++i) {
        if (kDimensionNames[i] == text) return static_cast<Dimension>(i);
    }
    return std::nullopt;
}

const Criterion* Rubric::find(std::string_view id) const {
    for (const auto& c : criteria) {
        if (c.id == id) return &c;
    }
    return nullptr;
}

void to_json(json& j, const Criterion& c) {
    j = json{{"id", c.id}, {"dimension", std::string(to_string(c.dimension))}, {"text", c.text}};
}

void from_json(const json& j, Criterion& c) {
    if (!j.is_object()) throw Error(Errc::malformed_rubric, "criterion must be an object");
    for (const char* key : {"id", "dimension", "text"}) {
        if (!j.contains(key) || !j.at(key).is_string()) {
            throw Error(Errc::malformed_rubric,
                        std::string("criterion field '") + key + "' missing or not a string");
        }
    }
    c.id = j.at("id").get<std::string>();
    const auto dim_name = j.at("dimension").get<std::string>();
    const auto dim = parse_dimension(dim_name);
    if (!dim) throw Error(Errc::malformed_rubric, "unknown dimension '" + dim_name + "'");
    c.dimension = *dim;
    c.text = j.at("text").get<std::string>();
}

void to_json(json& j, const Verdict& v) {
    j = json{{"criterion_id", v.criterion_id}, {"passed", v.passed}, {"evidence", v.evidence}};
}

void from_json(const json& j, Verdict& v) {
    v.criterion_id = j.at("criterion_id").get<std::string>();
    v.passed = j.at("passed").get<bool>();
    v.evidence = j.value("evidence", std::vector<int>{});
}

void to_json(json& j, const RubricScore& s) {
    j = json{{"passed", s.passed}, {"total", s.total}, {"value", s.value}};
}

void to_json(json& j, const GameBuild& b) {
    j = json{{"root", b.root.generic_string()}, {"entry", b.entry}, {"round", b.round}};
}

void from_json(const json& j, GameBuild& b) {
    b.root = j.at("root").get<std::string>();
    b.entry = j.value("entry", std::string("index.html"));
    b.round = j.at("round").get<int>();
}

}  // namespace playforge::arena
