#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace playforge::arena {

using nlohmann::json;

enum class Genre { puzzle, strategy, card, action, platformer, management, shooter, other };

inline constexpr std::array<Genre, 8> kAllGenres = {
    Genre::puzzle,     Genre::strategy,   Genre::card,    Genre::action,
    Genre::platformer, Genre::management, Genre::shooter, Genre::other};

enum class Dimension { mechanics, controls, progression, interface, visual_feedback };

inline constexpr std::array<Dimension, 5> kAllDimensions = {
    Dimension::mechanics, Dimension::controls, Dimension::progression, Dimension::interface,
    Dimension::visual_feedback};

std::string_view to_string(Genre genre);
std::string_view to_string(Dimension dimension);
std::optional<Genre> parse_genre(std::string_view text);
std::optional<Dimension> parse_dimension(std::string_view text);

struct Criterion {
    std::string id;
    Dimension dimension = Dimension::mechanics;
    std::string text;

    bool operator==(const Criterion&) const = default;
};

struct Rubric {
    std::vector<Criterion> criteria;

    const Criterion* find(std::string_view id) const;
    bool operator==(const Rubric&) const = default;
};

struct GameTask {
    std::string id;
    Genre genre = Genre::other;
    std::string prompt;
    Rubric rubric;

    bool operator==(const GameTask&) const = default;
};

// A build is a directory of static files with an entry document.
struct GameBuild {
    std::filesystem::path root;
    std::string entry = "index.html";
    int round = 1;

    std::filesystem::path entry_path() const { return root / entry; }
};

struct Verdict {
    std::string criterion_id;
    bool passed = false;
    std::vector<int> evidence;  // step indices into the play log

    bool operator==(const Verdict&) const = default;
};

struct RubricScore {
    int passed = 0;
    int total = 0;
    double value = 0.0;
};

// Advisory rubric size window; sizes outside it produce warnings only.
inline constexpr std::size_t kRubricSizeAdvisoryMin = 5;
inline constexpr std::size_t kRubricSizeAdvisoryMax = 15;

void to_json(json& j, const Criterion& c);
void from_json(const json& j, Criterion& c);
void to_json(json& j, const Verdict& v);
void from_json(const json& j, Verdict& v);
void to_json(json& j, const RubricScore& s);
void to_json(json& j, const GameBuild& b);
void from_json(const json& j, GameBuild& b);

}  // namespace playforge::arena
