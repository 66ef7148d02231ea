#pragma once

#include <optional>
#include <string>

namespace playforge::agent {

struct GameGuide {
    std::string controls;
    std::string objective;
    std::string success_condition;

    bool operator==(const GameGuide&) const = default;
};

// GAME_GUIDE.md form: "# <title>" then "## Controls", "## Objective",
// "## Success Condition" sections.
std::string render_guide(const GameGuide& guide, const std::string& title);

// Throws InvariantViolation when a section is missing or empty.
GameGuide parse_guide(const std::string& markdown);

}  // namespace playforge::agent
