#include "playforge/agent/guide.hpp"

#include <sstream>

#include "playforge/error.hpp"

namespace playforge::agent {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

}  // namespace

std::string render_guide(const GameGuide& g, const std::string& title) {
    return "# " + title + "\n\n## Controls\n" + g.controls + "\n\n## Objective\n" + g.objective +
           "\n\n## Success Condition\n" + g.success_condition + "\n";
}

GameGuide parse_guide(const std::string& markdown) {
    std::istringstream in(markdown);
    std::string line;
    std::string* current = nullptr;
    GameGuide g;
    bool seen[3] = {false, false, false};
    while (std::getline(in, line)) {
        const auto t = trim(line);
        if (t == "## Controls") {
            current = &g.controls;
            seen[0] = true;
        } else if (t == "## Objective") {
            current = &g.objective;
            seen[1] = true;
        } else if (t == "## Success Condition") {
            current = &g.success_condition;
            seen[2] = true;
        } else if (t.rfind("#", 0) == 0) {
            current = nullptr;
        } else if (current) {
            if (!current->empty()) *current += "\n";
            *current += line;
        }
    }
    g.controls = trim(g.controls);
    g.objective = trim(g.objective);
    g.success_condition = trim(g.success_condition);
    if (!seen[0] || !seen[1] || !seen[2] || g.controls.empty() || g.objective.empty() ||
        g.success_condition.empty()) {
        throw Error(Errc::invariant_violation, "game guide needs Controls, Objective and Success Condition");
    }
    return g;
}

}  // namespace playforge::agent
