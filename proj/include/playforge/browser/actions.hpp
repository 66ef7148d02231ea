#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "json.hpp"
#include "playforge/browser/image.hpp"

namespace playforge::browser {

using nlohmann::json;

struct Viewport {
    int width = 1280;
    int height = 720;

    bool operator==(const Viewport&) const = default;
};

// Parses "WxH".
Viewport parse_viewport(std::string_view text);

struct Point {
    int x = 0;
    int y = 0;

    bool operator==(const Point&) const = default;
};

namespace action {

struct Screenshot {
    bool operator==(const Screenshot&) const = default;
};
struct Click {
    Point at;
    bool operator==(const Click&) const = default;
};
struct Drag {
    Point from;
    Point to;
    bool operator==(const Drag&) const = default;
};
struct Key {
    std::string key;
    int hold_ms = 80;
    std::optional<std::string> chord;
    bool operator==(const Key&) const = default;
};
struct Type {
    std::string text;
    bool operator==(const Type&) const = default;
};
struct Scroll {
    int dx = 0;
    int dy = 0;
    bool operator==(const Scroll&) const = default;
};
struct Wait {
    int ms = 0;
    bool operator==(const Wait&) const = default;
};

}  // namespace action

using GuiAction = std::variant<action::Screenshot, action::Click, action::Drag, action::Key,
                               action::Type, action::Scroll, action::Wait>;

// Closed key vocabulary: arrows, Enter, Space, Escape, Tab, Backspace,
// Shift, Control, Alt, a-z, 0-9.
bool is_known_key(std::string_view key);

// Throws OutOfBounds / UnknownKey / InvariantViolation for actions the
// driver must refuse.
void validate_action(const GuiAction& action, const Viewport& viewport);

std::string_view action_name(const GuiAction& action);

// Tool-call form: {"action": "key", "key": "ArrowUp", "hold_ms": 80}.
json to_json(const GuiAction& action);
GuiAction action_from_json(const json& j);

struct Screenshot {
    Image pixels;
    std::string png;             // bytes as captured
    std::int64_t captured_at = 0;  // page virtual time, ms
    int step_index = 0;
};

enum class ActionResult { ok, budget_exceeded, session_closed };

std::string_view to_string(ActionResult r);

struct SessionBudget {
    std::chrono::milliseconds wall_clock_limit{std::chrono::minutes(5)};
    int max_steps = 400;

    static SessionBudget feasibility() { return {std::chrono::minutes(5), 400}; }
    static SessionBudget judge() { return {std::chrono::minutes(10), 400}; }
};

// What a GUI agent may do with a page: act and look. Nothing else.
class ActionSurface {
public:
    virtual ~ActionSurface() = default;
    virtual ActionResult perform(const GuiAction& action) = 0;
    virtual Screenshot screenshot() = 0;
    virtual Viewport viewport() const = 0;
    virtual int step_index() const = 0;
};

}  // namespace playforge::browser
