#include "playforge/browser/actions.hpp"

#include <array>
#include <charconv>

#include "playforge/error.hpp"

namespace playforge::browser {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr std::array<std::string_view, 12> kNamedKeys = {
    "ArrowUp", "ArrowDown", "ArrowLeft", "ArrowRight", "Enter", "Space",
    "Escape",  "Tab",       "Backspace", "Shift",      "Control", "Alt"};

void check_point(Point p, const Viewport& vp) {
    if (p.x < 0 || p.y < 0 || p.x >= vp.width || p.y >= vp.height) {
        throw Error(Errc::out_of_bounds, "point (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                                             ") outside " + std::to_string(vp.width) + "x" +
                                             std::to_string(vp.height) + " viewport");
    }
}

Point point_from(const json& j) {
    if (j.is_array() && j.size() == 2) return {j[0].get<int>(), j[1].get<int>()};
    return {j.at("x").get<int>(), j.at("y").get<int>()};
}

}  // namespace

Viewport parse_viewport(std::string_view text) {
    const auto x = text.find('x');
    Viewport vp{0, 0};
    if (x != std::string_view::npos) {
        std::from_chars(text.data(), text.data() + x, vp.width);
        std::from_chars(text.data() + x + 1, text.data() + text.size(), vp.height);
    }
    if (vp.width <= 0 || vp.height <= 0) {
        throw Error(Errc::invariant_violation, "viewport must be WxH with positive sides, got '" +
                                                   std::string(text) + "'");
    }
    return vp;
}

bool is_known_key(std::string_view key) {
    for (auto k : kNamedKeys) {
        if (k == key) return true;
    }
    return key.size() == 1 && ((key[0] >= 'a' && key[0] <= 'z') || (key[0] >= '0' && key[0] <= '9'));
}

void validate_action(const GuiAction& a, const Viewport& vp) {
    std::visit(overloaded{
                   [](const action::Screenshot&) {},
                   [&](const action::Click& c) { check_point(c.at, vp); },
                   [&](const action::Drag& d) {
                       check_point(d.from, vp);
                       check_point(d.to, vp);
                   },
                   [](const action::Key& k) {
                       if (!is_known_key(k.key)) throw Error(Errc::unknown_key, "unknown key '" + k.key + "'");
                       if (k.chord && !is_known_key(*k.chord)) {
                           throw Error(Errc::unknown_key, "unknown chord key '" + *k.chord + "'");
                       }
                       if (k.hold_ms < 0) throw Error(Errc::invariant_violation, "hold_ms must be >= 0");
                   },
                   [](const action::Type& t) {
                       for (unsigned char c : t.text) {
                           if (c < 0x20 || c > 0x7e) {
                               throw Error(Errc::unknown_key, "type text must be printable ASCII");
                           }
                       }
                   },
                   [](const action::Scroll&) {},
                   [](const action::Wait& w) {
                       if (w.ms <= 0) throw Error(Errc::invariant_violation, "wait needs ms > 0");
                   },
               },
               a);
}

std::string_view action_name(const GuiAction& a) {
    static constexpr std::array<std::string_view, 7> names = {"screenshot", "click", "drag", "key",
                                                              "type",       "scroll", "wait"};
    return names[a.index()];
}

json to_json(const GuiAction& a) {
    json j = std::visit(
        overloaded{
            [](const action::Screenshot&) { return json::object(); },
            [](const action::Click& c) { return json{{"x", c.at.x}, {"y", c.at.y}}; },
            [](const action::Drag& d) {
                return json{{"from", {d.from.x, d.from.y}}, {"to", {d.to.x, d.to.y}}};
            },
            [](const action::Key& k) {
                json o{{"key", k.key}, {"hold_ms", k.hold_ms}};
                if (k.chord) o["chord"] = *k.chord;
                return o;
            },
            [](const action::Type& t) { return json{{"text", t.text}}; },
            [](const action::Scroll& s) { return json{{"dx", s.dx}, {"dy", s.dy}}; },
            [](const action::Wait& w) { return json{{"ms", w.ms}}; },
        },
        a);
    j["action"] = action_name(a);
    return j;
}

GuiAction action_from_json(const json& j) {
    try {
        const auto name = j.at("action").get<std::string>();
        if (name == "screenshot") return action::Screenshot{};
        if (name == "click") return action::Click{point_from(j)};
        if (name == "drag") return action::Drag{point_from(j.at("from")), point_from(j.at("to"))};
        if (name == "key") {
            action::Key k{j.at("key").get<std::string>(), j.value("hold_ms", 80), std::nullopt};
            if (j.contains("chord") && !j.at("chord").is_null()) k.chord = j.at("chord").get<std::string>();
            return k;
        }
        if (name == "type") return action::Type{j.at("text").get<std::string>()};
        if (name == "scroll") return action::Scroll{j.value("dx", 0), j.value("dy", 0)};
        if (name == "wait") return action::Wait{j.at("ms").get<int>()};
        throw Error(Errc::invariant_violation, "unknown action '" + name + "'");
    } catch (const json::exception& e) {
        throw Error(Errc::invariant_violation, std::string("malformed action: ") + e.what());
    }
}

std::string_view to_string(ActionResult r) {
    switch (r) {
    case ActionResult::ok: return "ok";
    case ActionResult::budget_exceeded: return "BudgetExceeded";
    case ActionResult::session_closed: return "SessionClosed";
    }
    return "?";
}

}  // namespace playforge::browser
