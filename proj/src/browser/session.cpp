#include "playforge/browser/session.hpp"

#include <fstream>
#include <map>

#include "playforge/browser/cdp.hpp"
#include "playforge/error.hpp"

namespace playforge::browser {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

struct KeyInfo {
    std::string key;   // DOM key value
    std::string code;  // DOM code
    int vk = 0;
    std::string text;  // inserted text, empty for non-printing keys
};

KeyInfo key_info(const std::string& name) {
    static const std::map<std::string, KeyInfo> named = {
        {"ArrowUp", {"ArrowUp", "ArrowUp", 38, ""}},
        {"ArrowDown", {"ArrowDown", "ArrowDown", 40, ""}},
        {"ArrowLeft", {"ArrowLeft", "ArrowLeft", 37, ""}},
        {"ArrowRight", {"ArrowRight", "ArrowRight", 39, ""}},
        {"Enter", {"Enter", "Enter", 13, "\r"}},
        {"Space", {" ", "Space", 32, " "}},
        {"Escape", {"Escape", "Escape", 27, ""}},
        {"Tab", {"Tab", "Tab", 9, ""}},
        {"Backspace", {"Backspace", "Backspace", 8, ""}},
        {"Shift", {"Shift", "ShiftLeft", 16, ""}},
        {"Control", {"Control", "ControlLeft", 17, ""}},
        {"Alt", {"Alt", "AltLeft", 18, ""}},
    };
    if (auto it = named.find(name); it != named.end()) return it->second;
    const char c = name.at(0);
    if (c >= 'a' && c <= 'z') return {name, std::string("Key") + char(c - 'a' + 'A'), c - 'a' + 'A', name};
    if (c >= '0' && c <= '9') return {name, std::string("Digit") + c, c, name};
    // Type action characters outside the key vocabulary.
    return {name, "", 0, name};
}

int modifier_bit(const std::string& key) {
    if (key == "Alt") return 1;
    if (key == "Control") return 2;
    if (key == "Shift") return 8;
    return 0;
}

}  // namespace

BrowserSession::BrowserSession(Browser& browser, const std::string& url, Viewport viewport, SessionBudget budget,
                               SessionOptions options)
    : browser_(browser), viewport_(viewport), budget_(budget), options_(std::move(options)) {
    if (viewport_.width <= 0 || viewport_.height <= 0) {
        throw Error(Errc::invariant_violation, "viewport sides must be positive");
    }
    const auto& ep = browser_.endpoint();
    const auto target = new_target(ep.host, ep.port);
    target_id_ = target.id;
    browser_.note_session_opened();
    try {
        cdp_ = std::make_unique<CdpConnection>(ep.host, ep.port, target.ws_path, options_.command_timeout);
        call("Page.enable");
        call("Runtime.enable");
        call("Log.enable");
        call("Emulation.setDeviceMetricsOverride",
             {{"width", viewport_.width}, {"height", viewport_.height}, {"deviceScaleFactor", 1}, {"mobile", false}});
        call("Emulation.setVirtualTimePolicy", {{"policy", "pause"}});
        const auto nav = call("Page.navigate", {{"url", url}});
        if (nav.contains("errorText") && !nav["errorText"].get<std::string>().empty()) {
            throw Error(Errc::load_timeout, "navigation failed: " + nav["errorText"].get<std::string>());
        }
        if (!cdp_->wait_event("Page.loadEventFired", options_.load_timeout)) {
            throw Error(Errc::load_timeout, "page did not finish loading within " +
                                                std::to_string(options_.load_timeout.count()) + " ms");
        }
        collect_events();
    } catch (...) {
        close();
        throw;
    }
    open_ = true;
    started_ = options_.clock();
}

BrowserSession::~BrowserSession() { close(); }

json BrowserSession::call(const std::string& method, const json& params) {
    return cdp_->call(method, params, options_.command_timeout);
}

void BrowserSession::close() {
    open_ = false;
    if (cdp_) {
        cdp_->close();
        cdp_.reset();
    }
    if (!target_id_.empty()) {
        try {
            close_target(browser_.endpoint().host, browser_.endpoint().port, target_id_);
        } catch (...) {
        }
        target_id_.clear();
    }
}

void BrowserSession::collect_events() {
    for (auto& ev : cdp_->take_events()) {
        const auto method = ev.value("method", "");
        const auto& p = ev["params"];
        if (method == "Runtime.exceptionThrown") {
            console_errors_.push_back(p["exceptionDetails"].value("text", "exception"));
        } else if (method == "Log.entryAdded" && p["entry"].value("level", "") == "error") {
            console_errors_.push_back(p["entry"].value("text", "error"));
        } else if (method == "Runtime.consoleAPICalled" && p.value("type", "") == "error") {
            std::string text = "console.error:";
            for (const auto& a : p["args"]) text += " " + (a.contains("value") ? a["value"].dump() : "?");
            console_errors_.push_back(text);
        }
    }
}

const std::vector<std::string>& BrowserSession::console_errors() {
    if (cdp_ && cdp_->usable()) collect_events();
    return console_errors_;
}

void BrowserSession::advance(int ms) {
    if (ms <= 0) return;
    call("Emulation.setVirtualTimePolicy", {{"policy", "advance"}, {"budget", ms}});
    if (!cdp_->wait_event("Emulation.virtualTimeBudgetExpired", options_.command_timeout)) {
        throw Error(Errc::protocol_error, "virtual time budget never expired");
    }
    virtual_ms_ += ms;
}

void BrowserSession::key_event(const std::string& type, const std::string& key, int modifiers) {
    const auto info = key_info(key);
    json p{{"type", type},
           {"key", info.key},
           {"code", info.code},
           {"windowsVirtualKeyCode", info.vk},
           {"nativeVirtualKeyCode", info.vk},
           {"modifiers", modifiers}};
    if (type == "keyDown" && !info.text.empty()) p["text"] = info.text;
    if (type == "keyDown" && info.text.empty()) p["type"] = "rawKeyDown";
    call("Input.dispatchKeyEvent", p);
}

void BrowserSession::mouse_event(const std::string& type, Point pt, const std::string& button, int buttons, int dx,
                                 int dy) {
    json p{{"type", type}, {"x", pt.x}, {"y", pt.y}, {"button", button}, {"buttons", buttons}};
    if (type == "mousePressed" || type == "mouseReleased") p["clickCount"] = 1;
    if (type == "mouseWheel") {
        p["deltaX"] = dx;
        p["deltaY"] = dy;
    }
    call("Input.dispatchMouseEvent", p);
}

ActionResult BrowserSession::perform(const GuiAction& a) {
    if (!open_) return ActionResult::session_closed;
    validate_action(a, viewport_);
    if (step_ >= budget_.max_steps || options_.clock() - started_ > budget_.wall_clock_limit) {
        close();
        return ActionResult::budget_exceeded;
    }
    std::visit(overloaded{
                   [](const action::Screenshot&) {},
                   [&](const action::Click& c) {
                       mouse_event("mouseMoved", c.at, "none");
                       mouse_event("mousePressed", c.at, "left", 1);
                       mouse_event("mouseReleased", c.at, "left");
                   },
                   [&](const action::Drag& d) {
                       constexpr int kSteps = 8;
                       mouse_event("mouseMoved", d.from, "none");
                       mouse_event("mousePressed", d.from, "left", 1);
                       for (int i = 1; i <= kSteps; ++i) {
                           const Point p{d.from.x + (d.to.x - d.from.x) * i / kSteps,
                                         d.from.y + (d.to.y - d.from.y) * i / kSteps};
                           advance(16);
                           mouse_event("mouseMoved", p, "left", 1);
                       }
                       mouse_event("mouseReleased", d.to, "left");
                   },
                   [&](const action::Key& k) {
                       int mods = modifier_bit(k.key);
                       key_event("keyDown", k.key, mods);
                       if (k.chord) {
                           mods |= modifier_bit(*k.chord);
                           key_event("keyDown", *k.chord, mods);
                       }
                       advance(k.hold_ms);
                       if (k.chord) {
                           key_event("keyUp", *k.chord, mods);
                           mods &= ~modifier_bit(*k.chord);
                       }
                       key_event("keyUp", k.key, mods);
                   },
                   [&](const action::Type& t) {
                       for (char c : t.text) {
                           const std::string ch(1, c);
                           key_event("keyDown", c == ' ' ? "Space" : ch, 0);
                           key_event("keyUp", c == ' ' ? "Space" : ch, 0);
                       }
                   },
                   [&](const action::Scroll& s) {
                       mouse_event("mouseWheel", {viewport_.width / 2, viewport_.height / 2}, "none", 0, s.dx, s.dy);
                   },
                   [&](const action::Wait& w) { advance(w.ms); },
               },
               a);
    ++step_;
    return ActionResult::ok;
}

Screenshot BrowserSession::screenshot() {
    if (!open_) throw Error(Errc::session_closed, "screenshot on a closed session");
    const auto res = call("Page.captureScreenshot", {{"format", "png"}});
    Screenshot shot;
    shot.png = base64_decode(res.at("data").get<std::string>());
    shot.pixels = decode_png(shot.png);
    shot.captured_at = virtual_ms_;
    shot.step_index = step_;
    if (shot.pixels.width != viewport_.width || shot.pixels.height != viewport_.height) {
        throw Error(Errc::protocol_error, "screenshot size differs from the viewport");
    }
    if (options_.frames_dir) {
        std::filesystem::create_directories(*options_.frames_dir);
        std::ofstream out(*options_.frames_dir / (std::to_string(step_) + ".png"), std::ios::binary);
        out.write(shot.png.data(), static_cast<std::streamsize>(shot.png.size()));
    }
    return shot;
}

}  // namespace playforge::browser
