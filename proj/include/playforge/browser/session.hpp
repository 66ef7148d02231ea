#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "playforge/browser/actions.hpp"
#include "playforge/browser/launcher.hpp"
#include "playforge/browser/static_server.hpp"

namespace playforge::browser {

class CdpConnection;

using WallClock = std::function<std::chrono::steady_clock::time_point()>;

struct SessionOptions {
    std::chrono::milliseconds load_timeout{std::chrono::seconds(10)};
    std::chrono::milliseconds command_timeout{std::chrono::seconds(10)};
    // When set, every screenshot is written to <frames_dir>/<step>.png.
    std::optional<std::filesystem::path> frames_dir;
    WallClock clock = [] { return std::chrono::steady_clock::now(); };
};

// One page in the browser, driven through the seven actions. Page time is
// virtual: it only advances during key holds, drags and waits, so a given
// action sequence always yields the same frames.
class BrowserSession final : public ActionSurface {
public:
    // Navigates to `url` and waits for the load event. Throws LoadTimeout or
    // BrowserUnavailable.
    BrowserSession(Browser& browser, const std::string& url, Viewport viewport, SessionBudget budget,
                   SessionOptions options = {});
    ~BrowserSession() override;

    BrowserSession(const BrowserSession&) = delete;
    BrowserSession& operator=(const BrowserSession&) = delete;

    ActionResult perform(const GuiAction& action) override;
    Screenshot screenshot() override;
    Viewport viewport() const override { return viewport_; }
    int step_index() const override { return step_; }

    // Driver-side only: page exceptions, failed resource loads and
    // console.error output since the session opened.
    const std::vector<std::string>& console_errors();

    std::int64_t page_time_ms() const { return virtual_ms_; }
    bool is_open() const { return open_; }
    void close();

private:
    void advance(int ms);
    void key_event(const std::string& type, const std::string& key, int modifiers);
    void mouse_event(const std::string& type, Point p, const std::string& button, int buttons = 0,
                     int dx = 0, int dy = 0);
    void collect_events();
    json call(const std::string& method, const json& params = json::object());

    Browser& browser_;
    Viewport viewport_;
    SessionBudget budget_;
    SessionOptions options_;
    std::string target_id_;
    std::unique_ptr<CdpConnection> cdp_;
    std::chrono::steady_clock::time_point started_;
    std::int64_t virtual_ms_ = 0;
    int step_ = 0;
    bool open_ = false;
    std::vector<std::string> console_errors_;
};

// A build served for exactly as long as its page is open.
class BuildSession final : public ActionSurface {
public:
    BuildSession(Browser& browser, const arena::GameBuild& build, Viewport viewport, SessionBudget budget,
                 SessionOptions options = {})
        : server_(build), session_(browser, server_.url(), viewport, budget, std::move(options)) {}

    ActionResult perform(const GuiAction& action) override { return session_.perform(action); }
    Screenshot screenshot() override { return session_.screenshot(); }
    Viewport viewport() const override { return session_.viewport(); }
    int step_index() const override { return session_.step_index(); }

    BrowserSession& session() { return session_; }

private:
    StaticServer server_;
    BrowserSession session_;
};

}  // namespace playforge::browser
