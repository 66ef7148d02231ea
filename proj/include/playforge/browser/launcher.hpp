#pragma once

#include <atomic>
#include <chrono>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace playforge::browser {

struct BrowserEndpoint {
    std::string host = "127.0.0.1";
    int port = 0;
};

// Parses "host:port".
BrowserEndpoint parse_endpoint(const std::string& text);

struct BrowserConfig {
    // Attach to an already running devtools endpoint instead of launching.
    std::optional<BrowserEndpoint> endpoint;
    // Command that starts a devtools-speaking browser on a free port and
    // announces "DevTools listening on ws://host:port/...". Empty selects the
    // bundled node page host.
    std::vector<std::string> command;
    unsigned seed = 1;
    std::chrono::milliseconds startup_timeout{std::chrono::seconds(15)};

    // PLAYFORGE_BROWSER_ENDPOINT=host:port or PLAYFORGE_BROWSER_CMD="chromium --headless=new ...".
    static BrowserConfig from_env();
};

// A browser the driver can open pages in. Owns the child process when launched.
class Browser {
public:
    explicit Browser(BrowserConfig config = BrowserConfig::from_env());
    ~Browser();

    Browser(const Browser&) = delete;
    Browser& operator=(const Browser&) = delete;

    const BrowserEndpoint& endpoint() const { return endpoint_; }

    // Pages opened so far; used by the loop's mode contracts.
    int sessions_opened() const { return sessions_opened_.load(); }
    void note_session_opened() { ++sessions_opened_; }

private:
    struct Child;
    std::unique_ptr<Child> child_;
    BrowserEndpoint endpoint_;
    std::atomic<int> sessions_opened_{0};
};

// Starts a Browser on first use and shares it; lets modes that never play
// avoid spawning anything.
class LazyBrowser {
public:
    explicit LazyBrowser(BrowserConfig config = BrowserConfig::from_env()) : config_(std::move(config)) {}

    Browser& get();
    bool started() const { return browser_ != nullptr; }
    int sessions_opened() const { return browser_ ? browser_->sessions_opened() : 0; }

private:
    BrowserConfig config_;
    std::unique_ptr<Browser> browser_;
    std::mutex mutex_;
};

}  // namespace playforge::browser
