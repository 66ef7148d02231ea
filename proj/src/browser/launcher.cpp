#include "playforge/browser/launcher.hpp"

#include <boost/process.hpp>
#include <cstdlib>
#include <future>
#include <regex>
#include <sstream>
#include <thread>

#include "playforge/browser/cdp.hpp"
#include "playforge/error.hpp"

namespace playforge::browser {

namespace bp = boost::process;

BrowserEndpoint parse_endpoint(const std::string& text) {
    const auto colon = text.rfind(':');
    if (colon == std::string::npos || colon == 0) {
        throw Error(Errc::browser_unavailable, "browser endpoint must be host:port, got '" + text + "'");
    }
    BrowserEndpoint ep{text.substr(0, colon), 0};
    try {
        ep.port = std::stoi(text.substr(colon + 1));
    } catch (const std::exception&) {
        throw Error(Errc::browser_unavailable, "bad port in browser endpoint '" + text + "'");
    }
    return ep;
}

BrowserConfig BrowserConfig::from_env() {
    BrowserConfig c;
    if (const char* ep = std::getenv("PLAYFORGE_BROWSER_ENDPOINT"); ep && *ep) c.endpoint = parse_endpoint(ep);
    if (const char* cmd = std::getenv("PLAYFORGE_BROWSER_CMD"); cmd && *cmd) {
        std::istringstream in(cmd);
        for (std::string word; in >> word;) c.command.push_back(word);
    }
    return c;
}

struct Browser::Child {
    bp::ipstream out;
    bp::opstream in;  // closing it tells the page host to exit
    bp::child proc;
    std::thread drain;

    ~Child() {
        std::error_code ec;
        in.pipe().close();
        if (proc.running(ec)) {
            proc.terminate(ec);
        }
        proc.wait(ec);
        if (drain.joinable()) drain.join();
    }
};

Browser::Browser(BrowserConfig config) {
    if (config.endpoint) {
        endpoint_ = *config.endpoint;
        browser_version(endpoint_.host, endpoint_.port);
        return;
    }
    auto argv = config.command;
    if (argv.empty()) {
        const auto node = bp::search_path("node");
        if (node.empty()) throw Error(Errc::browser_unavailable, "node not found on PATH");
        argv = {node.string(), PLAYFORGE_PAGEHOST, "--seed", std::to_string(config.seed)};
    } else if (argv[0].find('/') == std::string::npos) {
        const auto exe = bp::search_path(argv[0]);
        if (exe.empty()) throw Error(Errc::browser_unavailable, "browser command not found: " + argv[0]);
        argv[0] = exe.string();
    }

    child_ = std::make_unique<Child>();
    std::promise<BrowserEndpoint> announced;
    auto future = announced.get_future();
    try {
        child_->proc = bp::child(bp::exe = argv[0],
                                 bp::args = std::vector<std::string>(argv.begin() + 1, argv.end()),
                                 (bp::std_out & bp::std_err) > child_->out, bp::std_in < child_->in);
    } catch (const std::exception& e) {
        child_.reset();
        throw Error(Errc::browser_unavailable, std::string("cannot launch browser: ") + e.what());
    }
    // The reader keeps draining after the announcement so the child never
    // blocks on a full pipe.
    child_->drain = std::thread([this, p = std::move(announced)]() mutable {
        static const std::regex listening(R"(DevTools listening on ws://([^:/]+):(\d+)/)");
        bool found = false;
        for (std::string line; std::getline(child_->out, line);) {
            std::smatch m;
            if (!found && std::regex_search(line, m, listening)) {
                found = true;
                p.set_value({m[1].str(), std::stoi(m[2].str())});
            }
        }
        if (!found) {
            p.set_exception(std::make_exception_ptr(
                Error(Errc::browser_unavailable, "browser exited before announcing its devtools port")));
        }
    });
    if (future.wait_for(config.startup_timeout) != std::future_status::ready) {
        child_.reset();
        throw Error(Errc::browser_unavailable, "browser did not announce a devtools port in time");
    }
    try {
        endpoint_ = future.get();
    } catch (...) {
        child_.reset();
        throw;
    }
}

Browser::~Browser() = default;

Browser& LazyBrowser::get() {
    std::lock_guard lock(mutex_);
    if (!browser_) browser_ = std::make_unique<Browser>(config_);
    return *browser_;
}

}  // namespace playforge::browser
