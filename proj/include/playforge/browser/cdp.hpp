#pragma once

#include <chrono>
#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"

namespace playforge::browser {

using nlohmann::json;

// Blocking devtools-protocol connection to one page target. Not thread-safe;
// a session owns its connection.
class CdpConnection {
public:
    CdpConnection(const std::string& host, int port, const std::string& path,
                  std::chrono::milliseconds connect_timeout);
    ~CdpConnection();

    CdpConnection(const CdpConnection&) = delete;
    CdpConnection& operator=(const CdpConnection&) = delete;

    // Sends a command and returns its result, buffering events that arrive
    // meanwhile. Throws ProtocolError on error replies, timeouts or I/O failure.
    json call(const std::string& method, const json& params, std::chrono::milliseconds timeout);

    // Returns the first buffered or incoming event named `method`; nullopt on timeout.
    // A timeout leaves the connection unusable.
    std::optional<json> wait_event(std::string_view method, std::chrono::milliseconds timeout);

    // Hands over every buffered event, oldest first.
    std::deque<json> take_events();

    bool usable() const;
    void close();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

struct TargetInfo {
    std::string id;
    std::string ws_path;  // /devtools/page/<id>
};

// HTTP side of the protocol.
TargetInfo new_target(const std::string& host, int port);
void close_target(const std::string& host, int port, const std::string& id);
json browser_version(const std::string& host, int port);

}  // namespace playforge::browser
