#pragma once

#include <memory>
#include <string>

#include "playforge/arena/types.hpp"

namespace playforge::browser {

// Serves one build directory over loopback HTTP, GET only, with a content
// policy that keeps the page off the network. Stops on destruction.
class StaticServer {
public:
    explicit StaticServer(const arena::GameBuild& build);
    ~StaticServer();

    StaticServer(const StaticServer&) = delete;
    StaticServer& operator=(const StaticServer&) = delete;

    const std::string& url() const { return url_; }  // entry document
    int port() const { return port_; }
    void close();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::string url_;
    int port_ = 0;
};

}  // namespace playforge::browser
