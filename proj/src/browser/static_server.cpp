#include "playforge/browser/static_server.hpp"

#include <thread>

#include "httplib.h"
#include "playforge/arena/task_io.hpp"
#include "playforge/error.hpp"

namespace playforge::browser {

struct StaticServer::Impl {
    httplib::Server server;
    std::thread thread;
};

StaticServer::StaticServer(const arena::GameBuild& build) : impl_(std::make_unique<Impl>()) {
    if (const auto problems = arena::validate_build(build); !problems.empty()) {
        throw Error(Errc::build_invalid, problems.front().detail);
    }
    auto& srv = impl_->server;
    if (!srv.set_mount_point("/", build.root.string())) {
        throw Error(Errc::build_invalid, "cannot serve " + build.root.string());
    }
    srv.set_default_headers({
        {"Content-Security-Policy", "default-src 'self' 'unsafe-inline'; connect-src 'none'"},
        {"Cache-Control", "no-store"},
    });
    const auto refuse = [](const httplib::Request&, httplib::Response& res) { res.status = 405; };
    srv.Post(".*", refuse);
    srv.Put(".*", refuse);
    srv.Delete(".*", refuse);
    srv.Patch(".*", refuse);
    srv.set_keep_alive_timeout(1);
    port_ = srv.bind_to_any_port("127.0.0.1");
    if (port_ <= 0) throw Error(Errc::port_unavailable, "no free loopback port for the build server");
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    srv.wait_until_ready();
    url_ = "http://127.0.0.1:" + std::to_string(port_) + "/" + build.entry;
}

StaticServer::~StaticServer() { close(); }

void StaticServer::close() {
    if (!impl_) return;
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
    impl_.reset();
}

}  // namespace playforge::browser
