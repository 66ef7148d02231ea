#include "playforge/browser/cdp.hpp"

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "httplib.h"
#include "playforge/error.hpp"

namespace playforge::browser {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

struct CdpConnection::Impl {
    asio::io_context ioc;
    websocket::stream<beast::tcp_stream> ws{ioc};
    beast::flat_buffer buffer;
    std::deque<json> events;
    int next_id = 1;
    bool broken = false;

    // Drives one async op; on timeout the socket is cancelled and the
    // connection marked broken. Returns false on timeout.
    template <class Start>
    bool run(Start&& start, std::chrono::milliseconds timeout, const char* what) {
        if (broken) throw Error(Errc::session_closed, "devtools connection is closed");
        beast::error_code ec;
        bool done = false;
        start([&](beast::error_code e, auto&&...) {
            ec = e;
            done = true;
        });
        ioc.restart();
        ioc.run_for(timeout);
        if (!done) {
            broken = true;
            beast::get_lowest_layer(ws).cancel();
            ioc.restart();
            ioc.run();
            return false;
        }
        if (ec) {
            broken = true;
            throw Error(Errc::protocol_error, std::string(what) + ": " + ec.message());
        }
        return true;
    }

    // Reads one message; nullopt on timeout.
    std::optional<json> read(std::chrono::milliseconds timeout) {
        buffer.clear();
        if (!run([&](auto handler) { ws.async_read(buffer, std::move(handler)); }, timeout, "read")) {
            return std::nullopt;
        }
        try {
            return json::parse(beast::buffers_to_string(buffer.data()));
        } catch (const json::exception& e) {
            throw Error(Errc::protocol_error, std::string("malformed devtools message: ") + e.what());
        }
    }
};

CdpConnection::CdpConnection(const std::string& host, int port, const std::string& path,
                             std::chrono::milliseconds connect_timeout)
    : impl_(std::make_unique<Impl>()) {
    tcp::resolver resolver(impl_->ioc);
    const auto endpoints = resolver.resolve(host, std::to_string(port));
    if (!impl_->run([&](auto h) { beast::get_lowest_layer(impl_->ws).async_connect(endpoints, std::move(h)); },
                    connect_timeout, "connect")) {
        throw Error(Errc::browser_unavailable, "connect to devtools timed out");
    }
    impl_->ws.read_message_max(64 * 1024 * 1024);
    const auto hostport = host + ":" + std::to_string(port);
    if (!impl_->run([&](auto h) { impl_->ws.async_handshake(hostport, path, std::move(h)); }, connect_timeout,
                    "handshake")) {
        throw Error(Errc::browser_unavailable, "devtools handshake timed out");
    }
}

CdpConnection::~CdpConnection() { close(); }

json CdpConnection::call(const std::string& method, const json& params, std::chrono::milliseconds timeout) {
    auto& d = *impl_;
    const int id = d.next_id++;
    const auto text = json{{"id", id}, {"method", method}, {"params", params}}.dump();
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    auto remaining = [&] {
        return std::max(std::chrono::milliseconds(1), std::chrono::duration_cast<std::chrono::milliseconds>(
                                                          deadline - std::chrono::steady_clock::now()));
    };
    if (!d.run([&](auto h) { d.ws.async_write(asio::buffer(text), std::move(h)); }, remaining(), "write")) {
        throw Error(Errc::protocol_error, method + ": write timed out");
    }
    for (;;) {
        auto msg = d.read(remaining());
        if (!msg) throw Error(Errc::protocol_error, method + ": no reply within timeout");
        if (msg->contains("id") && (*msg)["id"] == id) {
            if (msg->contains("error")) {
                throw Error(Errc::protocol_error, method + ": " + (*msg)["error"].value("message", "error"));
            }
            return msg->value("result", json::object());
        }
        if (msg->contains("method")) d.events.push_back(std::move(*msg));
    }
}

std::optional<json> CdpConnection::wait_event(std::string_view method, std::chrono::milliseconds timeout) {
    auto& d = *impl_;
    for (auto it = d.events.begin(); it != d.events.end(); ++it) {
        if ((*it)["method"] == method) {
            auto ev = std::move(*it);
            d.events.erase(it);
            return ev;
        }
    }
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
            deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0) return std::nullopt;
        auto msg = d.read(left);
        if (!msg) return std::nullopt;
        if (!msg->contains("method")) continue;
        if ((*msg)["method"] == method) return msg;
        d.events.push_back(std::move(*msg));
    }
}

std::deque<json> CdpConnection::take_events() { return std::exchange(impl_->events, {}); }

bool CdpConnection::usable() const { return !impl_->broken; }

void CdpConnection::close() {
    if (!impl_ || impl_->broken) return;
    impl_->broken = true;
    beast::error_code ec;
    beast::get_lowest_layer(impl_->ws).socket().shutdown(tcp::socket::shutdown_both, ec);
    beast::get_lowest_layer(impl_->ws).socket().close(ec);
}

namespace {

httplib::Client http_client(const std::string& host, int port) {
    httplib::Client cli(host, port);
    cli.set_connection_timeout(std::chrono::seconds(5));
    cli.set_read_timeout(std::chrono::seconds(10));
    return cli;
}

}  // namespace

TargetInfo new_target(const std::string& host, int port) {
    auto cli = http_client(host, port);
    auto res = cli.Put("/json/new?about:blank");
    if (!res || res->status != 200) {
        throw Error(Errc::browser_unavailable, "cannot create page target at " + host + ":" + std::to_string(port));
    }
    const auto j = json::parse(res->body, nullptr, false);
    if (j.is_discarded() || !j.contains("id") || !j.contains("webSocketDebuggerUrl")) {
        throw Error(Errc::protocol_error, "unexpected /json/new reply");
    }
    const auto url = j["webSocketDebuggerUrl"].get<std::string>();
    const auto path = url.find("/devtools/");
    if (path == std::string::npos) throw Error(Errc::protocol_error, "unexpected debugger url " + url);
    return {j["id"].get<std::string>(), url.substr(path)};
}

void close_target(const std::string& host, int port, const std::string& id) {
    auto cli = http_client(host, port);
    cli.Get("/json/close/" + id);
}

json browser_version(const std::string& host, int port) {
    auto cli = http_client(host, port);
    auto res = cli.Get("/json/version");
    if (!res || res->status != 200) {
        throw Error(Errc::browser_unavailable, "no devtools endpoint at " + host + ":" + std::to_string(port));
    }
    return json::parse(res->body);
}

}  // namespace playforge::browser
