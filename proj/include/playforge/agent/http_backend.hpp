#pragma once

#include <chrono>
#include <string>

#include "playforge/agent/backend.hpp"

namespace playforge::agent {

struct HttpBackendConfig {
    std::string base_url;  // e.g. https://api.example.com/v1; "/chat/completions" is appended
    std::string model;
    std::string api_key;   // sent as a bearer token when non-empty
    std::chrono::milliseconds timeout{std::chrono::minutes(2)};
    int max_attempts = 3;  // retries on transport errors, 429 and 5xx
    double temperature = 0.0;

    // PLAYFORGE_API_BASE, PLAYFORGE_MODEL, PLAYFORGE_API_KEY.
    static HttpBackendConfig from_env();
};

// Chat-completions client with function calling. Screenshots go as data-URL
// image parts; a tool result with images is followed by a user turn that
// carries them, since tool messages are text-only.
class HttpBackend final : public ModelBackend {
public:
    explicit HttpBackend(HttpBackendConfig config);

    std::string label() const override { return "http:" + config_.model; }
    BackendReply complete(const BackendRequest& request) override;

    // Exposed for tests.
    static json request_body(const BackendRequest& request, const std::string& model, double temperature);
    static BackendReply parse_response(const json& body);

private:
    HttpBackendConfig config_;
};

}  // namespace playforge::agent
