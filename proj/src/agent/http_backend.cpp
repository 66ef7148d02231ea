#include "playforge/agent/http_backend.hpp"

#include <cstdlib>
#include <thread>

#include <boost/beast/core/detail/base64.hpp>
#include <curl/curl.h>

#include "playforge/error.hpp"

namespace playforge::agent {

namespace {

std::string env_or(const char* name, std::string fallback) {
    const char* v = std::getenv(name);
    return v && *v ? std::string(v) : fallback;
}

std::string data_url(const std::string& png) {
    namespace b64 = boost::beast::detail::base64;
    std::string out(b64::encoded_size(png.size()), '\0');
    out.resize(b64::encode(out.data(), png.data(), png.size()));
    return "data:image/png;base64," + out;
}

json content_with_images(const std::string& text, const std::vector<ImageAttachment>& images) {
    if (images.empty()) return text;
    json parts = json::array({{{"type", "text"}, {"text", text}}});
    for (const auto& img : images) {
        parts.push_back({{"type", "image_url"}, {"image_url", {{"url", data_url(img.png)}}}});
    }
    return parts;
}

std::size_t collect(char* data, std::size_t size, std::size_t n, void* out) {
    static_cast<std::string*>(out)->append(data, size * n);
    return size * n;
}

struct CurlGlobal {
    CurlGlobal() { curl_global_init(CURL_GLOBAL_DEFAULT); }
    ~CurlGlobal() { curl_global_cleanup(); }
};

}  // namespace

HttpBackendConfig HttpBackendConfig::from_env() {
    HttpBackendConfig c;
    c.base_url = env_or("PLAYFORGE_API_BASE", "https://api.openai.com/v1");
    c.model = env_or("PLAYFORGE_MODEL", "gpt-4o");
    c.api_key = env_or("PLAYFORGE_API_KEY", "");
    return c;
}

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
    static CurlGlobal global;
    if (config_.base_url.empty()) throw Error(Errc::config_error, "http backend needs a base URL");
    if (config_.max_attempts < 1) throw Error(Errc::config_error, "max_attempts must be at least 1");
}

json HttpBackend::request_body(const BackendRequest& request, const std::string& model, double temperature) {
    json messages = json::array();
    for (const auto& m : *request.transcript) {
        if (m.role == "assistant" && m.call) {
            messages.push_back({{"role", "assistant"},
                                {"content", nullptr},
                                {"tool_calls",
                                 {{{"id", m.call->id},
                                   {"type", "function"},
                                   {"function", {{"name", m.call->name}, {"arguments", m.call->args.dump()}}}}}}});
        } else if (m.role == "tool") {
            messages.push_back({{"role", "tool"}, {"tool_call_id", m.tool_call_id}, {"content", m.text}});
            if (!m.images.empty()) {
                messages.push_back({{"role", "user"},
                                    {"content", content_with_images("Screenshot after " + m.tool_call_id + ".",
                                                                    m.images)}});
            }
        } else {
            messages.push_back({{"role", m.role}, {"content", content_with_images(m.text, m.images)}});
        }
    }
    json body = {{"model", model}, {"messages", messages}, {"temperature", temperature}};
    if (!request.tools.empty()) {
        json tools = json::array();
        for (const auto& t : request.tools) {
            tools.push_back({{"type", "function"},
                             {"function",
                              {{"name", t.name}, {"description", t.description}, {"parameters", t.parameters}}}});
        }
        body["tools"] = tools;
        body["tool_choice"] = "auto";
    }
    return body;
}

BackendReply HttpBackend::parse_response(const json& body) {
    try {
        const auto& msg = body.at("choices").at(0).at("message");
        if (msg.contains("tool_calls") && msg["tool_calls"].is_array() && !msg["tool_calls"].empty()) {
            const auto& call = msg["tool_calls"][0];
            const auto& fn = call.at("function");
            json args = json::object();
            const auto raw = fn.value("arguments", std::string("{}"));
            if (!raw.empty()) args = json::parse(raw);
            return ToolCall{fn.at("name").get<std::string>(), args, call.value("id", "")};
        }
        if (msg.contains("content") && msg["content"].is_string()) {
            return TerminalDocument{msg["content"].get<std::string>()};
        }
    } catch (const json::exception& e) {
        throw Error(Errc::backend_failure, std::string("malformed completion: ") + e.what());
    }
    throw Error(Errc::backend_failure, "completion has neither a tool call nor content");
}

BackendReply HttpBackend::complete(const BackendRequest& request) {
    const auto payload = request_body(request, config_.model, config_.temperature).dump();
    const auto url = config_.base_url + "/chat/completions";
    std::string last_error;
    for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
        if (attempt > 1) std::this_thread::sleep_for(std::chrono::milliseconds(250) * (1 << (attempt - 2)));
        std::unique_ptr<CURL, decltype(&curl_easy_cleanup)> curl(curl_easy_init(), curl_easy_cleanup);
        if (!curl) throw Error(Errc::backend_failure, "curl init failed");
        curl_slist* headers = curl_slist_append(nullptr, "Content-Type: application/json");
        std::string auth;
        if (!config_.api_key.empty()) {
            auth = "Authorization: Bearer " + config_.api_key;
            headers = curl_slist_append(headers, auth.c_str());
        }
        std::string response;
        curl_easy_setopt(curl.get(), CURLOPT_URL, url.c_str());
        curl_easy_setopt(curl.get(), CURLOPT_HTTPHEADER, headers);
        curl_easy_setopt(curl.get(), CURLOPT_POSTFIELDS, payload.c_str());
        curl_easy_setopt(curl.get(), CURLOPT_POSTFIELDSIZE, static_cast<long>(payload.size()));
        curl_easy_setopt(curl.get(), CURLOPT_TIMEOUT_MS, static_cast<long>(config_.timeout.count()));
        curl_easy_setopt(curl.get(), CURLOPT_CONNECTTIMEOUT_MS,
                         static_cast<long>(std::min<long long>(config_.timeout.count(), 10000)));
        curl_easy_setopt(curl.get(), CURLOPT_NOSIGNAL, 1L);
        curl_easy_setopt(curl.get(), CURLOPT_WRITEFUNCTION, collect);
        curl_easy_setopt(curl.get(), CURLOPT_WRITEDATA, &response);
        const auto rc = curl_easy_perform(curl.get());
        long status = 0;
        curl_easy_getinfo(curl.get(), CURLINFO_RESPONSE_CODE, &status);
        curl_slist_free_all(headers);

        if (rc != CURLE_OK) {
            last_error = curl_easy_strerror(rc);
            continue;
        }
        if (status == 429 || status >= 500) {
            last_error = "HTTP " + std::to_string(status);
            continue;
        }
        if (status != 200) {
            throw Error(Errc::backend_failure, "HTTP " + std::to_string(status) + ": " + response.substr(0, 500));
        }
        const auto body = json::parse(response, nullptr, false);
        if (body.is_discarded()) throw Error(Errc::backend_failure, "completion is not JSON");
        return parse_response(body);
    }
    throw Error(Errc::backend_failure, "backend unreachable after " + std::to_string(config_.max_attempts) +
                                           " attempts: " + last_error);
}

}  // namespace playforge::agent
