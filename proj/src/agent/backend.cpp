#include "playforge/agent/backend.hpp"

#include "playforge/error.hpp"

namespace playforge::agent {

namespace {

json message_json(const Message& m) {
    json j{{"role", m.role}, {"text", m.text}};
    if (!m.images.empty()) {
        json refs = json::array();
        for (const auto& img : m.images) refs.push_back(img.ref);
        j["images"] = refs;
    }
    if (m.call) j["call"] = {{"name", m.call->name}, {"args", m.call->args}, {"id", m.call->id}};
    if (!m.tool_call_id.empty()) j["tool_call_id"] = m.tool_call_id;
    return j;
}

}  // namespace

void check_reply(const BackendRequest& request, const BackendReply& reply) {
    if (const auto* call = std::get_if<ToolCall>(&reply)) {
        for (const auto& t : request.tools) {
            if (t.name == call->name) return;
        }
        throw Error(Errc::backend_failure, "backend called tool '" + call->name + "' not offered in phase " +
                                               request.phase);
    }
}

json to_json(const BackendReply& reply) {
    if (const auto* call = std::get_if<ToolCall>(&reply)) {
        return {{"tool_call", {{"name", call->name}, {"args", call->args}}}};
    }
    return {{"document", std::get<TerminalDocument>(reply).text}};
}

Conversation::Conversation(ModelBackend& backend, std::string agent, std::string session_id,
                           std::optional<std::filesystem::path> transcript_file)
    : backend_(backend), agent_(std::move(agent)), session_id_(std::move(session_id)),
      file_(std::move(transcript_file)) {
    if (file_) {
        std::filesystem::create_directories(file_->parent_path());
        std::ofstream(*file_, std::ios::trunc);
    }
}

void Conversation::system(std::string text) { messages_.push_back({"system", std::move(text), {}, {}, {}}); }

void Conversation::user(std::string text, std::vector<ImageAttachment> images) {
    messages_.push_back({"user", std::move(text), std::move(images), {}, {}});
}

void Conversation::tool_result(const ToolCall& call, std::string text, std::vector<ImageAttachment> images) {
    messages_.push_back({"tool", std::move(text), std::move(images), {}, call.id});
}

BackendReply Conversation::ask(const std::string& phase, const std::vector<ToolSpec>& tools) {
    BackendRequest req{agent_, phase, session_id_, &messages_, tools};
    BackendReply reply;
    try {
        reply = backend_.complete(req);
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        throw Error(Errc::backend_failure, std::string(backend_.label()) + ": " + e.what());
    }
    check_reply(req, reply);
    ++exchanges_;
    if (auto* call = std::get_if<ToolCall>(&reply)) {
        call->id = "call_" + std::to_string(++call_seq_);
        messages_.push_back({"assistant", "", {}, *call, {}});
    } else {
        messages_.push_back({"assistant", std::get<TerminalDocument>(reply).text, {}, {}, {}});
    }
    if (file_) {
        json sent = json::array();
        // The reply itself is the last message; log everything before it.
        for (std::size_t i = logged_; i + 1 < messages_.size(); ++i) sent.push_back(message_json(messages_[i]));
        logged_ = messages_.size();
        json rec{{"seq", exchanges_}, {"phase", phase}, {"messages", sent}, {"reply", to_json(reply)}};
        std::ofstream(*file_, std::ios::app) << rec.dump() << '\n';
    }
    return reply;
}

int tool_turns_since_user(const std::vector<Message>& transcript) {
    int n = 0;
    for (auto it = transcript.rbegin(); it != transcript.rend(); ++it) {
        if (it->role == "user") break;
        n += it->role == "tool";
    }
    return n;
}

const Message* last_user_message(const std::vector<Message>& transcript) {
    for (auto it = transcript.rbegin(); it != transcript.rend(); ++it) {
        if (it->role == "user") return &*it;
    }
    return nullptr;
}

const Message* first_user_message(const std::vector<Message>& transcript) {
    for (const auto& m : transcript) {
        if (m.role == "user") return &m;
    }
    return nullptr;
}

const ImageAttachment* latest_image(const std::vector<Message>& transcript) {
    for (auto it = transcript.rbegin(); it != transcript.rend(); ++it) {
        if (!it->images.empty()) return &it->images.back();
    }
    return nullptr;
}

}  // namespace playforge::agent
