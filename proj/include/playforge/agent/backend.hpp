#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

namespace playforge::agent {

using nlohmann::json;

struct ImageAttachment {
    std::string png;  // raw bytes
    std::string ref;  // archive path relative to the round directory, e.g. frames/3.png
};

struct ToolCall {
    std::string name;
    json args = json::object();
    std::string id;  // echoed back on the tool result

    bool operator==(const ToolCall&) const = default;
};

struct TerminalDocument {
    std::string text;

    bool operator==(const TerminalDocument&) const = default;
};

using BackendReply = std::variant<ToolCall, TerminalDocument>;

struct Message {
    std::string role;  // system | user | assistant | tool
    std::string text;
    std::vector<ImageAttachment> images;
    std::optional<ToolCall> call;  // assistant turns that invoked a tool
    std::string tool_call_id;      // tool turns
};

struct ToolSpec {
    std::string name;
    std::string description;
    json parameters = json::object();  // JSON schema
};

struct BackendRequest {
    std::string agent;       // game-agent | gui-agent
    std::string phase;       // workflow phase the reply belongs to
    std::string session_id;  // stable per session; scripted backends key state on it
    const std::vector<Message>* transcript = nullptr;
    std::vector<ToolSpec> tools;  // empty: only a terminal document is acceptable
};

class ModelBackend {
public:
    virtual ~ModelBackend() = default;
    virtual std::string label() const = 0;
    virtual BackendReply complete(const BackendRequest& request) = 0;
};

// Throws BackendFailure unless the reply is a terminal document or a call
// to one of the offered tools.
void check_reply(const BackendRequest& request, const BackendReply& reply);

json to_json(const BackendReply& reply);

// Drives one agent's conversation: keeps the transcript, asks the backend,
// and appends one JSON line per exchange to <file>. Images are written to
// the transcript file by reference only.
class Conversation {
public:
    Conversation(ModelBackend& backend, std::string agent, std::string session_id,
                 std::optional<std::filesystem::path> transcript_file);

    void system(std::string text);
    void user(std::string text, std::vector<ImageAttachment> images = {});
    void tool_result(const ToolCall& call, std::string text, std::vector<ImageAttachment> images = {});

    BackendReply ask(const std::string& phase, const std::vector<ToolSpec>& tools);

    const std::vector<Message>& messages() const { return messages_; }
    int exchanges() const { return exchanges_; }

private:
    ModelBackend& backend_;
    std::string agent_;
    std::string session_id_;
    std::optional<std::filesystem::path> file_;
    std::vector<Message> messages_;
    std::size_t logged_ = 0;
    int exchanges_ = 0;
    int call_seq_ = 0;
};

// Messages after the latest user turn that are tool results, i.e. how far
// the current phase has progressed. Used by scripted backends.
int tool_turns_since_user(const std::vector<Message>& transcript);
const Message* last_user_message(const std::vector<Message>& transcript);
const Message* first_user_message(const std::vector<Message>& transcript);
const ImageAttachment* latest_image(const std::vector<Message>& transcript);

}  // namespace playforge::agent
