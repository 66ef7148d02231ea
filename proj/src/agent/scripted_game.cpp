#include <algorithm>

#include "playforge/agent/guide.hpp"
#include "playforge/agent/scripted.hpp"
#include "playforge/arena/task_io.hpp"
#include "playforge/error.hpp"
#include "playforge/report/play_report.hpp"

namespace playforge::agent {

namespace fs = std::filesystem;

namespace {

struct SessionKey {
    std::string task;
    int round = 1;
};

// Game-agent session ids are "<task>/<round>/game-agent".
SessionKey parse_session(const std::string& id) {
    const auto a = id.find('/');
    const auto b = id.find('/', a + 1);
    if (a == std::string::npos || b == std::string::npos) {
        throw Error(Errc::script_incomplete, "unexpected game-agent session id " + id);
    }
    return {id.substr(0, a), std::atoi(id.substr(a + 1, b - a - 1).c_str())};
}

std::vector<std::string> source_files(const fs::path& root) {
    std::vector<std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (!e.is_regular_file()) continue;
        auto rel = fs::relative(e.path(), root).generic_string();
        if (rel != "GAME_GUIDE.md") files.push_back(std::move(rel));
    }
    std::sort(files.begin(), files.end());
    return files;
}

ToolCall call(std::string name, json args) { return {std::move(name), std::move(args), {}}; }

const Message* last_tool_message(const std::vector<Message>& transcript) {
    for (auto it = transcript.rbegin(); it != transcript.rend(); ++it) {
        if (it->role == "tool") return &*it;
    }
    return nullptr;
}

bool mentioned_by_user(const std::vector<Message>& transcript, const std::string& text) {
    return std::any_of(transcript.begin(), transcript.end(), [&](const Message& m) {
        return m.role == "user" && m.text.find(text) != std::string::npos;
    });
}

report::PlayReport review(const std::string& code) {
    using namespace report;
    PlayReport r;
    r.interaction_log.push_back("read the game script");
    if (code.find("addEventListener('keydown'") == std::string::npos &&
        code.find("addEventListener(\"keydown\"") == std::string::npos) {
        r.outcome = RunOutcome::blocked_by_bug;
        r.confidence = Confidence::medium;
        r.findings.push_back({Severity::blocker, FeedbackCategory::controls,
                              "the script registers no keydown listener, so arrow keys cannot work", {}});
        r.most_blocking = 0;
        r.fixes.push_back({"arrow keys do not change the snake's direction",
                           "register the keydown handler that updates the heading"});
    } else {
        r.outcome = RunOutcome::completed;
        r.confidence = Confidence::high;
        r.probe_signals.push_back("input handlers are registered");
    }
    return r;
}

}  // namespace

ScriptedGameBackend::ScriptedGameBackend(std::map<std::string, fs::path> sources, fs::path fallback,
                                         std::vector<PatchRule> patches)
    : sources_(std::move(sources)), fallback_(std::move(fallback)), patches_(std::move(patches)) {}

ScriptedGameBackend ScriptedGameBackend::standard(const fs::path& fixtures_dir) {
    const auto builds = fixtures_dir / "builds";
    return ScriptedGameBackend(
        {{"snake-basic", builds / "snake-broken-input"}}, builds / "block-mover",
        {{"register the keydown handler", "game.js", "  // keyboard input\n",
          "  document.addEventListener('keydown', onKey);\n",
          "arrow keys were dead because no keydown listener was registered; adding it restored steering"}});
}

const fs::path& ScriptedGameBackend::source_for(const std::string& session_id) const {
    const auto it = sources_.find(parse_session(session_id).task);
    return it == sources_.end() ? fallback_ : it->second;
}

BackendReply ScriptedGameBackend::complete(const BackendRequest& request) {
    if (!request.transcript || request.transcript->empty()) throw Error(Errc::backend_failure, "no transcript");
    const auto& transcript = *request.transcript;
    const auto key = parse_session(request.session_id);
    const auto& source = source_for(request.session_id);
    const int turn = tool_turns_since_user(transcript);
    const Message* user = last_user_message(transcript);
    const std::string& prompt = user ? user->text : std::string();

    if (request.phase == "design") {
        if (turn == 0) {
            const auto guide = parse_guide(arena::read_text_file(source / "GAME_GUIDE.md"));
            return call("generate_game_guide", {{"controls", guide.controls},
                                                {"objective", guide.objective},
                                                {"success_condition", guide.success_condition}});
        }
        return TerminalDocument{"Design: a single canvas scene following the prompt; guide written."};
    }
    if (request.phase == "assets") {
        if (turn == 0) return call("generate_game_assets", {{"names", {"tile"}}});
        return TerminalDocument{"Placeholder assets created."};
    }
    if (request.phase == "implementation" && key.round <= 1) {
        const auto files = source_files(source);
        if (turn < static_cast<int>(files.size())) {
            const auto& f = files[static_cast<std::size_t>(turn)];
            return call("write_file", {{"path", f}, {"content", arena::read_text_file(source / f)}});
        }
        return TerminalDocument{"Implemented " + std::to_string(files.size()) + " files."};
    }
    if (request.phase == "implementation") {
        for (const auto& rule : patches_) {
            if (prompt.find(rule.when) == std::string::npos) continue;
            if (turn == 0) return call("read_file", {{"path", rule.file}});
            if (turn == 1) {
                std::string content = last_tool_message(transcript)->text;
                if (const auto at = content.find(rule.find); at != std::string::npos) {
                    content.replace(at, rule.find.size(), rule.replace);
                }
                return call("write_file", {{"path", rule.file}, {"content", content}});
            }
            return TerminalDocument{"Applied the fix: " + rule.when + "."};
        }
        return TerminalDocument{"No change: nothing in the report maps to a known fix."};
    }
    if (request.phase == "verification") return TerminalDocument{"No change."};
    if (request.phase == "self_review") {
        if (turn == 0) return call("read_file", {{"path", "game.js"}});
        return TerminalDocument{report::render_report(review(last_tool_message(transcript)->text))};
    }
    if (request.phase == "memory_capture") {
        if (turn == 0) {
            for (const auto& rule : patches_) {
                if (key.round > 1 && mentioned_by_user(transcript, rule.when)) {
                    return call("memory_save",
                                {{"layer", "episode-shared"}, {"kind", "fix_pattern"}, {"content", rule.lesson}});
                }
            }
            if (key.round == 1) {
                return call("memory_save", {{"layer", "skill"},
                                            {"kind", "decision"},
                                            {"content", "start from one canvas and a fixed-tick update loop"}});
            }
        }
        return TerminalDocument{"DONE"};
    }
    throw Error(Errc::script_incomplete, "no game-agent rule for phase " + request.phase);
}

}  // namespace playforge::agent
