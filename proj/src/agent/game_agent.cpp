#include "playforge/agent/game_agent.hpp"

#include <algorithm>
#include <sstream>

#include "playforge/arena/task_io.hpp"
#include "playforge/browser/image.hpp"
#include "playforge/error.hpp"
#include "playforge/process.hpp"
#include "playforge/agent/gui_agent.hpp"

namespace playforge::agent {

namespace fs = std::filesystem;

namespace {

constexpr int kMaxToolCallsPerPhase = 60;

json object_schema(json props, std::vector<std::string> required) {
    return {{"type", "object"}, {"properties", std::move(props)}, {"required", std::move(required)}};
}

const json kString = {{"type", "string"}};

ToolSpec tool(const std::string& name) {
    if (name == "generate_game_guide") {
        return {name, "Write GAME_GUIDE.md from its three sections.",
                object_schema({{"controls", kString}, {"objective", kString}, {"success_condition", kString}},
                              {"controls", "objective", "success_condition"})};
    }
    if (name == "generate_game_assets") {
        return {name, "Create placeholder image assets under assets/.",
                object_schema({{"names", {{"type", "array"}, {"items", kString}}}}, {"names"})};
    }
    if (name == "read_file") return {name, "Read a workspace file.", object_schema({{"path", kString}}, {"path"})};
    if (name == "write_file") {
        return {name, "Create or overwrite a workspace file.",
                object_schema({{"path", kString}, {"content", kString}}, {"path", "content"})};
    }
    if (name == "list_files") return {name, "List workspace files.", object_schema(json::object(), {})};
    if (name == "run_shell_command") {
        return {name, "Run a shell command in the workspace.", object_schema({{"command", kString}}, {"command"})};
    }
    if (name == "memory_query") return {name, "Show the memory visible to you.", object_schema(json::object(), {})};
    if (name == "memory_save") return memory_save_tool();
    throw Error(Errc::invariant_violation, "unknown tool " + name);
}

// Workspace-relative path; anything escaping the workspace is refused.
fs::path resolve(const fs::path& root, const std::string& rel) {
    const fs::path p(rel);
    if (rel.empty() || p.is_absolute()) throw Error(Errc::invariant_violation, "path must be workspace-relative");
    for (const auto& part : p) {
        if (part == "..") throw Error(Errc::invariant_violation, "path escapes the workspace");
    }
    return root / p.lexically_normal();
}

std::string list_files(const fs::path& root) {
    std::vector<std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) files.push_back(fs::relative(e.path(), root).generic_string());
    }
    std::sort(files.begin(), files.end());
    std::string out;
    for (const auto& f : files) out += f + "\n";
    return out;
}

std::string run_shell(const fs::path& root, const std::string& command) {
    const auto r = run_command(root, command);
    return "exit " + std::to_string(r.exit_code) + "\n" + r.output;
}

std::string placeholder_png() {
    browser::Image img{16, 16, std::vector<std::uint8_t>(16 * 16 * 3, 0)};
    for (int y = 0; y < 16; ++y) {
        for (int x = 0; x < 16; ++x) {
            const bool on = (x / 4 + y / 4) % 2 == 0;
            auto* px = &img.data[static_cast<std::size_t>((y * 16 + x) * 3)];
            px[0] = on ? 0xff : 0x40;
            px[1] = 0x00;
            px[2] = on ? 0xff : 0x40;
        }
    }
    return browser::encode_png(img);
}

std::string memory_text(const std::vector<memory::MemoryEntry>& memory) {
    if (memory.empty()) return "(none)\n";
    std::string out;
    for (const auto& m : memory) {
        out += "- [" + std::string(memory::to_string(m.layer)) + "/" + std::string(memory::to_string(m.kind)) +
               "] " + m.content + "\n";
    }
    return out;
}

class Round {
public:
    Round(ModelBackend& backend, const GameRoundInput& in)
        : in_(in),
          workspace_(in.round_dir / "build"),
          conv_(backend, "game-agent", in.task->id + "/" + std::to_string(in.round) + "/game-agent",
                in.round_dir / "game_agent.jsonl") {}

    GameRoundResult run() {
        fs::remove_all(workspace_);
        fs::create_directories(workspace_);
        if (in_.prior_build) fs::copy(*in_.prior_build, workspace_, fs::copy_options::recursive);
        result_.build = {workspace_, "index.html", in_.round};

        const auto phases = in_.phases.empty() ? phases_for(in_.round) : in_.phases;
        bool first = true;
        for (auto phase : phases) {
            std::string intro = first ? context() : "";
            first = false;
            result_.phases_run.push_back(phase);
            switch (phase) {
            case GamePhase::design:
                converse(phase, intro + "Design the game, then write GAME_GUIDE.md with generate_game_guide. "
                                        "Reply with a short design summary when done.");
                break;
            case GamePhase::assets:
                converse(phase, intro + "Create the placeholder assets the design needs with "
                                        "generate_game_assets, then reply.");
                break;
            case GamePhase::implementation: converse(phase, intro + implementation_brief()); break;
            case GamePhase::verification: verify(intro); break;
            case GamePhase::self_review: self_review(intro); break;
            case GamePhase::memory_capture:
                converse(phase, intro + "Save what later rounds or tasks should know with memory_save, then "
                                        "reply DONE.");
                break;
            }
        }

        if (const auto v = arena::validate_build(result_.build); !v.empty()) {
            throw Error(Errc::build_emission_invalid, v.front().detail);
        }
        const auto guide_path = workspace_ / "GAME_GUIDE.md";
        if (!fs::exists(guide_path)) throw Error(Errc::build_emission_invalid, "build has no GAME_GUIDE.md");
        try {
            result_.guide = parse_guide(arena::read_text_file(guide_path));
        } catch (const Error& e) {
            throw Error(Errc::build_emission_invalid, std::string("GAME_GUIDE.md: ") + e.what());
        }
        return result_;
    }

private:
    std::string context() const {
        std::ostringstream o;
        o << "You are building a browser game in a workspace of static files served as-is; index.html is the "
             "entry document.\nTask: " << in_.task->id << " (" << arena::to_string(in_.task->genre)
          << ")\nGeneration prompt:\n" << in_.task->prompt << "\n\nMemory:\n" << memory_text(in_.memory) << "\n";
        return o.str();
    }

    std::string implementation_brief() const {
        if (!in_.report) return "Implement the game in the workspace, then reply when the build is complete.";
        std::ostringstream o;
        o << "Round " << in_.round << ". A playtester played the previous build; the report follows. Its fix items "
          << "are advice: decide which are worth acting on.\n\n" << report::render_report(*in_.report)
          << "\nRevise the build in the workspace, then reply.";
        return o.str();
    }

    std::vector<ToolSpec> tools(GamePhase phase) const { return game_tools(phase, in_.allow_shell); }

    std::string execute(const ToolCall& call) {
        const auto& a = call.args;
        try {
            if (call.name == "generate_game_guide") {
                GameGuide g{a.value("controls", ""), a.value("objective", ""), a.value("success_condition", "")};
                const auto text = render_guide(g, in_.task->id);
                parse_guide(text);
                arena::write_text_file(workspace_ / "GAME_GUIDE.md", text);
                return "wrote GAME_GUIDE.md";
            }
            if (call.name == "generate_game_assets") {
                std::string out;
                for (const auto& name : a.value("names", std::vector<std::string>{})) {
                    const auto path = resolve(workspace_ / "assets", name + ".png");
                    fs::create_directories(path.parent_path());
                    arena::write_text_file(path, placeholder_png());
                    out += "wrote assets/" + name + ".png\n";
                }
                return out.empty() ? "no assets requested" : out;
            }
            if (call.name == "read_file") {
                const auto p = resolve(workspace_, a.value("path", ""));
                if (!fs::is_regular_file(p)) return "error: no such file";
                return arena::read_text_file(p);
            }
            if (call.name == "write_file") {
                const auto p = resolve(workspace_, a.value("path", ""));
                fs::create_directories(p.parent_path());
                arena::write_text_file(p, a.value("content", ""));
                return "ok";
            }
            if (call.name == "list_files") return list_files(workspace_);
            if (call.name == "run_shell_command") return run_shell(workspace_, a.value("command", ""));
            if (call.name == "memory_query") return memory_text(in_.memory);
            if (call.name == "memory_save") {
                result_.memory_writes.push_back(memory_entry_from_call(a, memory::Owner::game_agent, in_.task->id,
                                                                       std::string(arena::to_string(in_.task->genre)),
                                                                       in_.round));
                return "saved";
            }
        } catch (const Error& e) {
            return std::string("error: ") + e.what();
        }
        return "error: unknown tool";
    }

    TerminalDocument converse(GamePhase phase, const std::string& message) {
        conv_.user(message);
        const auto specs = tools(phase);
        const auto label = std::string(to_string(phase));
        for (int calls = 0;; ++calls) {
            auto reply = conv_.ask(label, specs);
            if (auto* doc = std::get_if<TerminalDocument>(&reply)) return *doc;
            if (calls >= kMaxToolCallsPerPhase) {
                throw Error(Errc::backend_failure, "too many tool calls in phase " + label);
            }
            const auto& call = std::get<ToolCall>(reply);
            conv_.tool_result(call, execute(call));
        }
    }

    void verify(const std::string& intro) {
        if (!intro.empty()) conv_.user(intro);
        if (!in_.verify) return;
        for (int attempt = 0;; ++attempt) {
            const auto error = in_.verify(result_.build);
            if (!error) {
                result_.verified = true;
                return;
            }
            result_.verified = false;
            result_.verify_errors.push_back(*error);
            if (attempt >= in_.max_repairs) return;
            ++result_.repairs;
            converse(GamePhase::verification, "Build verification failed:\n" + *error +
                                                  "\nRepair the build, then reply.");
        }
    }

    void self_review(const std::string& intro) {
        auto doc = converse(GamePhase::self_review,
                            intro + "No one can play this build. Re-read your code and reply with a playtest "
                                    "report in the canonical markdown format, judging what a player would hit.");
        try {
            result_.self_report = report::parse_report(doc.text);
        } catch (const Error& e) {
            doc = converse(GamePhase::self_review,
                           std::string("Your report could not be parsed: ") + e.what() + "\nSend a corrected report.");
            try {
                result_.self_report = report::parse_report(doc.text);
            } catch (const Error& again) {
                throw Error(Errc::backend_failure, std::string("self-review report rejected twice: ") + again.what());
            }
        }
    }

    const GameRoundInput& in_;
    fs::path workspace_;
    Conversation conv_;
    GameRoundResult result_;
};

}  // namespace

std::string_view to_string(GamePhase phase) {
    switch (phase) {
    case GamePhase::design: return "design";
    case GamePhase::assets: return "assets";
    case GamePhase::implementation: return "implementation";
    case GamePhase::verification: return "verification";
    case GamePhase::memory_capture: return "memory_capture";
    case GamePhase::self_review: return "self_review";
    }
    return "?";
}

std::vector<GamePhase> phases_for(int round) {
    if (round <= 1) {
        return {GamePhase::design, GamePhase::assets, GamePhase::implementation, GamePhase::verification,
                GamePhase::memory_capture};
    }
    return {GamePhase::implementation, GamePhase::verification, GamePhase::memory_capture};
}

std::vector<ToolSpec> game_tools(GamePhase phase, bool allow_shell) {
    std::vector<std::string> names;
    switch (phase) {
    case GamePhase::design: names = {"generate_game_guide", "list_files", "read_file", "memory_query"}; break;
    case GamePhase::assets: names = {"generate_game_assets", "list_files"}; break;
    case GamePhase::implementation:
    case GamePhase::verification:
        names = {"list_files", "read_file", "write_file", "memory_query"};
        if (allow_shell) names.push_back("run_shell_command");
        break;
    case GamePhase::self_review: names = {"list_files", "read_file"}; break;
    case GamePhase::memory_capture: names = {"memory_save"}; break;
    }
    std::vector<ToolSpec> out;
    for (const auto& n : names) out.push_back(tool(n));
    return out;
}

GameRoundResult run_game_agent_round(ModelBackend& backend, const GameRoundInput& input) {
    if (!input.task) throw Error(Errc::invariant_violation, "game round needs a task");
    if (input.round >= 2 && !input.report) throw Error(Errc::invariant_violation, "rounds after the first need a report");
    if (input.round >= 2 && !input.prior_build) {
        throw Error(Errc::invariant_violation, "rounds after the first need the prior build");
    }
    return Round(backend, input).run();
}

}  // namespace playforge::agent
