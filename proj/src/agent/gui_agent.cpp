#include "playforge/agent/gui_agent.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "playforge/error.hpp"

namespace playforge::agent {

namespace {

using browser::ActionResult;

constexpr int kMaxRejectedInARow = 10;
constexpr int kMaxMemorySaves = 20;

json step_args_schema(json action_props, std::vector<std::string> required) {
    json props = {
        {"observation", {{"type", "string"}, {"description", "what the current screenshot shows"}}},
        {"reasoning", {{"type", "string"}, {"description", "why this action comes next"}}},
        {"phase", {{"type", "string"}, {"description", "observe | start | play"}}},
        {"attempt", {{"type", "integer"}, {"description", "retry segment number, from 1"}}},
    };
    for (auto& [k, v] : action_props.items()) props[k] = v;
    required.insert(required.begin(), {"observation", "reasoning"});
    return {{"type", "object"}, {"properties", props}, {"required", required}};
}

std::string mode_brief(GuiMode mode) {
    switch (mode) {
    case GuiMode::playtester:
        return "You are playtesting a browser game as a player would. You only see screenshots and act with "
               "mouse and keyboard tools. Check the guide by playing, hold keys long enough to see movement, "
               "and retry differently before calling something blocked. When done, reply with a playtest "
               "report in the canonical markdown format (Run Outcome, Probe Signals, Interaction Log, Gameplay "
               "Assessment, Findings, Most Blocking Issue, Recommended Fix Direction), including FIX lines of "
               "the form \"- FIX: observation → suggested change\".";
    case GuiMode::evaluator:
        return "You are judging a browser game against a rubric by playing it. You only see screenshots and "
               "act with mouse and keyboard tools. When done, reply with JSON {\"verdicts\": [{\"criterion_id\", "
               "\"passed\", \"evidence\": [step indices]}]} covering every criterion. A passed criterion needs at "
               "least one evidence step.";
    case GuiMode::feasibility:
        return "You are trying to clear one level of a browser game. You only see screenshots and act with "
               "mouse and keyboard tools. When the level is cleared or the game is over, reply with JSON "
               "{\"passed\": true|false, \"end\": \"completion\"|\"game_over\"}.";
    }
    return {};
}

std::string intro(const GuiSessionSpec& spec) {
    std::ostringstream o;
    o << mode_brief(spec.mode) << "\n\n" << render_guide(spec.guide, "Game Guide");
    if (spec.mode == GuiMode::playtester && !spec.prompt.empty()) o << "\nGeneration prompt:\n" << spec.prompt << "\n";
    if (spec.mode == GuiMode::evaluator && spec.rubric) {
        o << "\nRubric:\n";
        for (const auto& c : spec.rubric->criteria) {
            o << "- " << c.id << " [" << arena::to_string(c.dimension) << "]: " << c.text << "\n";
        }
    }
    if (spec.mode == GuiMode::feasibility && !spec.level_condition.empty()) {
        o << "\nLevel completion condition: " << spec.level_condition << "\n";
    }
    if (spec.mode != GuiMode::feasibility && !spec.memory.empty()) {
        o << "\nMemory:\n";
        for (const auto& m : spec.memory) {
            o << "- [" << memory::to_string(m.layer) << "/" << memory::to_string(m.kind) << "] " << m.content << "\n";
        }
    }
    o << "\nThe current screen is attached (step 0).";
    return o.str();
}

ImageAttachment attach(const browser::Screenshot& shot) {
    return {shot.png, "frames/" + std::to_string(shot.step_index) + ".png"};
}

report::PlayReport load_failure_report() {
    using namespace report;
    PlayReport r;
    r.outcome = RunOutcome::could_not_start;
    r.confidence = Confidence::high;
    r.probe_signals = {"the page never finished loading"};
    r.findings.push_back({Severity::blocker, FeedbackCategory::functionality,
                          "the page never finished loading, so the game could not be started", {}});
    r.most_blocking = 0;
    r.fix_direction = "Find what keeps the page from finishing its load";
    r.fixes.push_back({"the page never finishes loading",
                       "remove the blocking work from page startup so the load completes"});
    return r;
}

void write_log(const GuiSessionSpec& spec, const PlaySessionLog& log) {
    if (!spec.round_dir) return;
    std::filesystem::create_directories(*spec.round_dir);
    std::ofstream(*spec.round_dir / "play_log.json") << to_json(log).dump(2) << '\n';
}

// Asks for the mode's document, allowing one correction.
template <class Parse>
auto terminal_document(Conversation& conv, BackendReply reply, const std::string& what, Parse&& parse) {
    for (int attempt = 0;; ++attempt) {
        if (const auto* call = std::get_if<ToolCall>(&reply)) {
            throw Error(Errc::backend_failure, "expected a " + what + ", got tool call " + call->name);
        }
        try {
            return parse(std::get<TerminalDocument>(reply).text);
        } catch (const Error& e) {
            if (attempt > 0) {
                throw Error(Errc::backend_failure, what + " rejected twice: " + e.what());
            }
            conv.user("Your " + what + " could not be accepted: " + e.what() + "\nSend a corrected " + what + ".");
            reply = conv.ask("assessment", {});
        }
    }
}

}  // namespace

std::string_view to_string(GuiMode mode) {
    switch (mode) {
    case GuiMode::playtester: return "playtester";
    case GuiMode::evaluator: return "evaluator";
    case GuiMode::feasibility: return "feasibility";
    }
    return "?";
}

std::string_view to_string(EpisodeEnd end) {
    switch (end) {
    case EpisodeEnd::completion: return "completion";
    case EpisodeEnd::game_over: return "game_over";
    case EpisodeEnd::timeout: return "timeout";
    case EpisodeEnd::load_failure: return "load_failure";
    }
    return "?";
}

std::optional<EpisodeEnd> parse_episode_end(std::string_view text) {
    for (auto e : {EpisodeEnd::completion, EpisodeEnd::game_over, EpisodeEnd::timeout, EpisodeEnd::load_failure}) {
        if (to_string(e) == text) return e;
    }
    return std::nullopt;
}

json to_json(const PlayStep& s) {
    return {{"step_index", s.step_index},   {"phase", s.phase},
            {"attempt", s.attempt},         {"observation", s.observation},
            {"reasoning", s.reasoning},     {"action", browser::to_json(s.action)},
            {"result", browser::to_string(s.result)}};
}

json to_json(const PlaySessionLog& log) {
    json steps = json::array();
    for (const auto& s : log.steps) steps.push_back(to_json(s));
    json j{{"mode", to_string(log.mode)},
           {"steps", steps},
           {"rejected_actions", log.rejected_actions},
           {"load_failed", log.load_failed},
           {"budget_exhausted", log.budget_exhausted}};
    if (log.retry_violation) j["retry_violation"] = *log.retry_violation;
    return j;
}

std::vector<ToolSpec> browser_tools() {
    const json integer = {{"type", "integer"}};
    const json pair = {{"type", "array"}, {"items", integer}, {"minItems", 2}, {"maxItems", 2}};
    return {
        {"browser_screenshot", "Capture the current frame.", step_args_schema(json::object(), {})},
        {"browser_click", "Left-click at viewport pixel (x, y).",
         step_args_schema({{"x", integer}, {"y", integer}}, {"x", "y"})},
        {"browser_drag", "Press at `from`, move to `to`, release.",
         step_args_schema({{"from", pair}, {"to", pair}}, {"from", "to"})},
        {"browser_key", "Press and hold a key for hold_ms (default 80), optionally with a chord key.",
         step_args_schema({{"key", {{"type", "string"}}}, {"hold_ms", integer}, {"chord", {{"type", "string"}}}},
                          {"key"})},
        {"browser_type", "Type printable text.", step_args_schema({{"text", {{"type", "string"}}}}, {"text"})},
        {"browser_scroll", "Scroll by (dx, dy) pixels.", step_args_schema({{"dx", integer}, {"dy", integer}}, {})},
        {"browser_wait", "Let the game run for ms milliseconds.", step_args_schema({{"ms", integer}}, {"ms"})},
    };
}

ToolSpec memory_save_tool() {
    return {"memory_save",
            "Save one reusable insight.",
            {{"type", "object"},
             {"properties",
              {{"layer", {{"type", "string"}, {"enum", {"episode-shared", "skill", "world"}}}},
               {"kind",
                {{"type", "string"},
                 {"enum",
                  {"pitfall", "fix_pattern", "decision", "interaction_pattern", "false_positive", "observation"}}}},
               {"archetype", {{"type", "string"}}},
               {"content", {{"type", "string"}}}}},
             {"required", {"layer", "kind", "content"}}}};
}

memory::MemoryEntry memory_entry_from_call(const json& args, memory::Owner owner, const std::string& task_id,
                                           const std::string& archetype, int round) {
    memory::MemoryEntry e;
    const auto layer = memory::parse_layer(args.value("layer", ""));
    const auto kind = memory::parse_kind(args.value("kind", ""));
    if (!layer || !kind) throw Error(Errc::consistency_violation, "memory_save needs a known layer and kind");
    e.layer = *layer;
    e.kind = *kind;
    e.owner = e.layer == memory::Layer::skill ? owner : memory::Owner::shared;
    e.archetype = args.value("archetype", archetype);
    e.content = args.value("content", "");
    e.task_id = task_id;
    e.round = round;
    memory::check_consistency(e);
    return e;
}

std::vector<arena::Verdict> parse_verdicts(const std::string& text) {
    const auto j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw Error(Errc::malformed_report, "verdicts are not valid JSON");
    const json& arr = j.is_object() && j.contains("verdicts") ? j["verdicts"] : j;
    if (!arr.is_array()) throw Error(Errc::malformed_report, "verdicts must be an array");
    std::vector<arena::Verdict> out;
    try {
        for (const auto& v : arr) {
            out.push_back({v.at("criterion_id").get<std::string>(), v.at("passed").get<bool>(),
                           v.value("evidence", std::vector<int>{})});
        }
    } catch (const json::exception& e) {
        throw Error(Errc::malformed_report, std::string("malformed verdict: ") + e.what());
    }
    return out;
}

std::string render_verdicts(const std::vector<arena::Verdict>& verdicts) {
    json arr = json::array();
    for (const auto& v : verdicts) {
        arr.push_back({{"criterion_id", v.criterion_id}, {"passed", v.passed}, {"evidence", v.evidence}});
    }
    return json{{"verdicts", arr}}.dump();
}

EpisodeOutcome parse_episode(const std::string& text) {
    const auto j = json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("passed") || !j["passed"].is_boolean()) {
        throw Error(Errc::malformed_report, "episode outcome must be {\"passed\": bool, \"end\": ...}");
    }
    const auto end = parse_episode_end(j.value("end", ""));
    if (!end || *end == EpisodeEnd::timeout || *end == EpisodeEnd::load_failure) {
        throw Error(Errc::malformed_report, "episode end must be completion or game_over");
    }
    const bool passed = j["passed"].get<bool>();
    if (passed != (*end == EpisodeEnd::completion)) {
        throw Error(Errc::malformed_report, "a passed episode ends in completion, a failed one in game_over");
    }
    return {passed, *end};
}

bool is_platformer_like(std::string_view archetype) { return archetype == "platformer"; }

std::optional<std::string> retry_policy_check(const PlaySessionLog& log, bool declared_blocked) {
    if (!declared_blocked) return std::nullopt;
    std::map<int, std::vector<browser::GuiAction>> segments;
    for (const auto& s : log.steps) {
        if (s.attempt > 0) segments[s.attempt].push_back(s.action);
    }
    std::vector<std::vector<browser::GuiAction>> distinct;
    for (auto& [n, actions] : segments) {
        if (std::find(distinct.begin(), distinct.end(), actions) == distinct.end()) distinct.push_back(actions);
    }
    if (distinct.size() >= 2) return std::nullopt;
    return "declared blocked after " + std::to_string(distinct.size()) +
           " distinct retry segment(s); at least 2 are required";
}

GuiSessionResult run_gui_session(ModelBackend& backend, const SessionOpener& open, const GuiSessionSpec& spec) {
    if ((spec.mode == GuiMode::evaluator) != (spec.rubric != nullptr)) {
        throw Error(Errc::invariant_violation, "a rubric is given exactly in evaluator mode");
    }
    GuiSessionResult out;
    out.log.mode = spec.mode;

    std::unique_ptr<browser::ActionSurface> surface;
    try {
        surface = open();
    } catch (const Error& e) {
        if (e.code() != Errc::load_timeout) throw;
        out.log.load_failed = true;
        out.log.rejected_actions.push_back(std::string("load failed: ") + e.what());
        switch (spec.mode) {
        case GuiMode::playtester: out.report = load_failure_report(); break;
        case GuiMode::evaluator:
            out.verdicts.emplace();
            for (const auto& c : spec.rubric->criteria) out.verdicts->push_back({c.id, false, {}});
            break;
        case GuiMode::feasibility: out.episode = EpisodeOutcome{false, EpisodeEnd::load_failure}; break;
        }
        write_log(spec, out.log);
        return out;
    }

    std::optional<std::filesystem::path> transcript;
    if (spec.round_dir) transcript = *spec.round_dir / "gui_agent.jsonl";
    Conversation conv(backend, "gui-agent", spec.session_id, transcript);
    conv.user(intro(spec), {attach(surface->screenshot())});

    const auto tools = browser_tools();
    BackendReply reply;
    int rejected_in_a_row = 0;
    for (;;) {
        reply = conv.ask("play", tools);
        const auto* call = std::get_if<ToolCall>(&reply);
        if (!call) break;
        json action_json = call->args;
        action_json["action"] = call->name.substr(std::string_view("browser_").size());
        PlayStep step;
        step.observation = call->args.value("observation", "");
        step.reasoning = call->args.value("reasoning", "");
        step.phase = call->args.value("phase", "play");
        step.attempt = call->args.value("attempt", 0);
        try {
            step.action = browser::action_from_json(action_json);
            browser::validate_action(step.action, surface->viewport());
        } catch (const Error& e) {
            out.log.rejected_actions.push_back(e.what());
            if (++rejected_in_a_row >= kMaxRejectedInARow) {
                throw Error(Errc::backend_failure, "too many rejected actions in a row");
            }
            conv.tool_result(*call, std::string("error: ") + e.what());
            continue;
        }
        rejected_in_a_row = 0;
        step.result = surface->perform(step.action);
        step.step_index = surface->step_index();
        out.log.steps.push_back(step);
        if (step.result != ActionResult::ok) {
            out.log.budget_exhausted = true;
            conv.tool_result(*call, std::string("error: ") + std::string(browser::to_string(step.result)));
            break;
        }
        const auto shot = surface->screenshot();
        conv.tool_result(*call, "step " + std::to_string(shot.step_index) + ": ok", {attach(shot)});
    }

    if (out.log.budget_exhausted) {
        conv.user("The session budget is exhausted and no further actions are possible. Send your final "
                  "document now.");
        reply = conv.ask("assessment", {});
    }
    surface.reset();

    switch (spec.mode) {
    case GuiMode::playtester: {
        auto r = terminal_document(conv, reply, "playtest report",
                                   [](const std::string& t) { return report::parse_report(t); });
        if (out.log.budget_exhausted && r.outcome != report::RunOutcome::could_not_start) {
            r.outcome = report::RunOutcome::blocked_by_bug;
        }
        if (r.interaction_log_ref.empty() && spec.round_dir) r.interaction_log_ref = "play_log.json";
        if (is_platformer_like(spec.archetype)) {
            out.log.retry_violation =
                retry_policy_check(out.log, r.outcome == report::RunOutcome::blocked_by_bug);
        }
        out.report = std::move(r);
        break;
    }
    case GuiMode::evaluator: {
        const int steps = static_cast<int>(out.log.steps.size());
        out.verdicts = terminal_document(conv, reply, "verdict list", [&](const std::string& t) {
            auto v = parse_verdicts(t);
            for (const auto& verdict : v) {
                if (verdict.passed && verdict.evidence.empty()) {
                    throw Error(Errc::malformed_report, "criterion " + verdict.criterion_id + " passed without evidence");
                }
                for (int e : verdict.evidence) {
                    if (e < 0 || e > steps) {
                        throw Error(Errc::malformed_report, "evidence step " + std::to_string(e) + " out of range");
                    }
                }
            }
            return v;
        });
        break;
    }
    case GuiMode::feasibility:
        if (out.log.budget_exhausted) {
            out.episode = EpisodeOutcome{false, EpisodeEnd::timeout};
        } else {
            out.episode = terminal_document(conv, reply, "episode outcome", parse_episode);
        }
        break;
    }

    if (spec.mode == GuiMode::playtester) {
        conv.user("The session is over. Save reusable interaction patterns, false positives or archetype "
                  "heuristics with memory_save, then reply DONE.");
        for (int saves = 0;; ++saves) {
            const auto r = conv.ask("memory_capture", {memory_save_tool()});
            const auto* call = std::get_if<ToolCall>(&r);
            if (!call) break;
            if (saves >= kMaxMemorySaves) throw Error(Errc::backend_failure, "too many memory_save calls");
            try {
                out.memory_writes.push_back(memory_entry_from_call(call->args, memory::Owner::gui_player,
                                                                   spec.task_id, spec.archetype, spec.round));
                conv.tool_result(*call, "saved");
            } catch (const Error& e) {
                conv.tool_result(*call, std::string("error: ") + e.what());
            }
        }
    }
    write_log(spec, out.log);
    return out;
}

}  // namespace playforge::agent
