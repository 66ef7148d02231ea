#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "playforge/agent/backend.hpp"
#include "playforge/agent/guide.hpp"
#include "playforge/arena/types.hpp"
#include "playforge/browser/actions.hpp"
#include "playforge/memory/store.hpp"
#include "playforge/report/play_report.hpp"

namespace playforge::agent {

enum class GuiMode { playtester, evaluator, feasibility };

std::string_view to_string(GuiMode mode);

// How a feasibility episode ended.
enum class EpisodeEnd { completion, game_over, timeout, load_failure };

std::string_view to_string(EpisodeEnd end);
std::optional<EpisodeEnd> parse_episode_end(std::string_view text);

struct PlayStep {
    int step_index = 0;  // driver step counter after the action
    std::string phase;   // start | play | ...; free-form label from the agent
    int attempt = 0;     // retry segment the agent declared, 0 when unset
    std::string observation;
    std::string reasoning;
    browser::GuiAction action;
    browser::ActionResult result = browser::ActionResult::ok;
};

struct PlaySessionLog {
    GuiMode mode = GuiMode::playtester;
    std::vector<PlayStep> steps;
    std::vector<std::string> rejected_actions;  // tool errors returned to the agent
    bool load_failed = false;
    bool budget_exhausted = false;
    std::optional<std::string> retry_violation;  // advisory
};

json to_json(const PlayStep& step);
json to_json(const PlaySessionLog& log);

struct EpisodeOutcome {
    bool passed = false;
    EpisodeEnd end = EpisodeEnd::timeout;

    bool operator==(const EpisodeOutcome&) const = default;
};

struct GuiSessionSpec {
    GuiMode mode = GuiMode::playtester;
    std::string session_id;
    std::string task_id;
    std::string archetype;
    std::string prompt;  // generation prompt; shown to the playtester only
    GameGuide guide;
    const arena::Rubric* rubric = nullptr;  // evaluator only
    std::vector<memory::MemoryEntry> memory;
    std::string level_condition;  // feasibility only
    // Receives gui_agent.jsonl; frames are referenced as frames/<step>.png.
    std::optional<std::filesystem::path> round_dir;
    int round = 1;
};

// Opens the page for a session; throws LoadTimeout when it never loads.
using SessionOpener = std::function<std::unique_ptr<browser::ActionSurface>()>;

struct GuiSessionResult {
    PlaySessionLog log;
    std::optional<report::PlayReport> report;
    std::optional<std::vector<arena::Verdict>> verdicts;
    std::optional<EpisodeOutcome> episode;
    std::vector<memory::MemoryEntry> memory_writes;
};

// Initial observation, game start and play through browser tools, then the
// mode's terminal document, then memory capture (playtester only).
GuiSessionResult run_gui_session(ModelBackend& backend, const SessionOpener& open, const GuiSessionSpec& spec);

// Platformer-like archetypes must show two materially different retries
// before a level is declared blocked. Returns the violation, if any.
std::optional<std::string> retry_policy_check(const PlaySessionLog& log, bool declared_blocked);

bool is_platformer_like(std::string_view archetype);

// Evaluator documents: {"verdicts": [{"criterion_id", "passed", "evidence"}]}
// or the bare array.
std::vector<arena::Verdict> parse_verdicts(const std::string& text);
std::string render_verdicts(const std::vector<arena::Verdict>& verdicts);

// Feasibility documents: {"passed": bool, "end": "completion" | "game_over"}.
EpisodeOutcome parse_episode(const std::string& text);

std::vector<ToolSpec> browser_tools();
ToolSpec memory_save_tool();

// Turns a memory_save call into an entry owned by `owner`.
memory::MemoryEntry memory_entry_from_call(const json& args, memory::Owner owner, const std::string& task_id,
                                           const std::string& archetype, int round);

}  // namespace playforge::agent
