#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "playforge/agent/backend.hpp"
#include "playforge/agent/guide.hpp"
#include "playforge/arena/types.hpp"
#include "playforge/browser/actions.hpp"
#include "playforge/browser/launcher.hpp"
#include "playforge/memory/store.hpp"
#include "playforge/report/play_report.hpp"

namespace playforge::loop {

using nlohmann::json;

enum class RunMode { direct, no_gui_self_verify, play2code, human_playtester };

std::string_view to_string(RunMode mode);
std::optional<RunMode> parse_run_mode(std::string_view text);

enum class Termination { early_complete, r_max_reached, fatal_error };

std::string_view to_string(Termination t);
std::optional<Termination> parse_termination(std::string_view text);

struct LoopConfig {
    int r_max = 5;
    RunMode mode = RunMode::play2code;
    memory::Ablation memory_ablation = memory::Ablation::full;
    std::optional<std::string> verify_command;
    browser::SessionBudget play_budget{};
    browser::Viewport viewport{};
    int max_repairs = 2;
    int load_grace_ms = 500;  // page time after load during which console errors fail the check
    std::chrono::milliseconds human_budget{std::chrono::minutes(10)};
    bool allow_shell = false;
    bool archive_frames = true;

    // Direct mode runs one round whatever r_max says.
    int effective_r_max() const { return mode == RunMode::direct ? 1 : r_max; }
};

// Throws ConfigError for r_max < 1 or non-positive budgets.
void validate(const LoopConfig& config);

json to_json(const LoopConfig& config);
LoopConfig config_from_json(const json& j);

struct VerifyResult {
    bool ok = true;
    std::vector<std::string> errors;
    int repairs = 0;
};

struct RoundRecord {
    int round = 1;
    std::string build_ref;  // relative to the task directory, e.g. "2/build"
    std::optional<report::PlayReport> report;
    std::string report_source;  // gui | self_review | human; empty without a report
    VerifyResult verify;
    int memory_writes = 0;
    std::vector<arena::Verdict> verdicts;     // set when a judge scored the round
    std::optional<arena::RubricScore> score;
    std::optional<std::string> retry_violation;
};

struct TaskRunRecord {
    std::string task_id;
    arena::Genre genre = arena::Genre::other;
    LoopConfig config;
    std::vector<RoundRecord> rounds;
    Termination termination = Termination::r_max_reached;
    std::string final_build;  // relative, last build that passed verification
    int effective_rounds = 0;
    std::string error;        // fatal_error diagnostic
};

json to_json(const TaskRunRecord& record);
TaskRunRecord record_from_json(const json& j);
TaskRunRecord load_record(const std::filesystem::path& file);

// completed or reached-ending, with high confidence.
bool should_terminate(const report::PlayReport& report);

// Runs the verify command in the build directory (VerifyCommandFailed on a
// non-zero exit), then, when a browser is given, loads the page and lets it
// run for the grace window (LoadCheckFailed on a load timeout or any console
// error).
void verify_build(const arena::GameBuild& build, const LoopConfig& config, browser::Browser* browser);

struct RoundStats {
    double mean = 0.0;
    double median = 0.0;
    double std = 0.0;
    double early_fraction = 0.0;
};

// Throws EmptyInput.
RoundStats effective_round_stats(const std::vector<TaskRunRecord>& records, bool sample_std = true);

// What a human playtester is given for one round.
struct HumanRequest {
    std::string task_id;
    int round = 1;
    arena::GameBuild build;
    std::string prompt;
    agent::GameGuide guide;
    std::chrono::milliseconds budget{std::chrono::minutes(10)};
};

class HumanChannel {
public:
    virtual ~HumanChannel() = default;
    // Blocks until the human submits or the budget runs out (nullopt).
    virtual std::optional<report::PlayReport> await_report(const HumanRequest& request) = 0;
};

// Scores one round's build; used for trajectories. Not part of any mode:
// a loop without a judge opens only the sessions its mode needs.
using RoundJudge = std::function<std::vector<arena::Verdict>(const arena::GameTask&, const arena::GameBuild&,
                                                            int round, const std::filesystem::path& round_dir)>;

struct LoopBackends {
    agent::ModelBackend* game = nullptr;
    agent::ModelBackend* gui = nullptr;   // play2code
    HumanChannel* human = nullptr;        // human_playtester
    browser::Browser* browser = nullptr;  // play2code and human_playtester load checks and play
    RoundJudge judge;
};

// Runs rounds until early termination or r_max, writing
// <runs_dir>/<task>/<round>/... and <runs_dir>/<task>/record.json after
// every round. Fatal errors end the run with the partial record persisted.
TaskRunRecord run_task(const arena::GameTask& task, const LoopConfig& config, const LoopBackends& backends,
                       memory::MemoryStore& store, const std::filesystem::path& runs_dir);

}  // namespace playforge::loop
