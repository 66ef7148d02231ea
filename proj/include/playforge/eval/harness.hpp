#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "playforge/agent/backend.hpp"
#include "playforge/agent/gui_agent.hpp"
#include "playforge/arena/types.hpp"
#include "playforge/browser/actions.hpp"
#include "playforge/browser/launcher.hpp"
#include "playforge/eval/stats.hpp"
#include "playforge/loop/loop.hpp"
#include "playforge/report/play_report.hpp"

namespace playforge::eval {

using nlohmann::json;

struct Adjudication {
    std::vector<arena::Verdict> verdicts;
    arena::RubricScore score;
    agent::PlaySessionLog log;
    int attempts = 1;
};

struct AdjudicateOptions {
    browser::SessionBudget budget = browser::SessionBudget::judge();
    browser::Viewport viewport{};
    std::optional<std::filesystem::path> dir;  // receives gui_agent.jsonl, play_log.json, verdicts.json
    std::string session_id;                    // defaults to "<task>/judge"
    std::optional<agent::GameGuide> guide;     // the build's GAME_GUIDE.md when unset
};

// Plays the build in evaluator mode and scores it. A verdict set missing a
// criterion is retried once with a fresh session, then MissingVerdict.
Adjudication adjudicate(const arena::GameTask& task, const arena::GameBuild& build, agent::ModelBackend& gui,
                        browser::Browser& browser, const AdjudicateOptions& options = {});

// Same, with the page opener supplied by the caller.
Adjudication adjudicate(const arena::GameTask& task, agent::ModelBackend& gui, const agent::SessionOpener& open,
                        const AdjudicateOptions& options = {});

struct ScoredTask {
    const arena::GameTask* task = nullptr;
    loop::TaskRunRecord record;
    std::vector<arena::Verdict> final_verdicts;
};

inline constexpr std::array<report::FeedbackCategory, 5> kCategoryOrder = {
    report::FeedbackCategory::functionality, report::FeedbackCategory::controls,
    report::FeedbackCategory::experience, report::FeedbackCategory::visual, report::FeedbackCategory::other};

struct Aggregate {
    std::map<arena::Genre, double> genre_mean;  // genres with at least one task
    std::map<arena::Genre, int> genre_tasks;
    std::map<std::string, double> task_score;   // final rubric score per task
    double overall_mean = 0.0;                  // over tasks
    std::map<int, double> round_mean;           // round -> mean, scores carried forward after termination
    std::map<report::FeedbackCategory, double> categories;  // normalized finding counts
    std::size_t findings = 0;
};

// Throws EmptyInput; rubric errors from scoring propagate.
Aggregate aggregate(const std::vector<ScoredTask>& tasks);

// Same, from final scores already computed (e.g. read back from disk).
struct TaskScore {
    std::string task_id;
    arena::Genre genre = arena::Genre::other;
    double score = 0.0;
    loop::TaskRunRecord record;
};
Aggregate aggregate_scores(const std::vector<TaskScore>& tasks);

// Per-round rubric scores recorded by the loop's judge; rounds without a
// score end the trajectory.
TrajectoryRecord trajectory_of(const loop::TaskRunRecord& record);

// One row per genre in table order plus Avg.; cells are percentages with one
// decimal, "-" for genres without tasks.
std::string genre_table_csv(const Aggregate& a);
std::string pass_at_k_csv(const std::map<std::string, PassAtKTable>& rows);

json to_json(const Aggregate& a);

// Feasibility: n independent episodes of one level in feasibility mode.
struct FeasibilityLevel {
    std::string level_id;
    arena::GameBuild build;
    agent::GameGuide guide;
    std::string completion_condition;
};

LevelRecord run_feasibility(const FeasibilityLevel& level, int episodes, agent::ModelBackend& gui,
                            browser::Browser& browser, browser::SessionBudget budget = browser::SessionBudget::feasibility(),
                            std::vector<agent::EpisodeOutcome>* outcomes = nullptr);

// Episodes that ended by time-out, load failure, or game over all count as failures.
LevelRecord level_record(const std::string& level_id, const std::vector<agent::EpisodeOutcome>& outcomes);

}  // namespace playforge::eval
