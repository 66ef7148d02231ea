#include "playforge/eval/harness.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "playforge/arena/task_io.hpp"
#include "playforge/browser/session.hpp"
#include "playforge/error.hpp"

namespace playforge::eval {

namespace {

std::vector<std::string> missing_criteria(const std::vector<arena::Verdict>& verdicts, const arena::Rubric& rubric) {
    std::set<std::string> have;
    for (const auto& v : verdicts) have.insert(v.criterion_id);
    std::vector<std::string> out;
    for (const auto& c : rubric.criteria) {
        if (!have.count(c.id)) out.push_back(c.id);
    }
    return out;
}

std::string percent(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", 100.0 * v);
    return buf;
}

std::string fixed(double v, int digits) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

}  // namespace

Adjudication adjudicate(const arena::GameTask& task, agent::ModelBackend& gui, const agent::SessionOpener& open,
                        const AdjudicateOptions& options) {
    Adjudication out;
    const auto base_id = options.session_id.empty() ? task.id + "/judge" : options.session_id;
    for (int attempt = 1;; ++attempt) {
        agent::GuiSessionSpec spec;
        spec.mode = agent::GuiMode::evaluator;
        spec.session_id = attempt == 1 ? base_id : base_id + "/retry";
        spec.task_id = task.id;
        spec.archetype = std::string(arena::to_string(task.genre));
        spec.rubric = &task.rubric;
        if (options.dir) spec.round_dir = attempt == 1 ? *options.dir : *options.dir / "retry";
        spec.guide = options.guide.value_or(agent::GameGuide{"Not documented.", "Not documented.", "Not documented."});
        auto result = agent::run_gui_session(gui, open, spec);
        out.log = std::move(result.log);
        out.verdicts = result.verdicts.value_or(std::vector<arena::Verdict>{});
        out.attempts = attempt;
        const auto missing = missing_criteria(out.verdicts, task.rubric);
        if (missing.empty()) break;
        if (attempt >= 2) {
            throw Error(Errc::missing_verdict, "no verdict for criterion '" + missing.front() + "' after a retry");
        }
    }
    out.score = arena::rubric_score(out.verdicts, task.rubric);
    if (options.dir) {
        std::filesystem::create_directories(*options.dir);
        json j{{"task_id", task.id},
               {"verdicts", out.verdicts},
               {"score", out.score},
               {"attempts", out.attempts}};
        std::ofstream(*options.dir / "verdicts.json") << j.dump(2) << '\n';
    }
    return out;
}

Adjudication adjudicate(const arena::GameTask& task, const arena::GameBuild& build, agent::ModelBackend& gui,
                        browser::Browser& browser, const AdjudicateOptions& options) {
    auto with_guide = options;
    const auto guide_file = build.root / "GAME_GUIDE.md";
    if (!with_guide.guide && std::filesystem::exists(guide_file)) {
        try {
            with_guide.guide = agent::parse_guide(arena::read_text_file(guide_file));
        } catch (const Error&) {
            // A malformed guide is the build's problem; judge without it.
        }
    }
    auto open = [&]() -> std::unique_ptr<browser::ActionSurface> {
        browser::SessionOptions opts;
        if (options.dir) opts.frames_dir = *options.dir / "frames";
        return std::make_unique<browser::BuildSession>(browser, build, options.viewport, options.budget, opts);
    };
    return adjudicate(task, gui, open, with_guide);
}

TrajectoryRecord trajectory_of(const loop::TaskRunRecord& record) {
    TrajectoryRecord t{record.task_id, {}};
    for (const auto& r : record.rounds) {
        if (!r.score) break;
        t.scores.push_back(r.score->value);
    }
    return t;
}

Aggregate aggregate(const std::vector<ScoredTask>& tasks) {
    std::vector<TaskScore> scores;
    for (const auto& t : tasks) {
        if (!t.task) throw Error(Errc::invariant_violation, "scored task without its task");
        scores.push_back({t.task->id, t.task->genre, arena::rubric_score(t.final_verdicts, t.task->rubric).value,
                          t.record});
    }
    return aggregate_scores(scores);
}

Aggregate aggregate_scores(const std::vector<TaskScore>& tasks) {
    if (tasks.empty()) throw Error(Errc::empty_input, "nothing to aggregate");
    Aggregate a;
    std::map<arena::Genre, double> genre_sum;
    double total = 0.0;
    std::vector<TrajectoryRecord> trajectories;
    std::map<report::FeedbackCategory, std::size_t> counts;
    std::size_t max_rounds = 0;
    for (const auto& t : tasks) {
        a.task_score[t.task_id] = t.score;
        genre_sum[t.genre] += t.score;
        ++a.genre_tasks[t.genre];
        total += t.score;
        trajectories.push_back(trajectory_of(t.record));
        max_rounds = std::max(max_rounds, trajectories.back().scores.size());
        for (const auto& r : t.record.rounds) {
            if (!r.report) continue;
            for (const auto& f : r.report->findings) {
                ++counts[f.category];
                ++a.findings;
            }
        }
    }
    for (const auto& [g, sum] : genre_sum) a.genre_mean[g] = sum / a.genre_tasks[g];
    a.overall_mean = total / static_cast<double>(tasks.size());

    // A task that stopped early keeps its last build, so its last score
    // stands for the rounds it did not run.
    for (std::size_t r = 0; r < max_rounds; ++r) {
        double sum = 0.0;
        int n = 0;
        for (const auto& t : trajectories) {
            if (t.scores.empty()) continue;
            sum += r < t.scores.size() ? t.scores[r] : t.scores.back();
            ++n;
        }
        if (n) a.round_mean[static_cast<int>(r + 1)] = sum / n;
    }
    for (auto c : kCategoryOrder) {
        a.categories[c] = a.findings ? static_cast<double>(counts[c]) / static_cast<double>(a.findings) : 0.0;
    }
    return a;
}

std::string genre_table_csv(const Aggregate& a) {
    static const std::array<std::pair<arena::Genre, const char*>, 8> rows = {{{arena::Genre::puzzle, "Puzzle"},
                                                                              {arena::Genre::strategy, "Strategy"},
                                                                              {arena::Genre::card, "Card"},
                                                                              {arena::Genre::action, "Action"},
                                                                              {arena::Genre::platformer, "Platformer"},
                                                                              {arena::Genre::management, "Management"},
                                                                              {arena::Genre::shooter, "Shooter"},
                                                                              {arena::Genre::other, "Other"}}};
    std::ostringstream o;
    o << "Genre,Tasks,Score\n";
    for (const auto& [g, name] : rows) {
        const auto it = a.genre_mean.find(g);
        const int n = a.genre_tasks.count(g) ? a.genre_tasks.at(g) : 0;
        o << name << ',' << n << ',' << (it == a.genre_mean.end() ? "-" : percent(it->second)) << '\n';
    }
    int total = 0;
    for (const auto& [g, n] : a.genre_tasks) total += n;
    o << "Avg.," << total << ',' << percent(a.overall_mean) << '\n';
    return o.str();
}

std::string pass_at_k_csv(const std::map<std::string, PassAtKTable>& rows) {
    std::ostringstream o;
    std::vector<int> ks;
    if (!rows.empty()) ks = rows.begin()->second.ks;
    o << "Agent";
    for (int k : ks) o << ",pass@" << k;
    o << '\n';
    for (const auto& [agent, table] : rows) {
        o << agent;
        for (int k : ks) o << ',' << fixed(table.mean.at(k), 4);
        o << '\n';
    }
    return o.str();
}

json to_json(const Aggregate& a) {
    json genres = json::object();
    for (const auto& [g, v] : a.genre_mean) {
        genres[std::string(arena::to_string(g))] = {{"mean", v}, {"tasks", a.genre_tasks.at(g)}};
    }
    json rounds = json::object();
    for (const auto& [r, v] : a.round_mean) rounds[std::to_string(r)] = v;
    json cats = json::object();
    for (auto c : kCategoryOrder) cats[std::string(report::to_string(c))] = a.categories.at(c);
    return {{"genres", genres},
            {"overall_mean", a.overall_mean},
            {"tasks", a.task_score},
            {"round_means", rounds},
            {"categories", cats},
            {"findings", a.findings}};
}

LevelRecord level_record(const std::string& level_id, const std::vector<agent::EpisodeOutcome>& outcomes) {
    if (outcomes.empty()) throw Error(Errc::empty_input, "a level needs at least one episode");
    LevelRecord r{level_id, static_cast<int>(outcomes.size()), 0, {}};
    for (const auto& o : outcomes) {
        r.episodes.push_back(o.passed);
        if (o.passed) ++r.c;
    }
    return r;
}

LevelRecord run_feasibility(const FeasibilityLevel& level, int episodes, agent::ModelBackend& gui,
                            browser::Browser& browser, browser::SessionBudget budget,
                            std::vector<agent::EpisodeOutcome>* outcomes) {
    if (episodes < 1) throw Error(Errc::k_out_of_range, "at least one episode is needed");
    std::vector<agent::EpisodeOutcome> got;
    for (int i = 0; i < episodes; ++i) {
        agent::GuiSessionSpec spec;
        spec.mode = agent::GuiMode::feasibility;
        spec.session_id = level.level_id + "/episode-" + std::to_string(i + 1);
        spec.task_id = level.level_id;
        spec.guide = level.guide;
        spec.level_condition = level.completion_condition;
        auto open = [&]() -> std::unique_ptr<browser::ActionSurface> {
            return std::make_unique<browser::BuildSession>(browser, level.build, browser::Viewport{}, budget);
        };
        got.push_back(*agent::run_gui_session(gui, open, spec).episode);
    }
    if (outcomes) *outcomes = got;
    return level_record(level.level_id, got);
}

}  // namespace playforge::eval
