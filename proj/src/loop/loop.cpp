#include "playforge/loop/loop.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "playforge/agent/game_agent.hpp"
#include "playforge/agent/gui_agent.hpp"
#include "playforge/arena/task_io.hpp"
#include "playforge/browser/session.hpp"
#include "playforge/error.hpp"
#include "playforge/process.hpp"

namespace playforge::loop {

namespace fs = std::filesystem;

namespace {

std::vector<agent::GamePhase> game_phases(RunMode mode, int round) {
    using agent::GamePhase;
    switch (mode) {
    case RunMode::direct: return {GamePhase::design, GamePhase::assets, GamePhase::implementation};
    case RunMode::no_gui_self_verify: {
        auto p = agent::phases_for(round);
        p.insert(std::find(p.begin(), p.end(), GamePhase::memory_capture), GamePhase::self_review);
        return p;
    }
    case RunMode::play2code:
    case RunMode::human_playtester: break;
    }
    return agent::phases_for(round);
}

std::vector<memory::MemoryEntry> memory_view(memory::MemoryStore& store, memory::Owner who,
                                             const arena::GameTask& task, memory::Ablation ablation) {
    // No layers means no read at all, so the access log stays empty.
    if (ablation == memory::Ablation::none) return {};
    return store.visible({who, std::string(arena::to_string(task.genre)), task.id, memory::ablation_view(ablation)});
}

int save_allowed(memory::MemoryStore& store, const std::vector<memory::MemoryEntry>& writes,
                 memory::Ablation ablation) {
    const auto layers = memory::ablation_view(ablation);
    int n = 0;
    for (const auto& e : writes) {
        if (!layers.count(e.layer)) continue;
        store.save(e);
        ++n;
    }
    return n;
}

void persist(const TaskRunRecord& record, const fs::path& task_dir) {
    std::ofstream(task_dir / "record.json") << to_json(record).dump(2) << '\n';
}

json score_json(const arena::RubricScore& s) { return {{"passed", s.passed}, {"total", s.total}, {"value", s.value}}; }

}  // namespace

std::string_view to_string(RunMode mode) {
    switch (mode) {
    case RunMode::direct: return "direct";
    case RunMode::no_gui_self_verify: return "no_gui_self_verify";
    case RunMode::play2code: return "play2code";
    case RunMode::human_playtester: return "human_playtester";
    }
    return "?";
}

std::optional<RunMode> parse_run_mode(std::string_view text) {
    for (auto m : {RunMode::direct, RunMode::no_gui_self_verify, RunMode::play2code, RunMode::human_playtester}) {
        if (to_string(m) == text) return m;
    }
    return std::nullopt;
}

std::string_view to_string(Termination t) {
    switch (t) {
    case Termination::early_complete: return "early_complete";
    case Termination::r_max_reached: return "r_max_reached";
    case Termination::fatal_error: return "fatal_error";
    }
    return "?";
}

std::optional<Termination> parse_termination(std::string_view text) {
    for (auto t : {Termination::early_complete, Termination::r_max_reached, Termination::fatal_error}) {
        if (to_string(t) == text) return t;
    }
    return std::nullopt;
}

void validate(const LoopConfig& c) {
    if (c.r_max < 1) throw Error(Errc::config_error, "r_max must be at least 1");
    if (c.play_budget.max_steps < 1 || c.play_budget.wall_clock_limit.count() <= 0) {
        throw Error(Errc::config_error, "session budgets must be positive");
    }
    if (c.max_repairs < 0) throw Error(Errc::config_error, "max_repairs must not be negative");
    if (c.human_budget.count() <= 0) throw Error(Errc::config_error, "human budget must be positive");
}

json to_json(const LoopConfig& c) {
    json j{{"r_max", c.effective_r_max()},
           {"mode", to_string(c.mode)},
           {"memory_ablation", memory::to_string(c.memory_ablation)},
           {"play_budget", {{"wall_clock_ms", c.play_budget.wall_clock_limit.count()},
                            {"max_steps", c.play_budget.max_steps}}},
           {"viewport", std::to_string(c.viewport.width) + "x" + std::to_string(c.viewport.height)},
           {"max_repairs", c.max_repairs},
           {"load_grace_ms", c.load_grace_ms},
           {"human_budget_ms", c.human_budget.count()}};
    if (c.verify_command) j["verify_command"] = *c.verify_command;
    return j;
}

LoopConfig config_from_json(const json& j) {
    LoopConfig c;
    c.r_max = j.value("r_max", 5);
    if (auto m = parse_run_mode(j.value("mode", "play2code"))) c.mode = *m;
    if (auto a = memory::parse_ablation(j.value("memory_ablation", "full"))) c.memory_ablation = *a;
    if (j.contains("play_budget")) {
        c.play_budget.wall_clock_limit = std::chrono::milliseconds(j["play_budget"].value("wall_clock_ms", 300000));
        c.play_budget.max_steps = j["play_budget"].value("max_steps", 400);
    }
    if (j.contains("viewport")) c.viewport = browser::parse_viewport(j["viewport"].get<std::string>());
    c.max_repairs = j.value("max_repairs", 2);
    c.load_grace_ms = j.value("load_grace_ms", 500);
    c.human_budget = std::chrono::milliseconds(j.value("human_budget_ms", 600000));
    if (j.contains("verify_command")) c.verify_command = j["verify_command"].get<std::string>();
    return c;
}

json to_json(const TaskRunRecord& r) {
    json rounds = json::array();
    for (const auto& rr : r.rounds) {
        json x{{"round", rr.round},
               {"build", rr.build_ref},
               {"verify", {{"ok", rr.verify.ok}, {"errors", rr.verify.errors}, {"repairs", rr.verify.repairs}}},
               {"memory_writes", rr.memory_writes}};
        if (rr.report) {
            x["report"] = *rr.report;
            x["report_source"] = rr.report_source;
        }
        if (rr.score) {
            x["score"] = score_json(*rr.score);
            x["verdicts"] = rr.verdicts;
        }
        if (rr.retry_violation) x["retry_violation"] = *rr.retry_violation;
        rounds.push_back(std::move(x));
    }
    json j{{"task_id", r.task_id},
           {"genre", arena::to_string(r.genre)},
           {"config", to_json(r.config)},
           {"rounds", rounds},
           {"termination", to_string(r.termination)},
           {"final_build", r.final_build},
           {"effective_rounds", r.effective_rounds}};
    if (!r.error.empty()) j["error"] = r.error;
    return j;
}

TaskRunRecord record_from_json(const json& j) {
    try {
        TaskRunRecord r;
        r.task_id = j.at("task_id").get<std::string>();
        r.genre = arena::parse_genre(j.at("genre").get<std::string>()).value_or(arena::Genre::other);
        r.config = config_from_json(j.value("config", json::object()));
        for (const auto& x : j.at("rounds")) {
            RoundRecord rr;
            rr.round = x.at("round").get<int>();
            rr.build_ref = x.value("build", "");
            rr.verify.ok = x.at("verify").value("ok", true);
            rr.verify.errors = x.at("verify").value("errors", std::vector<std::string>{});
            rr.verify.repairs = x.at("verify").value("repairs", 0);
            rr.memory_writes = x.value("memory_writes", 0);
            if (x.contains("report")) {
                rr.report = x["report"].get<report::PlayReport>();
                rr.report_source = x.value("report_source", "");
            }
            if (x.contains("score")) {
                rr.score = arena::RubricScore{x["score"].at("passed").get<int>(), x["score"].at("total").get<int>(),
                                              x["score"].at("value").get<double>()};
                rr.verdicts = x.value("verdicts", std::vector<arena::Verdict>{});
            }
            if (x.contains("retry_violation")) rr.retry_violation = x["retry_violation"].get<std::string>();
            r.rounds.push_back(std::move(rr));
        }
        const auto t = parse_termination(j.at("termination").get<std::string>());
        if (!t) throw Error(Errc::malformed_task, "unknown termination");
        r.termination = *t;
        r.final_build = j.value("final_build", "");
        r.effective_rounds = j.at("effective_rounds").get<int>();
        r.error = j.value("error", "");
        return r;
    } catch (const json::exception& e) {
        throw Error(Errc::malformed_task, std::string("bad record: ") + e.what());
    }
}

TaskRunRecord load_record(const fs::path& file) {
    const auto j = json::parse(arena::read_text_file(file), nullptr, false);
    if (j.is_discarded()) throw Error(Errc::malformed_task, file.string() + " is not valid JSON");
    return record_from_json(j);
}

bool should_terminate(const report::PlayReport& r) {
    using report::RunOutcome;
    return (r.outcome == RunOutcome::completed || r.outcome == RunOutcome::reached_ending) &&
           r.confidence == report::Confidence::high;
}

void verify_build(const arena::GameBuild& build, const LoopConfig& config, browser::Browser* browser) {
    if (const auto v = arena::validate_build(build); !v.empty()) {
        throw Error(Errc::load_check_failed, v.front().detail);
    }
    if (config.verify_command) {
        const auto r = run_command(build.root, *config.verify_command);
        if (r.exit_code != 0) {
            throw Error(Errc::verify_command_failed,
                        "`" + *config.verify_command + "` exited " + std::to_string(r.exit_code) + ":\n" + r.output);
        }
    }
    if (!browser) return;
    browser::SessionOptions opts;
    opts.load_timeout = std::chrono::seconds(5);
    try {
        browser::BuildSession s(*browser, build, config.viewport, browser::SessionBudget{}, opts);
        s.perform(browser::action::Wait{config.load_grace_ms});
        const auto& errors = s.session().console_errors();
        if (!errors.empty()) {
            std::string text = "console errors during load:";
            for (const auto& e : errors) text += "\n" + e;
            throw Error(Errc::load_check_failed, text);
        }
    } catch (const Error& e) {
        if (e.code() == Errc::load_timeout) throw Error(Errc::load_check_failed, "page never finished loading");
        throw;
    }
}

RoundStats effective_round_stats(const std::vector<TaskRunRecord>& records, bool sample_std) {
    if (records.empty()) throw Error(Errc::empty_input, "no task records");
    std::vector<double> v;
    int early = 0;
    for (const auto& r : records) {
        v.push_back(r.effective_rounds);
        if (r.termination == Termination::early_complete) ++early;
    }
    const double n = static_cast<double>(v.size());
    RoundStats s;
    for (double x : v) s.mean += x;
    s.mean /= n;
    std::sort(v.begin(), v.end());
    const auto mid = v.size() / 2;
    s.median = v.size() % 2 ? v[mid] : (v[mid - 1] + v[mid]) / 2.0;
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    const double denom = sample_std ? n - 1.0 : n;
    s.std = denom > 0 ? std::sqrt(ss / denom) : 0.0;
    s.early_fraction = early / n;
    return s;
}

TaskRunRecord run_task(const arena::GameTask& task, const LoopConfig& config, const LoopBackends& backends,
                       memory::MemoryStore& store, const fs::path& runs_dir) {
    validate(config);
    if (!backends.game) throw Error(Errc::config_error, "no game-agent backend");
    const bool plays = config.mode == RunMode::play2code || config.mode == RunMode::human_playtester;
    if (config.mode == RunMode::play2code && !backends.gui) throw Error(Errc::config_error, "no GUI backend");
    if (config.mode == RunMode::human_playtester && !backends.human) {
        throw Error(Errc::config_error, "human_playtester mode needs the UI endpoint");
    }
    if (plays && !backends.browser) throw Error(Errc::config_error, "this mode needs a browser");

    const auto task_dir = runs_dir / task.id;
    fs::remove_all(task_dir);
    fs::create_directories(task_dir);

    TaskRunRecord rec;
    rec.task_id = task.id;
    rec.genre = task.genre;
    rec.config = config;
    const std::string archetype(arena::to_string(task.genre));

    std::optional<fs::path> prior_build;
    std::optional<report::PlayReport> last_report;
    bool terminated = false;

    for (int round = 1; round <= config.effective_r_max() && !terminated; ++round) {
        const auto round_dir = task_dir / std::to_string(round);
        RoundRecord rr;
        rr.round = round;
        rr.build_ref = std::to_string(round) + "/build";
        try {
            agent::GameRoundInput in;
            in.task = &task;
            in.round = round;
            in.round_dir = round_dir;
            in.prior_build = prior_build;
            in.report = last_report;
            in.memory = memory_view(store, memory::Owner::game_agent, task, config.memory_ablation);
            in.phases = game_phases(config.mode, round);
            in.max_repairs = config.max_repairs;
            in.allow_shell = config.allow_shell;
            browser::Browser* check_browser = plays ? backends.browser : nullptr;
            in.verify = [&](const arena::GameBuild& b) -> std::optional<std::string> {
                try {
                    verify_build(b, config, check_browser);
                    return std::nullopt;
                } catch (const Error& e) {
                    if (e.code() != Errc::verify_command_failed && e.code() != Errc::load_check_failed) throw;
                    return std::string(playforge::to_string(e.code())) + ": " + e.what();
                }
            };

            const auto game = agent::run_game_agent_round(*backends.game, in);
            rr.verify = {game.verified, game.verify_errors, game.repairs};
            rr.memory_writes = save_allowed(store, game.memory_writes, config.memory_ablation);
            if (game.verified) rec.final_build = rr.build_ref;

            switch (config.mode) {
            case RunMode::direct: break;
            case RunMode::no_gui_self_verify:
                rr.report = game.self_report;
                rr.report_source = "self_review";
                break;
            case RunMode::play2code: {
                agent::GuiSessionSpec spec;
                spec.mode = agent::GuiMode::playtester;
                spec.session_id = task.id + "/" + std::to_string(round) + "/playtester";
                spec.task_id = task.id;
                spec.archetype = archetype;
                spec.prompt = task.prompt;
                spec.guide = game.guide;
                spec.memory = memory_view(store, memory::Owner::gui_player, task, config.memory_ablation);
                spec.round_dir = round_dir;
                spec.round = round;
                const auto build = game.build;
                auto open = [&]() -> std::unique_ptr<browser::ActionSurface> {
                    browser::SessionOptions opts;
                    if (config.archive_frames) opts.frames_dir = round_dir / "frames";
                    return std::make_unique<browser::BuildSession>(*backends.browser, build, config.viewport,
                                                                   config.play_budget, opts);
                };
                auto gui = agent::run_gui_session(*backends.gui, open, spec);
                rr.report = std::move(gui.report);
                rr.report_source = "gui";
                rr.retry_violation = gui.log.retry_violation;
                rr.memory_writes += save_allowed(store, gui.memory_writes, config.memory_ablation);
                break;
            }
            case RunMode::human_playtester: {
                HumanRequest req{task.id, round, game.build, task.prompt, game.guide, config.human_budget};
                rr.report = backends.human->await_report(req);
                rr.report_source = "human";
                if (!rr.report) throw Error(Errc::fatal_error, "no human report before the budget ran out");
                break;
            }
            }
            if (rr.report) {
                std::ofstream(round_dir / "report.md") << report::render_report(*rr.report);
            }

            if (backends.judge) {
                rr.verdicts = backends.judge(task, game.build, round, round_dir);
                rr.score = arena::rubric_score(rr.verdicts, task.rubric);
            }

            prior_build = game.build.root;
            last_report = rr.report;
            rec.rounds.push_back(rr);
            if (rr.report && should_terminate(*rr.report)) {
                rec.termination = Termination::early_complete;
                terminated = true;
            }
        } catch (const Error& e) {
            if (e.code() == Errc::config_error) throw;
            rec.rounds.push_back(rr);
            rec.termination = Termination::fatal_error;
            rec.error = std::string(playforge::to_string(e.code())) + ": " + e.what();
            terminated = true;
        }
        rec.effective_rounds = static_cast<int>(rec.rounds.size());
        persist(rec, task_dir);
    }
    if (!terminated) rec.termination = Termination::r_max_reached;
    rec.effective_rounds = static_cast<int>(rec.rounds.size());
    persist(rec, task_dir);
    return rec;
}

}  // namespace playforge::loop
