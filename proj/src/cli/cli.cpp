#include "playforge/cli/cli.hpp"

#include <atomic>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "playforge/agent/http_backend.hpp"
#include "playforge/agent/scripted.hpp"
#include "playforge/arena/task_io.hpp"
#include "playforge/error.hpp"
#include "playforge/eval/harness.hpp"
#include "playforge/loop/loop.hpp"
#include "playforge/serve/hub.hpp"

namespace playforge::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Options {
    std::string tasks_dir = "tasks";
    std::string runs_dir = "runs";
    std::string memory_dir;  // <runs>/memory when empty
    std::vector<std::string> task_ids;
    std::string mode = "play2code";
    int r_max = 5;
    std::string ablation = "full";
    std::string backend = "scripted";
    int parallel = 1;
    std::string viewport = "1280x720";
    std::optional<long> budget_ms;
    int max_steps = 400;
    int ui_port = 8787;
    std::string verify_cmd;
    bool judge = false;
    bool allow_shell = false;
    std::string fixtures = PLAYFORGE_FIXTURES_DIR;
    std::string api_base;
    std::string model;
    // bench
    std::string levels_dir;
    int episodes = 5;
    std::vector<int> ks = {1, 5};
    // memory
    std::string layer;
    std::string requester;
    std::string archetype;
};

// Serializes writes to the shared output streams across workers.
class Printer {
public:
    Printer(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}
    void line(const std::string& s) {
        std::lock_guard lock(m_);
        out_ << s << '\n' << std::flush;
    }
    void warn(const std::string& s) {
        std::lock_guard lock(m_);
        err_ << s << '\n' << std::flush;
    }
    std::ostream& out() { return out_; }

private:
    std::ostream& out_;
    std::ostream& err_;
    std::mutex m_;
};

Error config(const std::string& message) { return Error(Errc::config_error, message); }

fs::path memory_dir(const Options& o) {
    return o.memory_dir.empty() ? fs::path(o.runs_dir) / "memory" : fs::path(o.memory_dir);
}

browser::Viewport parse_viewport(const std::string& text) {
    const auto x = text.find('x');
    try {
        if (x != std::string::npos) {
            browser::Viewport v{std::stoi(text.substr(0, x)), std::stoi(text.substr(x + 1))};
            if (v.width > 0 && v.height > 0) return v;
        }
    } catch (const std::exception&) {
    }
    throw config("viewport must look like 1280x720, got '" + text + "'");
}

std::vector<arena::GameTask> select_tasks(const Options& o) {
    if (!fs::is_directory(o.tasks_dir)) throw config("tasks directory not found: " + o.tasks_dir);
    auto all = arena::load_task_pack(o.tasks_dir);
    if (o.task_ids.empty()) return all;
    std::vector<arena::GameTask> picked;
    for (const auto& id : o.task_ids) {
        const auto it = std::find_if(all.begin(), all.end(), [&](const auto& t) { return t.id == id; });
        if (it == all.end()) throw config("no task '" + id + "' in " + o.tasks_dir);
        picked.push_back(*it);
    }
    return picked;
}

loop::LoopConfig loop_config(const Options& o) {
    loop::LoopConfig c;
    const auto mode = loop::parse_run_mode(o.mode);
    if (!mode) throw config("unknown mode '" + o.mode + "'");
    c.mode = *mode;
    c.r_max = o.r_max;
    const auto ablation = memory::parse_ablation(o.ablation);
    if (!ablation) throw config("unknown ablation '" + o.ablation + "'");
    c.memory_ablation = *ablation;
    if (!o.verify_cmd.empty()) c.verify_command = o.verify_cmd;
    c.viewport = parse_viewport(o.viewport);
    c.play_budget.max_steps = o.max_steps;
    if (o.budget_ms) {
        c.play_budget.wall_clock_limit = std::chrono::milliseconds(*o.budget_ms);
        c.human_budget = std::chrono::milliseconds(*o.budget_ms);
    }
    c.allow_shell = o.allow_shell;
    loop::validate(c);
    return c;
}

struct Backends {
    std::unique_ptr<agent::ModelBackend> game;
    std::unique_ptr<agent::ModelBackend> gui;
};

Backends make_backends(const Options& o) {
    Backends b;
    if (o.backend == "scripted") {
        if (!fs::is_directory(fs::path(o.fixtures) / "builds")) {
            throw config("scripted backend needs fixture builds under " + o.fixtures);
        }
        b.game = std::make_unique<agent::ScriptedGameBackend>(agent::ScriptedGameBackend::standard(o.fixtures));
        b.gui = std::make_unique<agent::ScriptedGuiBackend>();
    } else if (o.backend == "http") {
        auto c = agent::HttpBackendConfig::from_env();
        if (!o.api_base.empty()) c.base_url = o.api_base;
        if (!o.model.empty()) c.model = o.model;
        b.game = std::make_unique<agent::HttpBackend>(c);
        b.gui = std::make_unique<agent::HttpBackend>(c);
    } else {
        throw config("unknown backend '" + o.backend + "' (scripted or http)");
    }
    return b;
}

// Runs fn(i) for i in [0, n) on at most `parallel` threads. The first
// exception stops the remaining work and is rethrown after every thread joins.
void for_each_parallel(std::size_t n, int parallel, const std::function<void(std::size_t)>& fn) {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    const auto worker = [&] {
        for (std::size_t i; (i = next++) < n;) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = n;
            }
        }
    };
    std::vector<std::thread> threads;
    const auto extra = std::min<std::size_t>(static_cast<std::size_t>(std::max(parallel, 1)), n);
    for (std::size_t t = 1; t < extra; ++t) threads.emplace_back(worker);
    worker();
    for (auto& t : threads) t.join();
    if (failure) std::rethrow_exception(failure);
}

// "3/build" -> round 3.
int round_of(const std::string& build_ref) {
    try {
        return std::max(1, std::stoi(build_ref));
    } catch (const std::exception&) {
        return 1;
    }
}

std::string fixed(double v, int digits) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(digits) << v;
    return s.str();
}

void write_file(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    arena::write_text_file(path, text);
}

agent::GameGuide guide_of(const arena::GameBuild& build) {
    const auto file = build.root / "GAME_GUIDE.md";
    if (fs::exists(file)) {
        try {
            return agent::parse_guide(arena::read_text_file(file));
        } catch (const Error&) {
        }
    }
    return {"Not documented.", "Not documented.", "Not documented."};
}

// Runs the selected tasks through the loop; returns kFatal when any run ended fatally.
int run_tasks(const Options& o, const std::vector<arena::GameTask>& tasks, loop::HumanChannel* human,
              Printer& print) {
    const auto cfg = loop_config(o);
    if (cfg.mode == loop::RunMode::human_playtester && !human) throw config("human_playtester mode needs the UI");
    make_backends(o);  // fail fast on backend configuration
    fs::create_directories(o.runs_dir);
    memory::MemoryStore store(memory_dir(o));
    const bool plays = cfg.mode == loop::RunMode::play2code || cfg.mode == loop::RunMode::human_playtester || o.judge;
    browser::LazyBrowser lazy;
    browser::Browser* browser = plays ? &lazy.get() : nullptr;

    std::atomic<bool> fatal{false};
    for_each_parallel(tasks.size(), o.parallel, [&](std::size_t i) {
        const auto& task = tasks[i];
        auto bk = make_backends(o);
        loop::RoundJudge judge;
        if (o.judge) {
            judge = [&, gui = bk.gui.get()](const arena::GameTask& t, const arena::GameBuild& build, int round,
                                            const fs::path& dir) {
                eval::AdjudicateOptions opts;
                opts.dir = dir / "judge";
                opts.viewport = cfg.viewport;
                opts.session_id = t.id + "/" + std::to_string(round) + "/judge";
                return eval::adjudicate(t, build, *gui, *browser, opts).verdicts;
            };
        }
        const bool gui_side = cfg.mode == loop::RunMode::play2code;
        loop::LoopBackends b{bk.game.get(), gui_side ? bk.gui.get() : nullptr, human, browser, judge};
        const auto rec = loop::run_task(task, cfg, b, store, o.runs_dir);
        std::string line = task.id + ": " + std::string(loop::to_string(rec.termination)) + " after " +
                           std::to_string(rec.effective_rounds) + " round" + (rec.effective_rounds == 1 ? "" : "s");
        if (!rec.rounds.empty() && rec.rounds.back().score) line += ", score " + fixed(rec.rounds.back().score->value, 3);
        if (!rec.error.empty()) line += " (" + rec.error + ")";
        print.line(line);
        if (rec.termination == loop::Termination::fatal_error) fatal = true;
    });
    return fatal ? kFatal : kOk;
}

std::vector<loop::TaskRunRecord> read_records(const fs::path& runs) {
    std::vector<loop::TaskRunRecord> out;
    if (fs::is_directory(runs)) {
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(runs)) {
            if (e.is_directory() && fs::exists(e.path() / "record.json")) files.push_back(e.path() / "record.json");
        }
        std::sort(files.begin(), files.end());
        for (const auto& f : files) out.push_back(loop::load_record(f));
    }
    if (out.empty()) throw Error(Errc::no_records, "no run records under " + runs.string());
    return out;
}

// Prints round statistics, the genre table, tiers and categories, and
// writes summary.json plus genre_table.csv into `dir`.
void tables(const std::vector<loop::TaskRunRecord>& records, const std::vector<eval::TaskScore>& scored,
            const fs::path& dir, Printer& print) {
    json summary;
    const auto rs = loop::effective_round_stats(records);
    print.line("Effective rounds (n=" + std::to_string(records.size()) + "): mean " + fixed(rs.mean, 2) +
               ", median " + fixed(rs.median, 2) + ", std " + fixed(rs.std, 2) + ", early " +
               fixed(100.0 * rs.early_fraction, 1) + "%");
    summary["effective_rounds"] = {{"tasks", records.size()},
                                   {"mean", rs.mean},
                                   {"median", rs.median},
                                   {"std", rs.std},
                                   {"early_fraction", rs.early_fraction}};

    std::map<eval::ComplexityTier, int> tiers;
    json tier_of = json::object();
    for (const auto& r : records) {
        const auto t = eval::trajectory_of(r);
        if (t.scores.size() < 2) continue;
        const auto tier = eval::tier_assign(t);
        ++tiers[tier];
        tier_of[r.task_id] = {{"tier", eval::to_string(tier)}, {"delta", eval::trajectory_delta(t)}};
    }
    std::string tier_line = "Tiers:";
    for (auto t : {eval::ComplexityTier::high, eval::ComplexityTier::moderate, eval::ComplexityTier::low}) {
        tier_line += " " + std::string(eval::to_string(t)) + " " + std::to_string(tiers[t]);
    }
    print.line(tier_line);
    summary["tiers"] = tier_of;

    if (scored.empty()) {
        print.line("No scored rounds; run with --judge or use eval for the genre table.");
    } else {
        const auto agg = eval::aggregate_scores(scored);
        const auto csv = eval::genre_table_csv(agg);
        print.line(csv.substr(0, csv.size() - 1));
        std::string cats = "Categories (" + std::to_string(agg.findings) + " findings):";
        for (auto c : eval::kCategoryOrder) {
            cats += " " + std::string(report::to_string(c)) + " " + fixed(100.0 * agg.categories.at(c), 1) + "%";
        }
        print.line(cats);
        summary["aggregate"] = eval::to_json(agg);
        write_file(dir / "genre_table.csv", csv);
    }
    write_file(dir / "summary.json", summary.dump(2) + "\n");
}

int eval_runs(const Options& o, Printer& print) {
    const auto tasks = select_tasks(o);
    std::vector<const arena::GameTask*> with_record;
    for (const auto& t : tasks) {
        if (fs::exists(fs::path(o.runs_dir) / t.id / "record.json")) with_record.push_back(&t);
    }
    if (with_record.empty()) throw Error(Errc::no_records, "no run records under " + o.runs_dir);
    const auto viewport = parse_viewport(o.viewport);
    make_backends(o);
    browser::LazyBrowser lazy;

    std::vector<eval::TaskScore> scored(with_record.size());
    std::vector<json> rows(with_record.size());
    std::vector<loop::TaskRunRecord> records(with_record.size());
    std::atomic<bool> fatal{false};
    for_each_parallel(with_record.size(), o.parallel, [&](std::size_t i) {
        const auto& task = *with_record[i];
        const auto task_dir = fs::path(o.runs_dir) / task.id;
        records[i] = loop::load_record(task_dir / "record.json");
        const auto& rec = records[i];
        std::vector<arena::Verdict> verdicts;
        try {
            if (!rec.final_build.empty()) {
                auto bk = make_backends(o);
                arena::GameBuild build{task_dir / rec.final_build, "index.html", round_of(rec.final_build)};
                eval::AdjudicateOptions opts;
                opts.dir = task_dir / "eval";
                opts.viewport = viewport;
                verdicts = eval::adjudicate(task, build, *bk.gui, lazy.get(), opts).verdicts;
            } else {
                // Nothing verified to judge: every criterion fails.
                for (const auto& c : task.rubric.criteria) verdicts.push_back({c.id, false, {}});
            }
        } catch (const Error& e) {
            print.warn(task.id + ": evaluation failed: " + e.what());
            fatal = true;
            return;
        }
        const auto score = arena::rubric_score(verdicts, task.rubric);
        scored[i] = {task.id, task.genre, score.value, rec};
        rows[i] = {{"task_id", task.id},
                   {"genre", arena::to_string(task.genre)},
                   {"score", score},
                   {"verdicts", verdicts},
                   {"termination", loop::to_string(rec.termination)},
                   {"effective_rounds", rec.effective_rounds},
                   {"final_build", rec.final_build}};
        print.line(task.id + ": " + std::to_string(score.passed) + "/" + std::to_string(score.total) + " (" +
                   fixed(score.value, 3) + ")");
    });
    if (fatal) return kFatal;

    json results = json::array();
    for (auto& r : rows) results.push_back(std::move(r));
    const auto dir = fs::path(o.runs_dir) / "eval";
    write_file(dir / "results.json", json{{"tasks", results}}.dump(2) + "\n");
    tables(records, scored, dir, print);
    return kOk;
}

int feasibility(const Options& o, Printer& print) {
    if (!fs::is_directory(o.levels_dir)) throw config("levels directory not found: " + o.levels_dir);
    for (int k : o.ks) {
        if (k < 1 || k > o.episodes) throw config("every k must lie in 1.." + std::to_string(o.episodes));
    }
    std::vector<eval::FeasibilityLevel> levels;
    std::vector<fs::path> dirs;
    for (const auto& e : fs::directory_iterator(o.levels_dir)) {
        if (e.is_directory() && fs::exists(e.path() / "level.json")) dirs.push_back(e.path());
    }
    std::sort(dirs.begin(), dirs.end());
    for (const auto& d : dirs) {
        const auto j = json::parse(arena::read_text_file(d / "level.json"));
        eval::FeasibilityLevel level;
        level.level_id = d.filename().string();
        level.build = {fs::weakly_canonical(d / j.at("build").get<std::string>()), j.value("entry", "index.html"), 1};
        level.guide = guide_of(level.build);
        level.completion_condition = j.at("completion_condition").get<std::string>();
        levels.push_back(std::move(level));
    }
    if (levels.empty()) throw config("no levels under " + o.levels_dir);
    make_backends(o);
    browser::LazyBrowser lazy;
    browser::SessionBudget budget = browser::SessionBudget::feasibility();
    if (o.budget_ms) budget.wall_clock_limit = std::chrono::milliseconds(*o.budget_ms);
    budget.max_steps = o.max_steps;

    std::vector<eval::LevelRecord> records(levels.size());
    std::vector<json> rows(levels.size());
    std::string label;
    for_each_parallel(levels.size(), o.parallel, [&](std::size_t i) {
        auto bk = make_backends(o);
        std::vector<agent::EpisodeOutcome> outcomes;
        records[i] = eval::run_feasibility(levels[i], o.episodes, *bk.gui, lazy.get(), budget, &outcomes);
        json eps = json::array();
        for (const auto& e : outcomes) eps.push_back({{"passed", e.passed}, {"end", agent::to_string(e.end)}});
        rows[i] = {{"level_id", levels[i].level_id}, {"n", records[i].n}, {"c", records[i].c}, {"episodes", eps}};
        print.line(levels[i].level_id + ": " + std::to_string(records[i].c) + "/" + std::to_string(records[i].n) +
                   " episodes passed");
        if (i == 0) label = bk.gui->label();
    });
    const auto table = eval::pass_at_k_suite(records, o.ks);
    const auto csv = eval::pass_at_k_csv({{label, table}});
    print.line(csv.substr(0, csv.size() - 1));
    const auto dir = fs::path(o.runs_dir) / "eval";
    write_file(dir / "pass_at_k.csv", csv);
    json levels_json = json::array();
    for (auto& r : rows) levels_json.push_back(std::move(r));
    write_file(dir / "feasibility.json", json{{"levels", levels_json}, {"agent", label}}.dump(2) + "\n");
    return kOk;
}

int stats(const Options& o, Printer& print) {
    const fs::path runs(o.runs_dir);
    const auto records = read_records(runs);
    std::map<std::string, double> evaluated;
    if (fs::exists(runs / "eval" / "results.json")) {
        for (const auto& r : json::parse(arena::read_text_file(runs / "eval" / "results.json")).at("tasks")) {
            evaluated[r.at("task_id").get<std::string>()] = r.at("score").at("value").get<double>();
        }
    }
    std::vector<eval::TaskScore> scored;
    for (const auto& r : records) {
        std::optional<double> score;
        if (const auto it = evaluated.find(r.task_id); it != evaluated.end()) {
            score = it->second;
        } else {
            const auto t = eval::trajectory_of(r);
            if (!t.scores.empty()) score = t.scores.back();
        }
        if (score) scored.push_back({r.task_id, r.genre, *score, r});
    }
    tables(records, scored, runs / "stats", print);
    return kOk;
}

int serve(const Options& o, Printer& print) {
    const auto tasks = select_tasks(o);
    serve::Hub hub(o.ui_port);
    print.line("listening on " + hub.base_url());
    hub.on_session([&](const std::string& id) { print.line("session open: " + hub.base_url() + "/session/" + id); });

    if (!o.judge) {
        auto opts = o;
        opts.mode = "human_playtester";
        return run_tasks(opts, tasks, &hub, print);
    }

    // Human judge validation over the final builds of an earlier run.
    const auto budget = std::chrono::milliseconds(o.budget_ms.value_or(600000));
    std::vector<std::pair<const arena::GameTask*, std::string>> open;
    for (const auto& t : tasks) {
        const auto dir = fs::path(o.runs_dir) / t.id;
        if (!fs::exists(dir / "record.json")) continue;
        const auto rec = loop::load_record(dir / "record.json");
        if (rec.final_build.empty()) continue;
        open.emplace_back(&t, hub.open_judge_session(t, {dir / rec.final_build, "index.html", round_of(rec.final_build)}, budget));
    }
    if (open.empty()) throw Error(Errc::no_records, "no verified builds to judge under " + o.runs_dir);
    for (const auto& [task, id] : open) {
        const auto verdicts = hub.await_verdicts(id);
        if (!verdicts) {
            print.warn(task->id + ": judge session expired");
            continue;
        }
        const auto score = arena::rubric_score(*verdicts, task->rubric);
        write_file(fs::path(o.runs_dir) / task->id / "eval" / "human_verdicts.json",
                   json{{"task_id", task->id}, {"verdicts", *verdicts}, {"score", score}}.dump(2) + "\n");
        print.line(task->id + ": human judge " + fixed(score.value, 3));
    }
    return kOk;
}

int memory_cmd(const Options& o, const std::string& action, Printer& print) {
    memory::MemoryStore store(memory_dir(o));
    if (action == "compact") {
        print.line("removed " + std::to_string(store.compact()) + " duplicate entries");
        return kOk;
    }
    std::vector<memory::MemoryEntry> entries;
    if (action == "query") {
        const auto who = memory::parse_owner(o.requester);
        if (!who || *who == memory::Owner::shared) throw config("--requester must be game-agent or gui-player");
        if (o.task_ids.size() != 1) throw config("query needs exactly one --task");
        const auto ablation = memory::parse_ablation(o.ablation);
        if (!ablation) throw config("unknown ablation '" + o.ablation + "'");
        memory::MemoryQuery q{*who, std::nullopt, o.task_ids.front(), memory::ablation_view(*ablation)};
        if (!o.archetype.empty()) q.archetype = o.archetype;
        entries = store.visible(q);
    } else {
        std::optional<memory::Layer> layer;
        if (!o.layer.empty()) {
            layer = memory::parse_layer(o.layer);
            if (!layer) throw config("unknown layer '" + o.layer + "'");
        }
        for (auto& e : store.all()) {
            if (layer && e.layer != *layer) continue;
            if (!o.task_ids.empty() &&
                std::find(o.task_ids.begin(), o.task_ids.end(), e.task_id) == o.task_ids.end()) {
                continue;
            }
            entries.push_back(std::move(e));
        }
    }
    for (const auto& e : entries) print.line(json(e).dump());
    return kOk;
}

int exit_code_for(Errc code) {
    switch (code) {
    case Errc::config_error:
    case Errc::no_records:
    case Errc::missing_file:
    case Errc::malformed_task:
    case Errc::malformed_rubric:
    case Errc::empty_prompt:
    case Errc::empty_corpus: return kConfigError;
    default: return kFatal;
    }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"Continual game generation with play-driven repair, plus its evaluation harness."};
    app.set_config("--config", "", "TOML or INI file with option defaults");
    app.require_subcommand(1);

    const auto paths = [&o](CLI::App* c) {
        c->add_option("--tasks", o.tasks_dir, "Task pack directory")->capture_default_str();
        c->add_option("--runs", o.runs_dir, "Runs directory")->capture_default_str();
        c->add_option("--memory", o.memory_dir, "Memory store directory (default <runs>/memory)");
        c->add_option("--task", o.task_ids, "Task id; repeatable (default: every task)");
    };
    const auto backend = [&o](CLI::App* c) {
        c->add_option("--backend", o.backend, "scripted or http")->capture_default_str();
        c->add_option("--api-base", o.api_base, "Chat-completions base URL (http backend)");
        c->add_option("--model", o.model, "Model name (http backend)");
        c->add_option("--fixtures", o.fixtures, "Fixture directory for the scripted backend")->capture_default_str();
        c->add_option("--parallel", o.parallel, "Tasks run at once")->check(CLI::PositiveNumber)->capture_default_str();
        c->add_option("--viewport", o.viewport, "Browser viewport WxH")->capture_default_str();
        c->add_option("--budget-ms", o.budget_ms, "Session wall-clock budget");
        c->add_option("--max-steps", o.max_steps, "Session step budget")->capture_default_str();
    };
    const auto loop_opts = [&o](CLI::App* c) {
        c->add_option("--mode", o.mode, "direct, no_gui_self_verify, play2code or human_playtester")
            ->capture_default_str();
        c->add_option("--r-max", o.r_max, "Round cap")->capture_default_str();
        c->add_option("--ablation", o.ablation, "none, episode_only, episode_skill or full")->capture_default_str();
        c->add_option("--verify-cmd", o.verify_cmd, "Command run in each build directory before play");
        c->add_option("--ui-port", o.ui_port, "Port for the human playtester endpoints")->capture_default_str();
        c->add_flag("--judge", o.judge, "Score every round with the evaluator");
        c->add_flag("--allow-shell", o.allow_shell, "Offer the game agent a shell tool");
    };

    auto* run_cmd = app.add_subcommand("run", "Run tasks through the generation loop");
    paths(run_cmd);
    backend(run_cmd);
    loop_opts(run_cmd);

    auto* eval_cmd = app.add_subcommand("eval", "Judge the final builds of a runs directory");
    paths(eval_cmd);
    backend(eval_cmd);

    auto* bench_cmd = app.add_subcommand("bench", "Run, then evaluate; optionally the feasibility suite");
    paths(bench_cmd);
    backend(bench_cmd);
    loop_opts(bench_cmd);
    bench_cmd->add_option("--levels", o.levels_dir, "Feasibility level directory");
    bench_cmd->add_option("--episodes", o.episodes, "Episodes per level")->capture_default_str();
    bench_cmd->add_option("--k", o.ks, "k values for pass@k")->delimiter(',');

    auto* stats_cmd = app.add_subcommand("stats", "Summarize a runs directory");
    stats_cmd->add_option("--runs", o.runs_dir, "Runs directory")->capture_default_str();

    auto* serve_cmd = app.add_subcommand("serve", "Host builds and the human playtester/judge endpoints");
    paths(serve_cmd);
    backend(serve_cmd);
    loop_opts(serve_cmd);

    std::string memory_action = "list";
    auto* memory_cmd_app = app.add_subcommand("memory", "Inspect the memory store");
    memory_cmd_app->add_option("action", memory_action, "list, query or compact")
        ->check(CLI::IsMember({"list", "query", "compact"}))
        ->capture_default_str();
    memory_cmd_app->add_option("--runs", o.runs_dir, "Runs directory")->capture_default_str();
    memory_cmd_app->add_option("--memory", o.memory_dir, "Memory store directory (default <runs>/memory)");
    memory_cmd_app->add_option("--task", o.task_ids, "Task id filter");
    memory_cmd_app->add_option("--layer", o.layer, "episode-shared, skill or world");
    memory_cmd_app->add_option("--requester", o.requester, "game-agent or gui-player (query)");
    memory_cmd_app->add_option("--archetype", o.archetype, "Archetype filter (query)");
    memory_cmd_app->add_option("--ablation", o.ablation, "Layer subset (query)")->capture_default_str();

    std::vector<std::string> argv(args.rbegin(), args.rend());
    try {
        app.parse(argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << e.what() << '\n';
        return kConfigError;
    }

    Printer print(out, err);
    try {
        if (*run_cmd) {
            const auto tasks = select_tasks(o);
            if (loop_config(o).mode == loop::RunMode::human_playtester) {
                serve::Hub hub(o.ui_port);
                print.line("listening on " + hub.base_url());
                hub.on_session(
                    [&](const std::string& id) { print.line("session open: " + hub.base_url() + "/session/" + id); });
                return run_tasks(o, tasks, &hub, print);
            }
            return run_tasks(o, tasks, nullptr, print);
        }
        if (*eval_cmd) return eval_runs(o, print);
        if (*bench_cmd) {
            int code = run_tasks(o, select_tasks(o), nullptr, print);
            code = std::max(code, eval_runs(o, print));
            if (!o.levels_dir.empty()) code = std::max(code, feasibility(o, print));
            return code;
        }
        if (*stats_cmd) return stats(o, print);
        if (*serve_cmd) return serve(o, print);
        if (*memory_cmd_app) return memory_cmd(o, memory_action, print);
    } catch (const Error& e) {
        print.warn("error: " + std::string(e.what()));
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        print.warn("error: " + std::string(e.what()));
        return kFatal;
    }
    return kConfigError;
}

}  // namespace playforge::cli
