#include <fstream>
#include <sstream>

#include "doctest.h"
#include "playforge/agent/game_agent.hpp"
#include "playforge/agent/gui_agent.hpp"
#include "playforge/agent/scripted.hpp"
#include "playforge/arena/task_io.hpp"
#include "playforge/browser/image.hpp"
#include "playforge/browser/session.hpp"
#include "playforge/error.hpp"
#include "support/browser_env.hpp"

using namespace playforge;
using namespace playforge::agent;
using playforge::testing::fixture_build;
using playforge::testing::fixtures_dir;
using playforge::testing::shared_browser;
using playforge::testing::TempDir;

namespace {

arena::GameTask snake_task() { return arena::parse_task(fixtures_dir() / "tasks" / "snake-basic"); }

GameGuide snake_guide() {
    return parse_guide(arena::read_text_file(fixtures_dir() / "builds" / "snake-working" / "GAME_GUIDE.md"));
}

SessionOpener opener(const std::string& build, browser::SessionBudget budget = {}) {
    return [build, budget]() -> std::unique_ptr<browser::ActionSurface> {
        browser::SessionOptions opts;
        opts.load_timeout = std::chrono::milliseconds(1500);
        return std::make_unique<browser::BuildSession>(shared_browser(), fixture_build(build), browser::Viewport{},
                                                       budget, opts);
    };
}

GuiSessionSpec spec_for(GuiMode mode, const arena::GameTask& task, std::optional<std::filesystem::path> dir = {}) {
    GuiSessionSpec s;
    s.mode = mode;
    s.session_id = task.id + "/1/" + std::string(to_string(mode));
    s.task_id = task.id;
    s.archetype = std::string(arena::to_string(task.genre));
    s.prompt = task.prompt;
    s.guide = snake_guide();
    if (mode == GuiMode::evaluator) s.rubric = &task.rubric;
    s.round_dir = std::move(dir);
    return s;
}

std::map<std::string, arena::Verdict> by_id(const std::vector<arena::Verdict>& v) {
    std::map<std::string, arena::Verdict> out;
    for (const auto& x : v) out[x.criterion_id] = x;
    return out;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Errc code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an Error");
    return Errc::fatal_error;
}

// Records what the agent saw and every action it issued.
class RecordingBackend final : public ModelBackend {
public:
    explicit RecordingBackend(ModelBackend& inner) : inner_(inner) {}
    std::string label() const override { return "recording"; }
    BackendReply complete(const BackendRequest& r) override {
        for (const auto& m : *r.transcript) seen_ += m.text + "\n";
        return inner_.complete(r);
    }
    std::string seen_;

private:
    ModelBackend& inner_;
};

class Throwing final : public ModelBackend {
public:
    std::string label() const override { return "throwing"; }
    BackendReply complete(const BackendRequest&) override {
        FAIL("backend must not be called");
        return TerminalDocument{};
    }
};

// Wraps a surface and logs each action the driver executes.
class LoggingSurface final : public browser::ActionSurface {
public:
    LoggingSurface(std::unique_ptr<browser::ActionSurface> inner, std::vector<browser::GuiAction>& log)
        : inner_(std::move(inner)), log_(log) {}
    browser::ActionResult perform(const browser::GuiAction& a) override {
        log_.push_back(a);
        return inner_->perform(a);
    }
    browser::Screenshot screenshot() override { return inner_->screenshot(); }
    browser::Viewport viewport() const override { return inner_->viewport(); }
    int step_index() const override { return inner_->step_index(); }

private:
    std::unique_ptr<browser::ActionSurface> inner_;
    std::vector<browser::GuiAction>& log_;
};

// A surface whose screen is one flat colour.
class BlankSurface final : public browser::ActionSurface {
public:
    browser::ActionResult perform(const browser::GuiAction&) override {
        ++step_;
        return browser::ActionResult::ok;
    }
    browser::Screenshot screenshot() override {
        browser::Image img{64, 64, std::vector<std::uint8_t>(64 * 64 * 3, 255)};
        return {img, browser::encode_png(img), 0, step_};
    }
    browser::Viewport viewport() const override { return {64, 64}; }
    int step_index() const override { return step_; }

private:
    int step_ = 0;
};

// Replays a fixed list of replies.
class Canned final : public ModelBackend {
public:
    explicit Canned(std::vector<BackendReply> replies) : replies_(std::move(replies)) {}
    std::string label() const override { return "canned"; }
    BackendReply complete(const BackendRequest&) override {
        REQUIRE(next_ < replies_.size());
        return replies_[next_++];
    }

private:
    std::vector<BackendReply> replies_;
    std::size_t next_ = 0;
};

}  // namespace

TEST_CASE("scripted evaluator passes all six criteria on the working snake") {
    const auto task = snake_task();
    ScriptedGuiBackend gui;
    const auto out = run_gui_session(gui, opener("snake-working"), spec_for(GuiMode::evaluator, task));
    REQUIRE(out.verdicts);
    REQUIRE(out.verdicts->size() == 6);
    for (const auto& v : *out.verdicts) {
        CHECK_MESSAGE(v.passed, v.criterion_id);
        CHECK_FALSE(v.evidence.empty());
    }
    CHECK(arena::rubric_score(*out.verdicts, task.rubric).value == 1.0);
}

TEST_CASE("scripted evaluator on the broken-input snake passes only what needs no input") {
    const auto task = snake_task();
    ScriptedGuiBackend gui;
    const auto out = run_gui_session(gui, opener("snake-broken-input"), spec_for(GuiMode::evaluator, task));
    REQUIRE(out.verdicts);
    const auto v = by_id(*out.verdicts);
    CHECK(v.at("render").passed);
    CHECK(v.at("auto-advance").passed);
    for (const char* id : {"arrow-turn", "grow", "score", "restart"}) {
        CHECK_FALSE_MESSAGE(v.at(id).passed, id);
        CHECK(v.at(id).evidence.empty());
    }
    const auto score = arena::rubric_score(*out.verdicts, task.rubric);
    CHECK(score.passed == 2);
    CHECK(score.total == 6);
}

TEST_CASE("playtester reports the dead controls and never sees the rubric") {
    const auto task = snake_task();
    ScriptedGuiBackend gui;
    RecordingBackend rec(gui);
    TempDir tmp("gui");
    const auto out =
        run_gui_session(rec, opener("snake-broken-input"), spec_for(GuiMode::playtester, task, tmp.path()));
    REQUIRE(out.report);
    CHECK(out.report->outcome == report::RunOutcome::blocked_by_bug);
    const auto fixes = report::extract_fix_list(*out.report);
    REQUIRE_FALSE(fixes.empty());
    CHECK(fixes.front().suggested_change.find("keydown handler") != std::string::npos);
    for (const auto& c : task.rubric.criteria) CHECK(rec.seen_.find(c.text) == std::string::npos);
    CHECK(rec.seen_.find("Rubric") == std::string::npos);
    CHECK(rec.seen_.find(task.prompt) != std::string::npos);
    CHECK(std::filesystem::exists(tmp / "gui_agent.jsonl"));
    CHECK(std::filesystem::exists(tmp / "play_log.json"));
    REQUIRE(out.memory_writes.size() == 1);
    CHECK(out.memory_writes[0].owner == memory::Owner::gui_player);
    CHECK(out.memory_writes[0].layer == memory::Layer::skill);
}

TEST_CASE("playtester on the working snake completes with high confidence") {
    const auto task = snake_task();
    ScriptedGuiBackend gui;
    const auto out = run_gui_session(gui, opener("snake-working"), spec_for(GuiMode::playtester, task));
    REQUIRE(out.report);
    CHECK(out.report->outcome == report::RunOutcome::completed);
    CHECK(out.report->confidence == report::Confidence::high);
    CHECK(out.report->fixes.empty());
}

TEST_CASE("every step is executed by the driver exactly once, in order") {
    const auto task = snake_task();
    ScriptedGuiBackend gui;
    std::vector<browser::GuiAction> driver_log;
    auto open = [&]() -> std::unique_ptr<browser::ActionSurface> {
        return std::make_unique<LoggingSurface>(opener("snake-working")(), driver_log);
    };
    const auto out = run_gui_session(gui, open, spec_for(GuiMode::playtester, task));
    REQUIRE(driver_log.size() == out.log.steps.size());
    for (std::size_t i = 0; i < driver_log.size(); ++i) {
        CHECK(driver_log[i] == out.log.steps[i].action);
        CHECK(out.log.steps[i].step_index == static_cast<int>(i + 1));
        CHECK_FALSE(out.log.steps[i].observation.empty());
    }
}

TEST_CASE("scripted sessions replay byte-identically") {
    const auto task = snake_task();
    TempDir a("gui-a"), b("gui-b");
    {
        ScriptedGuiBackend gui;
        run_gui_session(gui, opener("snake-working"), spec_for(GuiMode::playtester, task, a.path()));
    }
    {
        ScriptedGuiBackend gui;
        run_gui_session(gui, opener("snake-working"), spec_for(GuiMode::playtester, task, b.path()));
    }
    CHECK(slurp(a / "gui_agent.jsonl") == slurp(b / "gui_agent.jsonl"));
    CHECK(slurp(a / "play_log.json") == slurp(b / "play_log.json"));
}

TEST_CASE("a page that never loads yields could-not-start without asking the backend") {
    const auto task = snake_task();
    Throwing none;
    auto out = run_gui_session(none, opener("frozen"), spec_for(GuiMode::playtester, task));
    REQUIRE(out.report);
    CHECK(out.report->outcome == report::RunOutcome::could_not_start);
    CHECK(out.log.load_failed);

    out = run_gui_session(none, opener("frozen"), spec_for(GuiMode::evaluator, task));
    REQUIRE(out.verdicts);
    for (const auto& v : *out.verdicts) CHECK_FALSE(v.passed);

    out = run_gui_session(none, opener("frozen"), spec_for(GuiMode::feasibility, task));
    REQUIRE(out.episode);
    CHECK(*out.episode == EpisodeOutcome{false, EpisodeEnd::load_failure});
}

TEST_CASE("an unmatched opening screen is ScriptIncomplete") {
    ScriptedGuiBackend gui;
    auto open = [] { return std::make_unique<BlankSurface>(); };
    CHECK(code_of([&] { run_gui_session(gui, open, spec_for(GuiMode::playtester, snake_task())); }) ==
          Errc::script_incomplete);
}

TEST_CASE("budget exhaustion forces the outcome per mode") {
    const auto task = snake_task();
    const browser::SessionBudget tiny{std::chrono::minutes(5), 3};
    ScriptedGuiBackend gui;
    auto out = run_gui_session(gui, opener("snake-working", tiny), spec_for(GuiMode::playtester, task));
    CHECK(out.log.budget_exhausted);
    REQUIRE(out.report);
    CHECK(out.report->outcome == report::RunOutcome::blocked_by_bug);
    CHECK(out.log.steps.back().result == browser::ActionResult::budget_exceeded);

    auto spec = spec_for(GuiMode::feasibility, task);
    spec.session_id = "feasibility-budget";
    out = run_gui_session(gui, opener("snake-working", tiny), spec);
    REQUIRE(out.episode);
    CHECK(*out.episode == EpisodeOutcome{false, EpisodeEnd::timeout});
}

TEST_CASE("feasibility clears the snake level and sees no memory") {
    auto task = snake_task();
    ScriptedGuiBackend gui;
    RecordingBackend rec(gui);
    auto spec = spec_for(GuiMode::feasibility, task);
    spec.memory.push_back({"m1", memory::Layer::world, memory::Owner::shared, memory::Kind::observation, "",
                           "secret-memory-note", "", 1, 1});
    spec.level_condition = "score at least one point";
    const auto out = run_gui_session(rec, opener("snake-working"), spec);
    REQUIRE(out.episode);
    CHECK(*out.episode == EpisodeOutcome{true, EpisodeEnd::completion});
    CHECK(rec.seen_.find("secret-memory-note") == std::string::npos);

    spec.session_id = "feasibility-broken";
    const auto broken = run_gui_session(gui, opener("snake-broken-input"), spec);
    CHECK(*broken.episode == EpisodeOutcome{false, EpisodeEnd::game_over});
}

TEST_CASE("rejected actions are returned as tool errors and cost no step") {
    const auto task = snake_task();
    auto step = [](json extra) {
        extra["observation"] = "o";
        extra["reasoning"] = "r";
        return extra;
    };
    Canned backend({ToolCall{"browser_click", step({{"x", 5000}, {"y", 1}}), {}},
                    ToolCall{"browser_key", step({{"key", "F13"}}), {}},
                    ToolCall{"browser_wait", step({{"ms", 150}}), {}},
                    TerminalDocument{R"({"passed": false, "end": "game_over"})"}});
    const auto out = run_gui_session(backend, opener("snake-working"), spec_for(GuiMode::feasibility, task));
    CHECK(out.log.rejected_actions.size() == 2);
    REQUIRE(out.log.steps.size() == 1);
    CHECK(out.log.steps[0].step_index == 1);
}

TEST_CASE("evaluator documents need evidence for passes and get one correction") {
    const auto task = snake_task();
    std::vector<arena::Verdict> no_evidence;
    for (const auto& c : task.rubric.criteria) no_evidence.push_back({c.id, true, {}});
    std::vector<arena::Verdict> fixed;
    for (const auto& c : task.rubric.criteria) fixed.push_back({c.id, false, {}});
    Canned twice({TerminalDocument{render_verdicts(no_evidence)}, TerminalDocument{render_verdicts(fixed)}});
    const auto out = run_gui_session(twice, opener("snake-working"), spec_for(GuiMode::evaluator, task));
    CHECK(*out.verdicts == fixed);

    Canned bad({TerminalDocument{"not json"}, TerminalDocument{"still not"}});
    CHECK(code_of([&] { run_gui_session(bad, opener("snake-working"), spec_for(GuiMode::evaluator, task)); }) ==
          Errc::backend_failure);
}

TEST_CASE("document parsers") {
    CHECK(parse_verdicts(R"([{"criterion_id": "a", "passed": true, "evidence": [1]}])").size() == 1);
    CHECK(parse_verdicts(render_verdicts({{"a", true, {2, 3}}, {"b", false, {}}})) ==
          std::vector<arena::Verdict>{{"a", true, {2, 3}}, {"b", false, {}}});
    CHECK(code_of([] { parse_verdicts(R"([{"passed": true}])"); }) == Errc::malformed_report);
    CHECK(parse_episode(R"({"passed": true, "end": "completion"})") == EpisodeOutcome{true, EpisodeEnd::completion});
    CHECK(code_of([] { parse_episode(R"({"passed": true, "end": "game_over"})"); }) == Errc::malformed_report);
    CHECK(code_of([] { parse_episode(R"({"passed": false, "end": "timeout"})"); }) == Errc::malformed_report);
}

TEST_CASE("retry policy") {
    PlaySessionLog log;
    CHECK(retry_policy_check(log, true).has_value());
    CHECK_FALSE(retry_policy_check(log, false).has_value());
    auto add = [&](int attempt, browser::GuiAction a) {
        PlayStep s;
        s.attempt = attempt;
        s.action = a;
        log.steps.push_back(s);
    };
    add(1, browser::action::Key{"ArrowRight", 80, {}});
    add(1, browser::action::Key{"Space", 80, {}});
    add(2, browser::action::Key{"ArrowRight", 80, {}});
    add(2, browser::action::Key{"Space", 80, {}});
    CHECK(retry_policy_check(log, true).has_value());  // same sequence twice
    add(3, browser::action::Key{"Space", 300, {}});
    CHECK_FALSE(retry_policy_check(log, true).has_value());
    CHECK(is_platformer_like("platformer"));
    CHECK_FALSE(is_platformer_like("puzzle"));
}

TEST_CASE("memory_save calls become checked entries") {
    const auto e = memory_entry_from_call({{"layer", "world"}, {"kind", "pitfall"}, {"content", "x"}},
                                          memory::Owner::game_agent, "t", "card", 2);
    CHECK(e.owner == memory::Owner::shared);
    CHECK(e.archetype == "card");
    CHECK(code_of([] {
              memory_entry_from_call({{"layer", "attic"}, {"kind", "pitfall"}, {"content", "x"}},
                                     memory::Owner::game_agent, "t", "", 1);
          }) == Errc::consistency_violation);
}

// ---------------------------------------------------------------- game agent

TEST_CASE("round 1 runs all five phases and emits build plus guide") {
    const auto task = snake_task();
    auto game = ScriptedGameBackend::standard(fixtures_dir());
    TempDir tmp("game");
    GameRoundInput in;
    in.task = &task;
    in.round_dir = tmp / "1";
    const auto out = run_game_agent_round(game, in);
    CHECK(out.phases_run == phases_for(1));
    CHECK(out.phases_run.size() == 5);
    CHECK(std::filesystem::exists(out.build.entry_path()));
    CHECK(std::filesystem::exists(out.build.root / "assets" / "tile.png"));
    CHECK(out.guide == snake_guide());
    CHECK(slurp(out.build.root / "game.js") == slurp(fixtures_dir() / "builds" / "snake-broken-input" / "game.js"));
    CHECK(std::filesystem::exists(tmp / "1" / "game_agent.jsonl"));
    REQUIRE(out.memory_writes.size() == 1);
    CHECK(out.memory_writes[0].owner == memory::Owner::game_agent);
    CHECK(phases_for(2) ==
          std::vector<GamePhase>{GamePhase::implementation, GamePhase::verification, GamePhase::memory_capture});
}

TEST_CASE("the patch table applies the keydown fix deterministically") {
    const auto task = snake_task();
    auto game = ScriptedGameBackend::standard(fixtures_dir());
    TempDir tmp("game");
    GameRoundInput r1;
    r1.task = &task;
    r1.round_dir = tmp / "1";
    const auto first = run_game_agent_round(game, r1);

    report::PlayReport rep;
    rep.outcome = report::RunOutcome::blocked_by_bug;
    rep.confidence = report::Confidence::medium;
    rep.fixes.push_back({"input handler missing", "register the keydown handler that updates the heading"});

    std::vector<std::string> builds;
    for (const char* dir : {"2", "2b"}) {
        GameRoundInput r2;
        r2.task = &task;
        r2.round = 2;
        r2.round_dir = tmp / dir;
        r2.prior_build = first.build.root;
        r2.report = rep;
        const auto out = run_game_agent_round(game, r2);
        builds.push_back(slurp(out.build.root / "game.js"));
        REQUIRE(out.memory_writes.size() == 1);
        CHECK(out.memory_writes[0].layer == memory::Layer::episode_shared);
    }
    CHECK(builds[0] == builds[1]);
    CHECK(builds[0] == slurp(fixtures_dir() / "builds" / "snake-working" / "game.js"));

    rep.fixes = {{"colours are dull", "use brighter colours"}};
    GameRoundInput r3;
    r3.task = &task;
    r3.round = 2;
    r3.round_dir = tmp / "3";
    r3.prior_build = first.build.root;
    r3.report = rep;
    const auto unchanged = run_game_agent_round(game, r3);
    CHECK(slurp(unchanged.build.root / "game.js") == slurp(first.build.root / "game.js"));
}

TEST_CASE("a patched build actually responds to arrows") {
    const auto task = snake_task();
    auto game = ScriptedGameBackend::standard(fixtures_dir());
    TempDir tmp("game");
    GameRoundInput r1;
    r1.task = &task;
    r1.round_dir = tmp / "1";
    const auto first = run_game_agent_round(game, r1);
    report::PlayReport rep;
    rep.fixes.push_back({"input handler missing", "register the keydown handler that updates the heading"});
    GameRoundInput r2;
    r2.task = &task;
    r2.round = 2;
    r2.round_dir = tmp / "2";
    r2.prior_build = first.build.root;
    r2.report = rep;
    const auto second = run_game_agent_round(game, r2);

    ScriptedGuiBackend gui;
    auto open = [&]() -> std::unique_ptr<browser::ActionSurface> {
        return std::make_unique<browser::BuildSession>(shared_browser(), second.build, browser::Viewport{},
                                                       browser::SessionBudget{});
    };
    const auto out = run_gui_session(gui, open, spec_for(GuiMode::evaluator, task));
    CHECK(by_id(*out.verdicts).at("arrow-turn").passed);
}

TEST_CASE("a build without an entry document is BuildEmissionInvalid") {
    const auto task = snake_task();
    Canned backend({ToolCall{"generate_game_guide",
                             {{"controls", "c"}, {"objective", "o"}, {"success_condition", "s"}},
                             {}},
                    TerminalDocument{"designed"}, TerminalDocument{"no assets"},
                    ToolCall{"write_file", {{"path", "main.js"}, {"content", "1"}}, {}}, TerminalDocument{"done"},
                    TerminalDocument{"DONE"}});
    TempDir tmp("game");
    GameRoundInput in;
    in.task = &task;
    in.round_dir = tmp / "1";
    CHECK(code_of([&] { run_game_agent_round(backend, in); }) == Errc::build_emission_invalid);
}

TEST_CASE("workspace tools refuse paths outside the build") {
    const auto task = snake_task();
    Canned backend({ToolCall{"write_file", {{"path", "../escape.txt"}, {"content", "x"}}, {}},
                    ToolCall{"write_file", {{"path", "index.html"}, {"content", "<html></html>"}}, {}},
                    ToolCall{"write_file",
                             {{"path", "GAME_GUIDE.md"},
                              {"content", render_guide({"c", "o", "s"}, "t")}},
                             {}},
                    TerminalDocument{"done"}});
    TempDir tmp("game");
    GameRoundInput in;
    in.task = &task;
    in.round_dir = tmp / "1";
    in.phases = {GamePhase::implementation};
    const auto out = run_game_agent_round(backend, in);
    CHECK_FALSE(std::filesystem::exists(tmp / "1" / "escape.txt"));
    CHECK(std::filesystem::exists(out.build.entry_path()));
}

TEST_CASE("verification failures go back to the agent for bounded repair") {
    const auto task = snake_task();
    auto game = ScriptedGameBackend::standard(fixtures_dir());
    TempDir tmp("game");
    GameRoundInput in;
    in.task = &task;
    in.round_dir = tmp / "1";
    int calls = 0;
    in.verify = [&](const arena::GameBuild&) -> std::optional<std::string> {
        ++calls;
        return "console error: boom";
    };
    const auto out = run_game_agent_round(game, in);
    CHECK_FALSE(out.verified);
    CHECK(calls == 3);
    CHECK(out.repairs == 2);
    CHECK(out.verify_errors.size() == 3);
}

TEST_CASE("self-review reads the code and reports the missing listener") {
    const auto task = snake_task();
    auto game = ScriptedGameBackend::standard(fixtures_dir());
    TempDir tmp("game");
    GameRoundInput in;
    in.task = &task;
    in.round_dir = tmp / "1";
    in.phases = {GamePhase::design, GamePhase::assets, GamePhase::implementation, GamePhase::self_review};
    const auto out = run_game_agent_round(game, in);
    REQUIRE(out.self_report);
    CHECK(out.self_report->outcome == report::RunOutcome::blocked_by_bug);
}
