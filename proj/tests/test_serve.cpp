#include <atomic>
#include <future>

#include "doctest.h"
#include "httplib.h"
#include "playforge/agent/scripted.hpp"
#include "playforge/arena/task_io.hpp"
#include "playforge/error.hpp"
#include "playforge/serve/hub.hpp"
#include "support/browser_env.hpp"

using namespace playforge;
using namespace playforge::serve;
using playforge::testing::fixture_build;
using playforge::testing::fixtures_dir;
using playforge::testing::shared_browser;
using playforge::testing::TempDir;

namespace {

arena::GameTask snake() { return arena::parse_task(fixtures_dir() / "tasks" / "snake-basic"); }

// Test clock that only moves when told to.
struct ManualClock {
    std::shared_ptr<std::atomic<long long>> offset_ms = std::make_shared<std::atomic<long long>>(0);
    std::chrono::steady_clock::time_point origin = std::chrono::steady_clock::now();

    Clock clock() const {
        return [o = offset_ms, t = origin] { return t + std::chrono::milliseconds(o->load()); };
    }
    void advance(std::chrono::milliseconds d) const { *offset_ms += d.count(); }
};

// Polls until the hub has opened `id`.
bool wait_for_session(const Hub& hub, const std::string& id) {
    for (int i = 0; i < 500; ++i) {
        for (const auto& s : hub.session_ids()) {
            if (s == id) return true;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
    return false;
}

json post(httplib::Client& c, const std::string& path, const json& body, int& status,
          const std::string& key = "") {
    httplib::Headers headers;
    if (!key.empty()) headers.emplace("Idempotency-Key", key);
    const auto res = c.Post(path, headers, body.dump(), "application/json");
    REQUIRE(res);
    status = res->status;
    return json::parse(res->body);
}

}  // namespace

TEST_CASE("form mapping") {
    HumanForm form;
    form.could_do = "move the snake\nand eat";
    form.bugs = "arrow keys do nothing\n\nscore stuck at 0";
    form.suggestions = {{"wire up the arrow keys", "arrow keys do nothing"}, {"show a restart hint", ""}};
    const auto r = report_from_form(form);
    CHECK(r.outcome == report::RunOutcome::blocked_by_bug);
    CHECK(r.confidence == report::Confidence::medium);
    CHECK(r.interaction_log == std::vector<std::string>{"could do: move the snake and eat"});
    CHECK(r.findings.size() == 2);
    CHECK(r.most_blocking == std::optional<std::size_t>(0));
    REQUIRE(report::extract_fix_list(r).size() == 2);
    CHECK(r.fixes[0] == report::FixItem{"arrow keys do nothing", "wire up the arrow keys"});
    CHECK(r.fixes[1] == report::FixItem{"show a restart hint", "show a restart hint"});
    CHECK_FALSE(loop::should_terminate(r));

    CHECK(report::render_report(report_from_form(form)) == report::render_report(r));
    CHECK(report::parse_report(report::render_report(r)) == r);

    HumanForm done;
    done.completion_claim = true;
    const auto d = report_from_form(done);
    CHECK(d.outcome == report::RunOutcome::completed);
    CHECK(d.confidence == report::Confidence::high);
    CHECK(loop::should_terminate(d));

    CHECK_THROWS_AS(report_from_form(HumanForm{" ", "\n", "", {{"  ", ""}}, false}), Error);

    HumanForm arrow;
    arrow.suggestions = {{"a → b", ""}};
    CHECK(report_from_form(arrow).fixes[0].observation == "a -> b");
}

TEST_CASE("form json accepts plain and paired suggestions") {
    const auto f = form_from_json(
        json{{"bugs", "x"}, {"suggestions", {"plain", {{"text", "t"}, {"observation", "o"}}}}});
    REQUIRE(f.suggestions.size() == 2);
    CHECK(f.suggestions[0].observation.empty());
    CHECK(f.suggestions[1].observation == "o");
    CHECK_THROWS_AS(form_from_json(json::array()), Error);
}

TEST_CASE("unknown sessions are 404") {
    Hub hub;
    httplib::Client c(hub.base_url());
    CHECK(c.Get("/session/nope")->status == 404);
    int status = 0;
    post(c, "/session/nope/report", json{{"bugs", "x"}}, status);
    CHECK(status == 404);
}

TEST_CASE("a human submission advances a waiting human_playtester run") {
    const auto task = snake();
    TempDir tmp("serve");
    memory::MemoryStore store(tmp / "memory");
    auto game = agent::ScriptedGameBackend::standard(fixtures_dir());
    Hub hub;
    loop::LoopConfig cfg;
    cfg.mode = loop::RunMode::human_playtester;
    cfg.human_budget = std::chrono::seconds(60);
    auto run = std::async(std::launch::async, [&] {
        return loop::run_task(task, cfg, {&game, nullptr, &hub, &shared_browser(), {}}, store, tmp / "runs");
    });

    httplib::Client c(hub.base_url());
    REQUIRE(wait_for_session(hub, "snake-basic-r1"));
    auto res = c.Get("/session/snake-basic-r1");
    REQUIRE(res);
    CHECK(res->status == 200);
    const auto info = json::parse(res->body);
    CHECK(info.at("mode") == "playtester");
    CHECK(info.at("round") == 1);
    CHECK(info.at("budget_ms") == 60000);
    CHECK(info.at("prompt") == task.prompt);
    CHECK_FALSE(info.contains("rubric"));
    for (const auto& crit : task.rubric.criteria) CHECK(res->body.find(crit.text) == std::string::npos);

    // The build is reachable at the advertised URL.
    const std::string url = info.at("build_url");
    const auto slash = url.find('/', 7);
    httplib::Client build(url.substr(0, slash));
    auto page = build.Get(url.substr(slash));
    REQUIRE(page);
    CHECK(page->status == 200);

    int status = 0;
    post(c, "/session/snake-basic-r1/report", json::object(), status);
    CHECK(status == 422);

    const json form = {{"could_do", "see the snake move"},
                       {"could_not_do", "turn"},
                       {"bugs", "arrow keys do not change the snake's direction"},
                       {"suggestions",
                        {{{"text", "register the keydown handler that updates the heading"},
                          {"observation", "arrow keys do not change the snake's direction"}}}}};
    auto receipt = post(c, "/session/snake-basic-r1/report", form, status, "k1");
    CHECK(status == 200);
    CHECK(receipt.at("fixes") == 1);
    CHECK(post(c, "/session/snake-basic-r1/report", form, status, "k1") == receipt);
    CHECK(status == 200);
    post(c, "/session/snake-basic-r1/report", form, status, "other");
    CHECK(status == 409);

    REQUIRE(wait_for_session(hub, "snake-basic-r2"));
    const auto done = json{{"could_do", "everything"}, {"completion_claim", true}};
    post(c, "/session/snake-basic-r2/report", done, status);
    CHECK(status == 200);

    const auto rec = run.get();
    CHECK(rec.termination == loop::Termination::early_complete);
    CHECK(rec.effective_rounds == 2);
    CHECK(rec.rounds[0].report->fixes.size() == 1);
    CHECK(rec.rounds[1].report_source == "human");
    const auto patched = arena::read_text_file(tmp / "runs" / "snake-basic" / "2" / "build" / "game.js");
    CHECK(patched.find("addEventListener('keydown'") != std::string::npos);
}

TEST_CASE("a canonical report document is accepted as is") {
    auto build = fixture_build("snake-working");
    Hub hub;
    report::PlayReport r;
    r.outcome = report::RunOutcome::reached_ending;
    r.confidence = report::Confidence::low;
    loop::HumanRequest req{"t", 1, build, "p", {}, std::chrono::seconds(30)};
    auto waiting = std::async(std::launch::async, [&] { return hub.await_report(req); });
    REQUIRE(wait_for_session(hub, "t-r1"));
    httplib::Client c(hub.base_url());
    int status = 0;
    post(c, "/session/t-r1/report", json{{"report", report::render_report(r)}}, status);
    CHECK(status == 200);
    CHECK(waiting.get() == r);

    post(c, "/session/t-r1/verdicts", json::array(), status);
    CHECK(status == 409);
}

TEST_CASE("judge sessions take one verdict per criterion") {
    const auto task = snake();
    Hub hub;
    const auto id = hub.open_judge_session(task, fixture_build("snake-working"));
    CHECK(id == "snake-basic-judge");
    httplib::Client c(hub.base_url());
    const auto info = json::parse(c.Get("/session/" + id)->body);
    CHECK(info.at("mode") == "judge");
    REQUIRE(info.at("rubric").size() == task.rubric.criteria.size());
    CHECK(info.at("rubric")[0].at("text") == task.rubric.criteria[0].text);

    json toggles = json::array();
    for (std::size_t i = 0; i < task.rubric.criteria.size(); ++i) {
        toggles.push_back({{"criterion_id", task.rubric.criteria[i].id}, {"passed", i != 1}});
    }
    int status = 0;
    json partial = toggles;
    partial.erase(partial.begin() + 2);
    auto err = post(c, "/session/" + id + "/verdicts", partial, status);
    CHECK(status == 422);
    CHECK(err.at("missing") == json::array({task.rubric.criteria[2].id}));

    json extra = toggles;
    extra.push_back({{"criterion_id", "ghost"}, {"passed", true}});
    post(c, "/session/" + id + "/verdicts", extra, status);
    CHECK(status == 400);

    post(c, "/session/" + id + "/report", json{{"bugs", "x"}}, status);
    CHECK(status == 409);

    auto receipt = post(c, "/session/" + id + "/verdicts", toggles, status, "v1");
    CHECK(status == 200);
    const double n = static_cast<double>(task.rubric.criteria.size());
    CHECK(receipt.at("score").at("value").get<double>() == doctest::Approx((n - 1) / n));
    CHECK(post(c, "/session/" + id + "/verdicts", toggles, status, "v1") == receipt);
    CHECK(status == 200);

    const auto got = hub.await_verdicts(id);
    REQUIRE(got);
    CHECK(got->size() == task.rubric.criteria.size());
    CHECK_FALSE((*got)[1].passed);
}

TEST_CASE("late submissions are rejected by the server clock") {
    ManualClock t;
    Hub hub(0, t.clock());
    const auto id = hub.open_judge_session(snake(), fixture_build("snake-working"), std::chrono::seconds(1));
    httplib::Client c(hub.base_url());
    CHECK(json::parse(c.Get("/session/" + id)->body).at("state") == "open");
    t.advance(std::chrono::seconds(2));
    CHECK(json::parse(c.Get("/session/" + id)->body).at("state") == "expired");
    CHECK(json::parse(c.Get("/session/" + id)->body).at("remaining_ms") == 0);
    int status = 0;
    json all = json::array();
    for (const auto& crit : snake().rubric.criteria) all.push_back({{"criterion_id", crit.id}, {"passed", true}});
    post(c, "/session/" + id + "/verdicts", all, status);
    CHECK(status == 410);
    CHECK_FALSE(hub.await_verdicts(id).has_value());
}

TEST_CASE("a busy UI port is reported") {
    Hub first;
    try {
        Hub second(first.port());
        FAIL("expected PortUnavailable");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::port_unavailable);
    }
}
