#include <fstream>

#include "doctest.h"
#include "playforge/agent/scripted.hpp"
#include "playforge/arena/task_io.hpp"
#include "playforge/browser/session.hpp"
#include "playforge/error.hpp"
#include "playforge/eval/harness.hpp"
#include "support/browser_env.hpp"

using namespace playforge;
using namespace playforge::eval;
using playforge::testing::fixture_build;
using playforge::testing::fixtures_dir;
using playforge::testing::shared_browser;
using playforge::testing::TempDir;

namespace {

arena::GameTask snake() { return arena::parse_task(fixtures_dir() / "tasks" / "snake-basic"); }

// Answers at once with all-fail verdicts, leaving out the first criterion
// unless the session is the retry.
class Omitting final : public agent::ModelBackend {
public:
    explicit Omitting(const arena::Rubric& rubric, bool fixed_on_retry) : rubric_(rubric), fixed_(fixed_on_retry) {}
    std::string label() const override { return "omitting"; }
    agent::BackendReply complete(const agent::BackendRequest& r) override {
        ++calls;
        const bool retry = r.session_id.find("/retry") != std::string::npos;
        json v = json::array();
        for (std::size_t i = 0; i < rubric_.criteria.size(); ++i) {
            if (i == 0 && !(retry && fixed_)) continue;
            v.push_back({{"criterion_id", rubric_.criteria[i].id}, {"passed", false}, {"evidence", json::array()}});
        }
        return agent::TerminalDocument{json{{"verdicts", v}}.dump()};
    }
    int calls = 0;

private:
    arena::Rubric rubric_;
    bool fixed_;
};

arena::GameTask synthetic(const std::string& id, arena::Genre genre, int criteria) {
    arena::GameTask t;
    t.id = id;
    t.genre = genre;
    t.prompt = "p";
    for (int i = 0; i < criteria; ++i) {
        t.rubric.criteria.push_back({"c" + std::to_string(i), arena::Dimension::mechanics, "criterion"});
    }
    return t;
}

std::vector<arena::Verdict> passing(const arena::GameTask& t, int n) {
    std::vector<arena::Verdict> v;
    for (std::size_t i = 0; i < t.rubric.criteria.size(); ++i) {
        v.push_back({t.rubric.criteria[i].id, static_cast<int>(i) < n, {}});
    }
    return v;
}

loop::RoundRecord scored_round(int round, double value) {
    loop::RoundRecord r;
    r.round = round;
    r.score = arena::RubricScore{0, 0, value};
    return r;
}

report::PlayReport with_findings(std::vector<report::FeedbackCategory> cats) {
    report::PlayReport r;
    for (auto c : cats) r.findings.push_back({report::Severity::minor, c, "f", {}});
    return r;
}

}  // namespace

TEST_CASE("adjudicate scores working and broken snake builds") {
    const auto task = snake();
    agent::ScriptedGuiBackend gui;
    TempDir tmp("eval");
    AdjudicateOptions opts;
    opts.dir = tmp / "working";
    const auto good = adjudicate(task, fixture_build("snake-working"), gui, shared_browser(), opts);
    CHECK(good.score.value == 1.0);
    CHECK(good.attempts == 1);
    CHECK(std::filesystem::exists(tmp / "working" / "verdicts.json"));
    CHECK(std::filesystem::exists(tmp / "working" / "play_log.json"));

    const auto bad = adjudicate(task, fixture_build("snake-broken-input"), gui, shared_browser());
    CHECK(bad.score.passed == 2);
    CHECK(bad.score.value == doctest::Approx(2.0 / 6.0));
}

TEST_CASE("a missing verdict is retried once") {
    const auto task = snake();
    agent::SessionOpener open = [] {
        return std::make_unique<browser::BuildSession>(shared_browser(), fixture_build("snake-working"), browser::Viewport{},
                                                       browser::SessionBudget::judge());
    };

    Omitting fixed(task.rubric, true);
    const auto a = adjudicate(task, fixed, open);
    CHECK(a.attempts == 2);
    CHECK(a.verdicts.size() == task.rubric.criteria.size());
    CHECK(a.score.value == 0.0);

    Omitting stubborn(task.rubric, false);
    try {
        adjudicate(task, stubborn, open);
        FAIL("expected MissingVerdict");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::missing_verdict);
        CHECK(std::string(e.what()).find(task.rubric.criteria[0].id) != std::string::npos);
    }
    CHECK(stubborn.calls == 2);
}

TEST_CASE("aggregate genre means, carried-forward rounds and categories") {
    const auto p1 = synthetic("p1", arena::Genre::puzzle, 4);
    const auto p2 = synthetic("p2", arena::Genre::puzzle, 4);
    const auto s1 = synthetic("s1", arena::Genre::shooter, 5);

    ScoredTask a{&p1, {}, passing(p1, 2)};
    a.record.rounds = {scored_round(1, 0.25), scored_round(2, 0.5)};
    a.record.rounds[0].report = with_findings({report::FeedbackCategory::functionality,
                                               report::FeedbackCategory::functionality});
    ScoredTask b{&p2, {}, passing(p2, 4)};
    b.record.rounds = {scored_round(1, 0.5), scored_round(2, 0.75), scored_round(3, 1.0)};
    b.record.rounds[1].report =
        with_findings({report::FeedbackCategory::functionality, report::FeedbackCategory::visual});
    ScoredTask c{&s1, {}, passing(s1, 1)};

    const auto agg = aggregate({a, b, c});
    CHECK(agg.genre_mean.at(arena::Genre::puzzle) == doctest::Approx(0.75));
    CHECK(agg.genre_mean.at(arena::Genre::shooter) == doctest::Approx(0.2));
    CHECK(agg.genre_tasks.at(arena::Genre::puzzle) == 2);
    CHECK_FALSE(agg.genre_mean.count(arena::Genre::card));
    CHECK(agg.overall_mean == doctest::Approx((0.5 + 1.0 + 0.2) / 3));

    // c has no trajectory; a stops at round 2 and carries 0.5 into round 3.
    CHECK(agg.round_mean.at(1) == doctest::Approx(0.375));
    CHECK(agg.round_mean.at(2) == doctest::Approx(0.625));
    CHECK(agg.round_mean.at(3) == doctest::Approx(0.75));

    CHECK(agg.findings == 4);
    CHECK(agg.categories.at(report::FeedbackCategory::functionality) == 0.75);
    CHECK(agg.categories.at(report::FeedbackCategory::controls) == 0.0);
    CHECK(agg.categories.at(report::FeedbackCategory::experience) == 0.0);
    CHECK(agg.categories.at(report::FeedbackCategory::visual) == 0.25);
    CHECK(agg.categories.at(report::FeedbackCategory::other) == 0.0);

    const auto csv = genre_table_csv(agg);
    CHECK(csv ==
          "Genre,Tasks,Score\n"
          "Puzzle,2,75.0\n"
          "Strategy,0,-\n"
          "Card,0,-\n"
          "Action,0,-\n"
          "Platformer,0,-\n"
          "Management,0,-\n"
          "Shooter,1,20.0\n"
          "Other,0,-\n"
          "Avg.,3,56.7\n");

    const auto j = to_json(agg);
    CHECK(j.at("categories").at("functionality") == 0.75);
    CHECK(j.at("genres").at("puzzle").at("tasks") == 2);

    CHECK_THROWS_AS(aggregate({}), Error);
}

TEST_CASE("trajectories stop at the first unscored round and feed tiers") {
    loop::TaskRunRecord rec;
    rec.task_id = "t";
    rec.rounds = {scored_round(1, 0.5), scored_round(2, 0.6), loop::RoundRecord{}, scored_round(4, 1.0)};
    const auto t = trajectory_of(rec);
    CHECK(t.scores == std::vector<double>{0.5, 0.6});
    CHECK(tier_assign(t) == ComplexityTier::high);

    rec.rounds = {scored_round(1, 1.0 / 3.0), scored_round(2, 1.0)};
    CHECK(tier_assign(trajectory_of(rec)) == ComplexityTier::low);
}

TEST_CASE("pass@k csv layout") {
    std::map<std::string, PassAtKTable> rows;
    rows["scripted"] = pass_at_k_suite({{"l1", 10, 3, {}}, {"l2", 10, 0, {}}}, {1, 5});
    const auto csv = pass_at_k_csv(rows);
    // pass@1 = (0.3 + 0) / 2, pass@5 = (1 - C(7,5)/C(10,5)) / 2 = (1 - 21/252) / 2
    CHECK(csv == "Agent,pass@1,pass@5\nscripted,0.1500,0.4583\n");
}

TEST_CASE("feasibility episodes and level records") {
    agent::ScriptedGuiBackend gui;
    FeasibilityLevel level{"snake-l1", fixture_build("snake-working"),
                           agent::GameGuide{"Arrow keys steer.", "Eat food.", "Score rises."}, "score one point"};
    std::vector<agent::EpisodeOutcome> outcomes;
    const auto rec = run_feasibility(level, 2, gui, shared_browser(), browser::SessionBudget::feasibility(), &outcomes);
    CHECK(rec.n == 2);
    CHECK(rec.c == 2);
    CHECK(rec.episodes == std::vector<bool>{true, true});
    CHECK(outcomes[0].end == agent::EpisodeEnd::completion);

    browser::SessionBudget tight = browser::SessionBudget::feasibility();
    tight.max_steps = 2;
    const auto starved = run_feasibility(level, 1, gui, shared_browser(), tight, &outcomes);
    CHECK(starved.c == 0);
    CHECK(outcomes[0] == agent::EpisodeOutcome{false, agent::EpisodeEnd::timeout});

    level.build = fixture_build("snake-broken-input");
    CHECK(run_feasibility(level, 1, gui, shared_browser()).c == 0);

    const auto lr = level_record("l", {{true, agent::EpisodeEnd::completion},
                                       {false, agent::EpisodeEnd::timeout},
                                       {false, agent::EpisodeEnd::load_failure},
                                       {false, agent::EpisodeEnd::game_over}});
    CHECK(lr.n == 4);
    CHECK(lr.c == 1);
    CHECK(lr.episodes == std::vector<bool>{true, false, false, false});
    CHECK_THROWS_AS(run_feasibility(level, 0, gui, shared_browser()), Error);
}
