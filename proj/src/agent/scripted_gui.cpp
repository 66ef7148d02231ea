#include <cstdlib>
#include <optional>
#include <regex>
#include <set>

#include "playforge/agent/gui_agent.hpp"
#include "playforge/agent/scripted.hpp"
#include "playforge/browser/image.hpp"
#include "playforge/error.hpp"

namespace playforge::agent {

namespace {

using browser::Image;
using browser::rgb;

struct CriterionLine {
    std::string id;
    std::string dimension;
};

struct Turn {
    GuiMode mode = GuiMode::playtester;
    std::string phase;
    std::optional<Image> frame;
    int step = 0;
    bool tool_error = false;
    int turns_since_user = 0;
    std::vector<CriterionLine> criteria;
};

GuiMode detect_mode(const std::string& intro) {
    if (intro.find("\nRubric:\n") != std::string::npos) return GuiMode::evaluator;
    if (intro.find("clear one level") != std::string::npos) return GuiMode::feasibility;
    return GuiMode::playtester;
}

std::vector<CriterionLine> parse_criteria(const std::string& intro) {
    std::vector<CriterionLine> out;
    const auto at = intro.find("\nRubric:\n");
    if (at == std::string::npos) return out;
    static const std::regex line(R"(^- ([^ \[]+) \[([a-z_]+)\]: )");
    std::size_t pos = at + 9;
    while (pos < intro.size() && intro.compare(pos, 2, "- ") == 0) {
        const auto nl = intro.find('\n', pos);
        const auto text = intro.substr(pos, nl - pos);
        std::smatch m;
        if (std::regex_search(text, m, line)) out.push_back({m[1], m[2]});
        if (nl == std::string::npos) break;
        pos = nl + 1;
    }
    return out;
}

ToolCall act(const std::string& tool, json params, const std::string& observation, const std::string& reasoning,
             const std::string& phase, int attempt) {
    params["observation"] = observation;
    params["reasoning"] = reasoning;
    params["phase"] = phase;
    if (attempt > 0) params["attempt"] = attempt;
    return {"browser_" + tool, std::move(params), {}};
}

ToolCall wait(int ms, const std::string& observation, const std::string& reasoning, const std::string& phase,
              int attempt = 0) {
    return act("wait", {{"ms", ms}}, observation, reasoning, phase, attempt);
}

ToolCall key(const std::string& name, int hold_ms, const std::string& observation, const std::string& reasoning,
             const std::string& phase, int attempt = 0) {
    return act("key", {{"key", name}, {"hold_ms", hold_ms}}, observation, reasoning, phase, attempt);
}

std::string verdict_doc(const std::vector<CriterionLine>& criteria, const std::map<std::string, int>& evidence) {
    std::vector<arena::Verdict> v;
    for (const auto& c : criteria) {
        const auto it = evidence.find(c.id);
        if (it == evidence.end()) {
            v.push_back({c.id, false, {}});
        } else {
            v.push_back({c.id, true, {it->second}});
        }
    }
    return render_verdicts(v);
}

// ---------------------------------------------------------------- snake

struct Cell {
    int x = 0, y = 0;
    bool operator==(const Cell&) const = default;
};

constexpr int kCell = 20;
constexpr int kGrid = 16;

struct SnakeFrame {
    std::optional<Cell> head;
    std::optional<Cell> food;
    int body = 0;
    int score = 0;
    bool over = false;
};

bool fits_snake(const Image& img) { return img.width >= kGrid * kCell && img.height >= kGrid * kCell + kCell; }

SnakeFrame probe_snake(const Image& img) {
    static const auto head = rgb("#00ff00"), body = rgb("#00aa00"), food = rgb("#ffffff"), red = rgb("#aa0000"),
                      yellow = rgb("#ffff00");
    SnakeFrame f;
    int reds = 0;
    for (int y = 0; y < kGrid; ++y) {
        for (int x = 0; x < kGrid; ++x) {
            const auto c = img.at(x * kCell + kCell / 2, y * kCell + kCell / 2);
            if (c == head) f.head = Cell{x, y};
            else if (c == body) ++f.body;
            else if (c == food) f.food = Cell{x, y};
            else if (c == red) ++reds;
        }
    }
    f.over = reds > kGrid * kGrid / 2;
    for (int s = 0; s < kGrid; ++s) {
        if (img.at(s * kCell + kCell / 2, kGrid * kCell + kCell / 2) == yellow) ++f.score;
    }
    return f;
}

const std::map<std::string, Cell> kDirs = {
    {"ArrowUp", {0, -1}}, {"ArrowDown", {0, 1}}, {"ArrowLeft", {-1, 0}}, {"ArrowRight", {1, 0}}};

std::string dir_name(Cell d) {
    for (const auto& [name, v] : kDirs) {
        if (v == d) return name;
    }
    return "?";
}

std::string cell_text(const std::optional<Cell>& c) {
    if (!c) return "nowhere";
    return "(" + std::to_string(c->x) + "," + std::to_string(c->y) + ")";
}

Cell sign_delta(Cell from, Cell to) {
    auto sgn = [](int v) { return (v > 0) - (v < 0); };
    return {sgn(to.x - from.x), sgn(to.y - from.y)};
}

// Heading toward the food that never reverses and never runs into a wall.
Cell greedy(Cell head, Cell food, Cell heading) {
    std::vector<Cell> want;
    if (food.x > head.x) want.push_back({1, 0});
    if (food.x < head.x) want.push_back({-1, 0});
    if (food.y > head.y) want.push_back({0, 1});
    if (food.y < head.y) want.push_back({0, -1});
    for (auto d : want) {
        if (d == heading) return d;
    }
    for (auto d : want) {
        if (!(d.x == -heading.x && d.y == -heading.y)) return d;
    }
    // Food straight behind: side-step away from the nearer wall.
    if (heading.x != 0) return head.y >= kGrid / 2 ? Cell{0, -1} : Cell{0, 1};
    return head.x >= kGrid / 2 ? Cell{-1, 0} : Cell{1, 0};
}

}  // namespace

class ScriptedGuiBackend::Policy {
public:
    virtual ~Policy() = default;

    BackendReply next(const Turn& t) {
        if (t.phase == "memory_capture") {
            const auto lesson = this->lesson();
            if (t.turns_since_user == 0 && !lesson.empty()) {
                return ToolCall{"memory_save",
                                {{"layer", "skill"}, {"kind", "interaction_pattern"}, {"content", lesson}},
                                {}};
            }
            return TerminalDocument{"DONE"};
        }
        if (t.phase != "play" || t.tool_error || !t.frame || done_) return finish(t);
        return play(t);
    }

protected:
    virtual BackendReply play(const Turn& t) = 0;
    virtual TerminalDocument finish(const Turn& t) = 0;
    virtual std::string lesson() const { return {}; }

    bool done_ = false;
};

namespace {

class SnakePolicy final : public ScriptedGuiBackend::Policy {
    enum class Stage { start, advance, turn_key, turn_wait, hunt, crash, restart_key, restart_wait };

protected:
    BackendReply play(const Turn& t) override {
        const auto f = probe_snake(*t.frame);
        const int step = t.step;
        step_ = step;
        std::optional<BackendReply> out;
        switch (stage_) {
        case Stage::start:
            if (f.head && f.food && f.body > 0) pass("render", step);
            note(step, "board drawn, head at " + cell_text(f.head) + ", food at " + cell_text(f.food));
            stage_ = Stage::advance;
            out = wait(150, "board with the snake at " + cell_text(f.head), "see whether it moves by itself",
                       "observe");
            break;
        case Stage::advance:
            if (f.head && prev_.head) {
                const auto d = sign_delta(*prev_.head, *f.head);
                if (d.x != 0 || d.y != 0) {
                    heading_ = d;
                    pass("auto-advance", step);
                    note(step, "snake moved on its own to " + cell_text(f.head));
                } else {
                    note(step, "snake did not move on its own");
                }
            }
            out = turn(f);
            break;
        case Stage::turn_key:
            key_frame_ = f;
            stage_ = Stage::turn_wait;
            out = wait(150, "pressed " + dir_name(pressed_) + ", head at " + cell_text(f.head),
                       "give the game one tick to apply the turn", "play", attempt_);
            break;
        case Stage::turn_wait: {
            const bool turned = f.head && key_frame_.head && sign_delta(*key_frame_.head, *f.head) == pressed_;
            turn_steps_.push_back(step);
            if (turned) {
                heading_ = pressed_;
                pass("arrow-turn", step);
                note(step, dir_name(pressed_) + " turned the snake");
                stage_ = Stage::hunt;
                out = hunt(f);
            } else if (f.over) {
                note(step, "game ended before a turn was seen");
                stage_ = Stage::restart_key;
                out = restart(f);
            } else if (attempt_ < 2) {
                note(step, dir_name(pressed_) + " did not change the heading; retrying with another key");
                out = turn(f);
            } else {
                controls_dead_ = true;
                note(step, "no arrow key changed the heading");
                stage_ = Stage::crash;
                out = crash(f);
            }
            break;
        }
        case Stage::hunt:
            if (f.head && prev_.head && !(*f.head == *prev_.head)) heading_ = sign_delta(*prev_.head, *f.head);
            if (f.over) {
                note(step, "game over while steering to food");
                out = restart(f);
            } else if (f.score > prev_.score) {
                pass("score", step);
                if (f.body > prev_.body) pass("grow", step);
                note(step, "ate food: score " + std::to_string(f.score) + ", body " + std::to_string(f.body + 1));
                stage_ = Stage::crash;
                out = crash(f);
            } else {
                out = hunt(f);
            }
            break;
        case Stage::crash:
            if (f.over) {
                note(step, "board turned red: game over");
                out = restart(f);
            } else {
                out = crash(f);
            }
            break;
        case Stage::restart_key:
            stage_ = Stage::restart_wait;
            out = wait(150, "pressed Enter on the game-over screen", "let a fresh round start", "play");
            break;
        case Stage::restart_wait:
            if (!f.over && f.head && f.body == 2 && f.score == 0) {
                pass("restart", step);
                note(step, "Enter started a fresh round at " + cell_text(f.head));
            } else {
                restart_failed_ = true;
                note(step, f.over ? "Enter left the game-over screen in place" : "Enter did not reset the round");
            }
            prev_ = f;
            return finish(t);
        }
        prev_ = f;
        return *out;
    }

    TerminalDocument finish(const Turn& t) override {
        done_ = true;
        switch (t.mode) {
        case GuiMode::evaluator: return {verdict_doc(t.criteria, passes_)};
        case GuiMode::feasibility:
            return {json{{"passed", passes_.count("score") > 0},
                         {"end", passes_.count("score") ? "completion" : "game_over"}}
                        .dump()};
        case GuiMode::playtester: break;
        }
        return {report::render_report(report())};
    }

    std::string lesson() const override {
        return "grid games on a fixed tick: press the arrow, then wait one tick before judging the turn";
    }

private:
    void pass(const std::string& id, int step) { passes_.emplace(id, step); }

    void note(int step, const std::string& text) { log_.push_back("step " + std::to_string(step) + ": " + text); }

    BackendReply turn(const SnakeFrame& f) {
        ++attempt_;
        const bool horizontal = heading_.x != 0;
        Cell d = horizontal ? Cell{0, -1} : Cell{1, 0};
        if (f.head && f.food) {
            if (horizontal && f.food->y > f.head->y) d = {0, 1};
            if (!horizontal && f.food->x < f.head->x) d = {-1, 0};
        }
        if (attempt_ == 2) d = {-d.x, -d.y};
        pressed_ = d;
        stage_ = Stage::turn_key;
        return key(dir_name(d), 80, "snake heading " + dir_name(heading_) + " at " + cell_text(f.head),
                   "check that " + dir_name(d) + " turns the snake", "play", attempt_);
    }

    BackendReply hunt(const SnakeFrame& f) {
        if (++hunt_actions_ > 80 || !f.head || !f.food) {
            note(step_, "gave up steering to food");
            stage_ = Stage::crash;
            return crash(f);
        }
        const auto want = greedy(*f.head, *f.food, heading_);
        if (!(want == heading_) && !last_was_key_) {
            last_was_key_ = true;
            return key(dir_name(want), 80, "head " + cell_text(f.head) + ", food " + cell_text(f.food),
                       "steer toward the food", "play");
        }
        last_was_key_ = false;
        return wait(150, "head " + cell_text(f.head) + ", food " + cell_text(f.food), "keep moving toward the food",
                    "play");
    }

    BackendReply crash(const SnakeFrame& f) {
        if (++crash_actions_ > 40) {
            note(step_, "the game never ended");
            done_ = true;
            return wait(150, "still running", "nothing left to probe", "play");
        }
        return wait(150, "head " + cell_text(f.head), "run into a wall to reach game over", "play");
    }

    BackendReply restart(const SnakeFrame&) {
        stage_ = Stage::restart_key;
        return key("Enter", 80, "game-over screen", "Enter should restart", "play");
    }

    report::PlayReport report() const {
        using namespace report;
        PlayReport r;
        r.interaction_log = log_;
        for (const auto& [id, step] : passes_) r.probe_signals.push_back(id + " observed at step " + std::to_string(step));
        if (controls_dead_) {
            r.outcome = RunOutcome::blocked_by_bug;
            r.confidence = Confidence::medium;
            r.dimension_assessments[arena::Dimension::controls] = "arrow keys had no effect on the snake";
            r.findings.push_back({Severity::blocker, FeedbackCategory::controls,
                                  "arrow keys never changed the snake's heading", turn_steps_});
            r.most_blocking = 0;
            r.fix_direction = "Connect keyboard input to the snake's heading before anything else";
            r.fixes.push_back({"arrow keys do not change the snake's direction",
                               "register the keydown handler that updates the heading"});
        } else if (passes_.size() >= 5 && !restart_failed_) {
            r.outcome = RunOutcome::completed;
            r.confidence = Confidence::high;
            r.dimension_assessments[arena::Dimension::controls] = "arrow keys turn the snake; Enter restarts";
            r.dimension_assessments[arena::Dimension::mechanics] = "the snake advances, eats, and grows";
        } else {
            r.outcome = RunOutcome::blocked_by_bug;
            r.confidence = Confidence::medium;
            if (!passes_.count("score")) {
                r.findings.push_back({Severity::major, FeedbackCategory::functionality,
                                      "eating food did not raise the score", {}});
                r.fixes.push_back({"eating food does not raise the score",
                                   "increment the score and redraw the strip when the head reaches food"});
            }
        }
        if (restart_failed_) {
            r.findings.push_back({Severity::major, FeedbackCategory::controls,
                                  "Enter did not restart after game over", {}});
            r.fixes.push_back({"Enter does not restart after game over",
                               "handle Enter on the game-over screen by resetting the round"});
            if (!r.most_blocking) r.most_blocking = r.findings.size() - 1;
        }
        return r;
    }

    Stage stage_ = Stage::start;
    int step_ = 0;
    SnakeFrame prev_;
    SnakeFrame key_frame_;
    Cell heading_{1, 0};
    Cell pressed_{0, 0};
    int attempt_ = 0;
    int hunt_actions_ = 0;
    int crash_actions_ = 0;
    bool last_was_key_ = false;
    bool controls_dead_ = false;
    bool restart_failed_ = false;
    std::vector<int> turn_steps_;
    std::map<std::string, int> passes_;
    std::vector<std::string> log_;
};

// ---------------------------------------------------------------- generic

std::size_t colour_count(const Image& img, std::size_t cap) {
    std::set<std::uint32_t> seen;
    for (std::size_t i = 0; i + 2 < img.data.size() && seen.size() < cap; i += 3 * 7) {
        seen.insert(img.data[i] << 16 | img.data[i + 1] << 8 | img.data[i + 2]);
    }
    return seen.size();
}

// Looks, waits, then presses keys without holding them (so timers cannot
// change the frame) and calls the controls responsive if the frame changes.
class GenericPolicy final : public ScriptedGuiBackend::Policy {
    enum class Stage { start, waited, pressed };

protected:
    BackendReply play(const Turn& t) override {
        const auto& img = *t.frame;
        switch (stage_) {
        case Stage::start:
            rendered_ = colour_count(img, 3) >= 2;
            render_step_ = t.step;
            stage_ = Stage::waited;
            last_ = img;
            return wait(500, rendered_ ? "something is drawn" : "blank screen", "see what happens on its own",
                        "observe");
        case Stage::waited:
        case Stage::pressed:
            if (stage_ == Stage::pressed && browser::diff_pixels(last_, img) > 0) {
                responsive_step_ = t.step;
                done_ = true;
                return finish(t);
            }
            if (attempt_ >= 2) {
                done_ = true;
                return finish(t);
            }
            stage_ = Stage::pressed;
            last_ = img;
            ++attempt_;
            return key(attempt_ == 1 ? "ArrowRight" : "Space", 0, "frame before the key press",
                       "check whether the game reacts to input", "play", attempt_);
        }
        return finish(t);
    }

    TerminalDocument finish(const Turn& t) override {
        done_ = true;
        switch (t.mode) {
        case GuiMode::evaluator: {
            std::map<std::string, int> evidence;
            for (const auto& c : t.criteria) {
                if (c.dimension == "interface" && rendered_) evidence[c.id] = render_step_;
                if (c.dimension == "controls" && responsive_step_) evidence[c.id] = *responsive_step_;
            }
            return {verdict_doc(t.criteria, evidence)};
        }
        case GuiMode::feasibility: return {json{{"passed", false}, {"end", "game_over"}}.dump()};
        case GuiMode::playtester: break;
        }
        using namespace report;
        PlayReport r;
        r.interaction_log.push_back(rendered_ ? "initial frame shows content" : "initial frame is blank");
        if (responsive_step_) {
            r.outcome = RunOutcome::completed;
            r.confidence = Confidence::medium;
            r.probe_signals.push_back("frame changed after a key press at step " + std::to_string(*responsive_step_));
            r.findings.push_back({Severity::minor, FeedbackCategory::experience,
                                  "the objective could not be confirmed from the screen alone", {}});
        } else {
            r.outcome = rendered_ ? RunOutcome::blocked_by_bug : RunOutcome::could_not_start;
            r.confidence = Confidence::medium;
            r.findings.push_back({Severity::blocker, FeedbackCategory::controls,
                                  "the game did not react to arrow keys or Space", {}});
            r.most_blocking = 0;
            r.fixes.push_back({"the game does not react to key presses",
                               "register keyboard handlers for the documented controls"});
        }
        return {render_report(r)};
    }

private:
    Stage stage_ = Stage::start;
    Image last_;
    bool rendered_ = false;
    int render_step_ = 0;
    std::optional<int> responsive_step_;
    int attempt_ = 0;
};

std::unique_ptr<ScriptedGuiBackend::Policy> pick_policy(const Image& first) {
    if (fits_snake(first)) {
        const auto f = probe_snake(first);
        if (f.head && f.body > 0) return std::make_unique<SnakePolicy>();
    }
    if (colour_count(first, 3) >= 2) return std::make_unique<GenericPolicy>();
    return nullptr;
}

std::optional<Image> decode(const ImageAttachment* img) {
    if (!img) return std::nullopt;
    return browser::decode_png(img->png);
}

}  // namespace

ScriptedGuiBackend::ScriptedGuiBackend() = default;
ScriptedGuiBackend::~ScriptedGuiBackend() = default;

BackendReply ScriptedGuiBackend::complete(const BackendRequest& request) {
    if (!request.transcript) throw Error(Errc::backend_failure, "no transcript");
    const auto& transcript = *request.transcript;
    const Message* intro = first_user_message(transcript);
    if (!intro) throw Error(Errc::script_incomplete, "no opening message");

    Turn t;
    t.mode = detect_mode(intro->text);
    t.phase = request.phase;
    t.criteria = parse_criteria(intro->text);
    t.turns_since_user = tool_turns_since_user(transcript);
    const Message& last = transcript.back();
    if (last.role == "tool") {
        t.tool_error = last.text.rfind("error:", 0) == 0;
        static const std::regex step_re(R"(^step (\d+))");
        std::smatch m;
        if (std::regex_search(last.text, m, step_re)) t.step = std::stoi(m[1]);
        if (!last.images.empty()) t.frame = browser::decode_png(last.images.front().png);
    } else if (&last == intro && !intro->images.empty()) {
        t.frame = browser::decode_png(intro->images.front().png);
    }

    Policy* policy = nullptr;
    {
        std::lock_guard lock(mutex_);
        auto& slot = sessions_[request.session_id];
        // A transcript holding only the opening message is a new session.
        if (transcript.size() == 1 || !slot) {
            const auto first = decode(intro->images.empty() ? nullptr : &intro->images.front());
            slot = first ? pick_policy(*first) : nullptr;
            if (!slot) throw Error(Errc::script_incomplete, "no scripted policy matches the opening screen");
        }
        policy = slot.get();
    }
    return policy->next(t);
}

}  // namespace playforge::agent
