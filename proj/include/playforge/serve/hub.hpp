#pragma once

#include <chrono>
#include <condition_variable>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "playforge/arena/types.hpp"
#include "playforge/loop/loop.hpp"
#include "playforge/report/play_report.hpp"

namespace httplib {
class Server;
}

namespace playforge::serve {

using nlohmann::json;
using Clock = std::function<std::chrono::steady_clock::time_point()>;

// Free-form human playtester fields.
struct HumanForm {
    std::string could_do;
    std::string could_not_do;
    std::string bugs;
    struct Suggestion {
        std::string text;
        std::string observation;  // the bug excerpt it answers; empty when unpaired
    };
    std::vector<Suggestion> suggestions;
    bool completion_claim = false;
};

// Throws InvariantViolation for a form with every field empty.
report::PlayReport report_from_form(const HumanForm& form);
HumanForm form_from_json(const json& j);

// Hosts the human-in-the-loop sessions over HTTP:
//   GET  /session/{id}           {build_url, round, budget_ms, mode, ...}
//   POST /session/{id}/report    canonical report document or human form fields
//   POST /session/{id}/verdicts  [{criterion_id, passed}]
// Deadlines are enforced here; a late submission gets 410.
class Hub final : public loop::HumanChannel {
public:
    explicit Hub(int port = 0, Clock clock = [] { return std::chrono::steady_clock::now(); });
    ~Hub() override;

    Hub(const Hub&) = delete;
    Hub& operator=(const Hub&) = delete;

    int port() const { return port_; }
    std::string base_url() const;
    void stop();

    // Human playtester round: serves the build, opens session
    // "<task>-r<round>" and blocks until a report arrives or the budget ends.
    std::optional<report::PlayReport> await_report(const loop::HumanRequest& request) override;

    // Human judge session "<task>-judge" over one build.
    std::string open_judge_session(const arena::GameTask& task, const arena::GameBuild& build,
                                   std::chrono::milliseconds budget = std::chrono::minutes(10));
    // Blocks until verdicts arrive or the budget ends.
    std::optional<std::vector<arena::Verdict>> await_verdicts(const std::string& id);

    // Called with each new session id, e.g. to print its URL.
    void on_session(std::function<void(const std::string& id)> fn);

    std::vector<std::string> session_ids() const;

private:
    struct Session;

    void routes();
    std::shared_ptr<Session> find(const std::string& id) const;
    std::shared_ptr<Session> open(std::shared_ptr<Session> s);

    Clock clock_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    int port_ = 0;
    mutable std::mutex mutex_;
    std::condition_variable changed_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    std::function<void(const std::string&)> on_session_;
};

}  // namespace playforge::serve
