#include "playforge/serve/hub.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "httplib.h"
#include "playforge/agent/guide.hpp"
#include "playforge/arena/task_io.hpp"
#include "playforge/browser/static_server.hpp"
#include "playforge/error.hpp"

namespace playforge::serve {

namespace {

// Collapses whitespace runs (newlines included) into single spaces and trims.
std::string one_line(std::string_view text) {
    std::string out;
    bool pending = false;
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            pending = !out.empty();
            continue;
        }
        if (pending) out += ' ';
        pending = false;
        out += c;
    }
    return out;
}

std::string without_arrow(std::string text) {
    const std::string arrow(report::kFixArrow);
    for (auto pos = text.find(arrow); pos != std::string::npos; pos = text.find(arrow, pos)) {
        text.replace(pos, arrow.size(), "->");
    }
    return text;
}

void send(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json; charset=utf-8");
}

void fail(httplib::Response& res, int status, const std::string& message, json extra = json::object()) {
    extra["error"] = message;
    send(res, status, extra);
}

}  // namespace

HumanForm form_from_json(const json& j) {
    if (!j.is_object()) throw Error(Errc::invariant_violation, "form must be a JSON object");
    HumanForm f;
    f.could_do = j.value("could_do", "");
    f.could_not_do = j.value("could_not_do", "");
    f.bugs = j.value("bugs", "");
    f.completion_claim = j.value("completion_claim", false);
    for (const auto& s : j.value("suggestions", json::array())) {
        if (s.is_string()) {
            f.suggestions.push_back({s.get<std::string>(), ""});
        } else if (s.is_object()) {
            f.suggestions.push_back({s.value("text", ""), s.value("observation", "")});
        } else {
            throw Error(Errc::invariant_violation, "suggestion must be text or {text, observation}");
        }
    }
    return f;
}

report::PlayReport report_from_form(const HumanForm& form) {
    using namespace report;
    PlayReport r;
    r.outcome = form.completion_claim ? RunOutcome::completed : RunOutcome::blocked_by_bug;
    r.confidence = form.completion_claim ? Confidence::high : Confidence::medium;
    r.probe_signals.push_back("human playtester report");

    if (auto s = one_line(form.could_do); !s.empty()) r.interaction_log.push_back("could do: " + s);
    if (auto s = one_line(form.could_not_do); !s.empty()) {
        r.interaction_log.push_back("could not do: " + s);
    }
    std::istringstream bugs(form.bugs);
    for (std::string line; std::getline(bugs, line);) {
        if (auto s = one_line(line); !s.empty()) {
            r.findings.push_back({Severity::major, FeedbackCategory::functionality, s, {}});
        }
    }
    for (const auto& sug : form.suggestions) {
        const auto change = one_line(sug.text);
        if (change.empty()) continue;
        auto observation = one_line(sug.observation);
        if (observation.empty()) observation = change;
        r.fixes.push_back({without_arrow(observation), change});
    }
    if (r.interaction_log.empty() && r.findings.empty() && r.fixes.empty() && !form.completion_claim) {
        throw Error(Errc::invariant_violation, "empty report form");
    }
    if (!form.completion_claim && !r.findings.empty()) r.most_blocking = 0;
    if (!r.fixes.empty()) r.fix_direction = without_arrow(r.fixes.front().suggested_change);
    validate(r);
    return r;
}

struct Hub::Session {
    std::string id;
    std::string mode;  // playtester | judge
    int round = 0;
    std::chrono::milliseconds budget{0};
    std::chrono::steady_clock::time_point deadline;
    std::string prompt;
    agent::GameGuide guide;
    arena::Rubric rubric;  // judge only
    std::unique_ptr<browser::StaticServer> host;
    std::string build_url;

    std::optional<report::PlayReport> report;
    std::optional<std::vector<arena::Verdict>> verdicts;
    std::string idempotency_key;
    json receipt;
};

Hub::Hub(int port, Clock clock) : clock_(std::move(clock)), server_(std::make_unique<httplib::Server>()) {
    // httplib's default adds SO_REUSEPORT, which would let a second hub share the port.
    server_->set_socket_options([](socket_t sock) {
        int yes = 1;
        setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
    });
    routes();
    port_ = port == 0 ? server_->bind_to_any_port("127.0.0.1") : port;
    if (port_ <= 0 || (port != 0 && !server_->bind_to_port("127.0.0.1", port))) {
        throw Error(Errc::port_unavailable, "cannot bind UI port " + std::to_string(port));
    }
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
}

Hub::~Hub() { stop(); }

void Hub::stop() {
    if (server_) server_->stop();
    if (thread_.joinable()) thread_.join();
    std::lock_guard lock(mutex_);
    for (auto& [id, s] : sessions_) s->host.reset();
}

std::string Hub::base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }

void Hub::on_session(std::function<void(const std::string&)> fn) {
    std::lock_guard lock(mutex_);
    on_session_ = std::move(fn);
}

std::vector<std::string> Hub::session_ids() const {
    std::lock_guard lock(mutex_);
    std::vector<std::string> ids;
    for (const auto& [id, s] : sessions_) ids.push_back(id);
    return ids;
}

std::shared_ptr<Hub::Session> Hub::find(const std::string& id) const {
    std::lock_guard lock(mutex_);
    const auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second;
}

std::shared_ptr<Hub::Session> Hub::open(std::shared_ptr<Session> s) {
    s->deadline = clock_() + s->budget;
    std::function<void(const std::string&)> notify;
    {
        std::lock_guard lock(mutex_);
        sessions_[s->id] = s;
        notify = on_session_;
    }
    if (notify) notify(s->id);
    return s;
}

std::optional<report::PlayReport> Hub::await_report(const loop::HumanRequest& request) {
    auto s = std::make_shared<Session>();
    s->id = request.task_id + "-r" + std::to_string(request.round);
    s->mode = "playtester";
    s->round = request.round;
    s->budget = request.budget;
    s->prompt = request.prompt;
    s->guide = request.guide;
    s->host = std::make_unique<browser::StaticServer>(request.build);
    s->build_url = s->host->url();
    open(s);

    std::unique_lock lock(mutex_);
    while (!s->report && clock_() < s->deadline) {
        changed_.wait_for(lock, std::chrono::milliseconds(20));
    }
    s->host.reset();
    return s->report;
}

std::string Hub::open_judge_session(const arena::GameTask& task, const arena::GameBuild& build,
                                    std::chrono::milliseconds budget) {
    auto s = std::make_shared<Session>();
    s->id = task.id + "-judge";
    s->mode = "judge";
    s->round = build.round;
    s->budget = budget;
    s->prompt = task.prompt;
    if (std::filesystem::exists(build.root / "GAME_GUIDE.md")) {
        s->guide = agent::parse_guide(arena::read_text_file(build.root / "GAME_GUIDE.md"));
    }
    s->rubric = task.rubric;
    s->host = std::make_unique<browser::StaticServer>(build);
    s->build_url = s->host->url();
    return open(s)->id;
}

std::optional<std::vector<arena::Verdict>> Hub::await_verdicts(const std::string& id) {
    auto s = find(id);
    if (!s) throw Error(Errc::config_error, "no session " + id);
    std::unique_lock lock(mutex_);
    while (!s->verdicts && clock_() < s->deadline) {
        changed_.wait_for(lock, std::chrono::milliseconds(20));
    }
    s->host.reset();
    return s->verdicts;
}

void Hub::routes() {
    auto& srv = *server_;
    srv.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                             {"Access-Control-Allow-Headers", "Content-Type, Idempotency-Key"},
                             {"Cache-Control", "no-store"}});
    srv.Options(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    srv.Get(R"(/session/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        const auto s = find(req.matches[1]);
        if (!s) return fail(res, 404, "unknown session");
        std::lock_guard lock(mutex_);
        const auto now = clock_();
        const bool done = s->report || s->verdicts;
        const auto remaining =
            std::max<long long>(0, std::chrono::duration_cast<std::chrono::milliseconds>(s->deadline - now).count());
        json j = {{"id", s->id},
                  {"mode", s->mode},
                  {"build_url", s->build_url},
                  {"round", s->round},
                  {"budget_ms", s->budget.count()},
                  {"remaining_ms", remaining},
                  {"state", done ? "submitted" : now >= s->deadline ? "expired" : "open"},
                  {"prompt", s->prompt},
                  {"guide", {{"controls", s->guide.controls},
                             {"objective", s->guide.objective},
                             {"success_condition", s->guide.success_condition}}}};
        if (s->mode == "judge") j["rubric"] = s->rubric.criteria;
        send(res, 200, j);
    });

    // Shared submit path: expiry, idempotent replay, then `accept`.
    const auto submit = [this](const httplib::Request& req, httplib::Response& res, const std::string& mode,
                               const std::function<json(Session&, const std::string& body)>& accept) {
        const auto s = find(req.matches[1]);
        if (!s) return fail(res, 404, "unknown session");
        std::lock_guard lock(mutex_);
        if (s->mode != mode) return fail(res, 409, "session is in " + s->mode + " mode");
        const auto key = req.get_header_value("Idempotency-Key");
        if (s->report || s->verdicts) {
            if (!key.empty() && key == s->idempotency_key) return send(res, 200, s->receipt);
            return fail(res, 409, "already submitted");
        }
        if (clock_() >= s->deadline) return fail(res, 410, "session budget expired");
        try {
            s->receipt = accept(*s, req.body);
        } catch (const json::exception& e) {
            return fail(res, 400, e.what());
        } catch (const Error& e) {
            if (e.code() == Errc::missing_verdict) {
                return fail(res, 422, "missing criteria", json::parse(e.what()));
            }
            return fail(res, e.code() == Errc::invariant_violation ? 422 : 400, e.what());
        }
        s->idempotency_key = key;
        changed_.notify_all();
        send(res, 200, s->receipt);
    };

    srv.Post(R"(/session/([^/]+)/report)", [submit](const httplib::Request& req, httplib::Response& res) {
        submit(req, res, "playtester", [](Session& s, const std::string& body) {
            const auto j = json::parse(body);
            report::PlayReport r;
            if (j.is_object() && j.contains("report")) {
                r = report::parse_report(j.at("report").get<std::string>());
            } else {
                r = report_from_form(form_from_json(j));
            }
            s.report = r;
            return json{{"accepted", true},
                        {"outcome", report::to_string(r.outcome)},
                        {"fixes", r.fixes.size()}};
        });
    });

    srv.Post(R"(/session/([^/]+)/verdicts)", [submit](const httplib::Request& req, httplib::Response& res) {
        submit(req, res, "judge", [](Session& s, const std::string& body) {
            auto j = json::parse(body);
            if (j.is_object() && j.contains("verdicts")) j = j.at("verdicts");
            if (!j.is_array()) throw Error(Errc::malformed_report, "verdicts must be an array");
            std::vector<arena::Verdict> verdicts;
            std::set<std::string> seen;
            for (const auto& v : j) {
                const auto id = v.at("criterion_id").get<std::string>();
                if (!s.rubric.find(id)) throw Error(Errc::dangling_verdict, "unknown criterion " + id);
                if (!seen.insert(id).second) throw Error(Errc::duplicate_verdict, "duplicate criterion " + id);
                verdicts.push_back({id, v.at("passed").get<bool>(), {}});
            }
            json missing = json::array();
            for (const auto& c : s.rubric.criteria) {
                if (!seen.count(c.id)) missing.push_back(c.id);
            }
            if (!missing.empty()) {
                throw Error(Errc::missing_verdict, json{{"missing", missing}}.dump());
            }
            const auto score = arena::rubric_score(verdicts, s.rubric);
            s.verdicts = std::move(verdicts);
            return json{{"accepted", true}, {"score", score}};
        });
    });
}

}  // namespace playforge::serve
