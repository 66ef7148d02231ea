#include <future>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>
#include <sstream>

#include "doctest.h"
#include "httplib.h"
#include "playforge/arena/task_io.hpp"
#include "playforge/cli/cli.hpp"
#include "playforge/loop/loop.hpp"
#include "support/temp_dir.hpp"
#include "support/tree.hpp"

using namespace playforge;
using nlohmann::json;
using playforge::testing::fixtures_dir;
using playforge::testing::snapshot;
using playforge::testing::TempDir;

namespace {

struct Result {
    int code = -1;
    std::string out;
    std::string err;
};

Result invoke(std::vector<std::string> args) {
    std::ostringstream out, err;
    Result r;
    r.code = cli::run(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::string tasks() { return (fixtures_dir() / "tasks").string(); }

// A port nothing listens on right now.
int free_port() {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr));
    socklen_t len = sizeof(addr);
    ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
    ::close(fd);
    return ntohs(addr.sin_port);
}

}  // namespace

TEST_CASE("run play2code on the snake task") {
    TempDir tmp("cli");
    const auto runs = (tmp / "runs").string();
    const auto r = invoke({"run", "--tasks", tasks(), "--runs", runs, "--task", "snake-basic", "--mode", "play2code",
                        "--backend", "scripted"});
    CHECK(r.code == cli::kOk);
    CHECK(r.out == "snake-basic: early_complete after 2 rounds\n");
    const auto rec = loop::load_record(tmp / "runs" / "snake-basic" / "record.json");
    CHECK(rec.termination == loop::Termination::early_complete);

    const auto mem = invoke({"memory", "list", "--runs", runs});
    CHECK(mem.code == cli::kOk);
    CHECK_FALSE(mem.out.empty());
    std::istringstream lines(mem.out);
    for (std::string line; std::getline(lines, line);) CHECK(json::parse(line).contains("layer"));

    const auto q = invoke({"memory", "query", "--runs", runs, "--requester", "gui-player", "--task", "snake-basic"});
    CHECK(q.code == cli::kOk);
    std::istringstream qlines(q.out);
    for (std::string line; std::getline(qlines, line);) {
        const auto e = json::parse(line);
        if (e.at("layer") == "skill") CHECK(e.at("owner") == "gui-player");
    }
    CHECK(invoke({"memory", "query", "--runs", runs, "--requester", "shared", "--task", "x"}).code == cli::kConfigError);
}

TEST_CASE("direct mode runs one round per task") {
    TempDir tmp("cli");
    const auto r = invoke({"run", "--tasks", tasks(), "--runs", (tmp / "runs").string(), "--task", "snake-basic",
                        "--task", "memory-match", "--mode", "direct", "--r-max", "4"});
    CHECK(r.code == cli::kOk);
    for (const auto* id : {"snake-basic", "memory-match"}) {
        const auto rec = loop::load_record(tmp / "runs" / id / "record.json");
        CHECK(rec.rounds.size() == 1);
        CHECK(rec.config.mode == loop::RunMode::direct);
    }
}

TEST_CASE("config errors exit 1") {
    TempDir tmp("cli");
    auto r = invoke({"run", "--tasks", (tmp / "nope").string(), "--runs", (tmp / "runs").string()});
    CHECK(r.code == cli::kConfigError);
    CHECK(r.err.find("tasks directory not found") != std::string::npos);

    CHECK(invoke({"run", "--tasks", tasks(), "--mode", "sideways"}).code == cli::kConfigError);
    CHECK(invoke({"run", "--tasks", tasks(), "--task", "ghost"}).code == cli::kConfigError);
    CHECK(invoke({"run", "--tasks", tasks(), "--r-max", "0", "--runs", (tmp / "r").string()}).code ==
          cli::kConfigError);
    CHECK(invoke({"run", "--tasks", tasks(), "--viewport", "wide"}).code == cli::kConfigError);
    CHECK(invoke({"run", "--tasks", tasks(), "--backend", "oracle"}).code == cli::kConfigError);
    CHECK(invoke({"run", "--parallel", "0"}).code == cli::kConfigError);
    CHECK(invoke({"frobnicate"}).code == cli::kConfigError);
    CHECK(invoke({}).code == cli::kConfigError);
    CHECK(invoke({"--help"}).code == cli::kOk);
}

TEST_CASE("an unreachable model endpoint is a fatal run") {
    TempDir tmp("cli");
    const auto r = invoke({"run", "--tasks", tasks(), "--runs", (tmp / "runs").string(), "--task", "snake-basic",
                        "--backend", "http", "--api-base", "http://127.0.0.1:" + std::to_string(free_port()) + "/v1"});
    CHECK(r.code == cli::kFatal);
    CHECK(r.out.find("fatal_error") != std::string::npos);
}

TEST_CASE("stats") {
    TempDir tmp("cli");
    auto empty = invoke({"stats", "--runs", (tmp / "empty").string()});
    CHECK(empty.code == cli::kConfigError);
    CHECK(empty.err.find("no run records") != std::string::npos);

    loop::TaskRunRecord rec;
    rec.task_id = "t";
    rec.effective_rounds = 3;
    rec.rounds.resize(3);
    arena::write_text_file(tmp / "one" / "t" / "record.json", loop::to_json(rec).dump());
    const auto one = invoke({"stats", "--runs", (tmp / "one").string()});
    CHECK(one.code == cli::kOk);
    CHECK(one.out.find("mean 3.00") != std::string::npos);
    CHECK(std::filesystem::exists(tmp / "one" / "stats" / "summary.json"));
}

TEST_CASE("a judged pack yields the eight-genre table") {
    TempDir tmp("cli");
    const auto runs = (tmp / "runs").string();
    REQUIRE(invoke({"run", "--tasks", tasks(), "--runs", runs, "--mode", "direct", "--judge", "--parallel", "3"}).code ==
            cli::kOk);
    const auto s = invoke({"stats", "--runs", runs});
    CHECK(s.code == cli::kOk);
    for (const auto* row : {"Puzzle,", "Strategy,", "Card,", "Action,", "Platformer,", "Management,", "Shooter,",
                            "Other,", "Avg.,10,"}) {
        CHECK(s.out.find(std::string("\n") + row) != std::string::npos);
    }
    const auto csv = arena::read_text_file(tmp / "runs" / "stats" / "genre_table.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 10);

    const auto e = invoke({"eval", "--tasks", tasks(), "--runs", runs, "--task", "snake-basic", "--task", "sokoban-mini"});
    CHECK(e.code == cli::kOk);
    const auto results = json::parse(arena::read_text_file(tmp / "runs" / "eval" / "results.json"));
    CHECK(results.at("tasks").size() == 2);
    CHECK(std::filesystem::exists(tmp / "runs" / "eval" / "summary.json"));
}

TEST_CASE("re-running into a fresh runs dir gives identical files") {
    TempDir a("cli"), b("cli");
    const std::vector<std::string> base = {"run", "--tasks", tasks(), "--task", "snake-basic", "--judge", "--runs"};
    auto args_a = base, args_b = base;
    args_a.push_back((a / "runs").string());
    args_b.push_back((b / "runs").string());
    REQUIRE(invoke(args_a).code == cli::kOk);
    REQUIRE(invoke(args_b).code == cli::kOk);
    CHECK(snapshot(a / "runs") == snapshot(b / "runs"));
}

TEST_CASE("serve advances a human_playtester run") {
    TempDir tmp("cli");
    const int port = free_port();
    auto served = std::async(std::launch::async, [&] {
        return invoke({"serve", "--tasks", tasks(), "--runs", (tmp / "runs").string(), "--task", "snake-basic",
                    "--ui-port", std::to_string(port), "--budget-ms", "60000"});
    });
    httplib::Client c("127.0.0.1", port);
    httplib::Result res;
    for (int i = 0; i < 500; ++i) {
        res = c.Get("/session/snake-basic-r1");
        if (res && res->status == 200) break;
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
    REQUIRE(res);
    REQUIRE(res->status == 200);
    CHECK(json::parse(res->body).at("mode") == "playtester");
    CHECK(c.Get("/session/unknown")->status == 404);
    const auto post = c.Post("/session/snake-basic-r1/report",
                             json{{"could_do", "everything"}, {"completion_claim", true}}.dump(), "application/json");
    REQUIRE(post);
    CHECK(post->status == 200);
    const auto r = served.get();
    CHECK(r.code == cli::kOk);
    CHECK(r.out.find("session open: http://127.0.0.1:" + std::to_string(port) + "/session/snake-basic-r1") !=
          std::string::npos);
    CHECK(loop::load_record(tmp / "runs" / "snake-basic" / "record.json").termination ==
          loop::Termination::early_complete);
}

TEST_CASE("bench with feasibility levels writes pass@k") {
    TempDir tmp("cli");
    const auto r = invoke({"bench", "--tasks", tasks(), "--runs", (tmp / "runs").string(), "--task", "snake-basic",
                        "--levels", (fixtures_dir() / "levels").string(), "--episodes", "3", "--k", "1,3"});
    CHECK(r.code == cli::kOk);
    CHECK(arena::read_text_file(tmp / "runs" / "eval" / "pass_at_k.csv") ==
          "Agent,pass@1,pass@3\nscripted-gui,0.5000,0.5000\n");
    CHECK(invoke({"bench", "--tasks", tasks(), "--runs", (tmp / "r2").string(), "--task", "snake-basic", "--levels",
               (fixtures_dir() / "levels").string(), "--episodes", "3", "--k", "5"})
              .code == cli::kConfigError);
}
