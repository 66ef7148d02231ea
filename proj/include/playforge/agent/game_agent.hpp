#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "playforge/agent/backend.hpp"
#include "playforge/agent/guide.hpp"
#include "playforge/arena/types.hpp"
#include "playforge/memory/store.hpp"
#include "playforge/report/play_report.hpp"

namespace playforge::agent {

// self_review stands in for the GUI step in the no-GUI baseline.
enum class GamePhase { design, assets, implementation, verification, memory_capture, self_review };

std::string_view to_string(GamePhase phase);

// Returns the error text, or nullopt when the build passes.
using BuildVerifier = std::function<std::optional<std::string>(const arena::GameBuild&)>;

struct GameRoundInput {
    const arena::GameTask* task = nullptr;
    int round = 1;
    std::filesystem::path round_dir;  // runs/<task>/<round>; the build goes to <round_dir>/build
    std::optional<std::filesystem::path> prior_build;
    std::optional<report::PlayReport> report;
    std::vector<memory::MemoryEntry> memory;
    std::vector<GamePhase> phases;  // defaults to phases_for(round, ...) when empty
    BuildVerifier verify;           // unset: verification passes trivially
    int max_repairs = 2;
    bool allow_shell = false;
};

struct GameRoundResult {
    arena::GameBuild build;
    GameGuide guide;
    std::vector<memory::MemoryEntry> memory_writes;
    bool verified = true;
    std::vector<std::string> verify_errors;  // one per failed attempt, in order
    int repairs = 0;
    std::optional<report::PlayReport> self_report;
    std::vector<GamePhase> phases_run;
};

// Round 1: design, assets, implementation, verification, memory capture.
// Later rounds skip design and assets.
std::vector<GamePhase> phases_for(int round);

// Throws BackendFailure, BuildEmissionInvalid (no entry file or no guide).
GameRoundResult run_game_agent_round(ModelBackend& backend, const GameRoundInput& input);

std::vector<ToolSpec> game_tools(GamePhase phase, bool allow_shell);

}  // namespace playforge::agent
