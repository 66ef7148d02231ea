#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "playforge/agent/backend.hpp"

namespace playforge::agent {

// Deterministic GUI player. Picks a policy from the first screenshot
// (pixel probes only) and keeps per-session state keyed on session_id:
//   snake   16x16 grid with a #00ff00 head, probes head/food/score cells
//   generic any multi-colour screen: looks, waits, presses arrows
// A uniform screen matches no policy: ScriptIncomplete.
class ScriptedGuiBackend final : public ModelBackend {
public:
    ScriptedGuiBackend();
    ~ScriptedGuiBackend() override;

    std::string label() const override { return "scripted-gui"; }
    BackendReply complete(const BackendRequest& request) override;

    class Policy;

private:
    std::mutex mutex_;
    std::map<std::string, std::unique_ptr<Policy>> sessions_;
};

// One game-agent patch: when the latest user message contains `when`,
// replace `find` with `replace` in `file`.
struct PatchRule {
    std::string when;
    std::string file;
    std::string find;
    std::string replace;
    std::string lesson;  // saved to episode memory after the patch
};

// Deterministic game agent. Round 1 writes the source build mapped to the
// task (or the fallback) file by file; later rounds apply matching patch
// rules; self-review reads the code and reports what a player would hit.
class ScriptedGameBackend final : public ModelBackend {
public:
    ScriptedGameBackend(std::map<std::string, std::filesystem::path> sources, std::filesystem::path fallback,
                        std::vector<PatchRule> patches);

    // snake-basic starts from the broken-input snake; everything else from block-mover.
    static ScriptedGameBackend standard(const std::filesystem::path& fixtures_dir);

    std::string label() const override { return "scripted-game"; }
    BackendReply complete(const BackendRequest& request) override;

private:
    const std::filesystem::path& source_for(const std::string& session_id) const;

    std::map<std::string, std::filesystem::path> sources_;
    std::filesystem::path fallback_;
    std::vector<PatchRule> patches_;
};

}  // namespace playforge::agent
