#pragma once

#include <filesystem>
#include <string>

namespace playforge {

struct CommandResult {
    int exit_code = 0;
    std::string output;  // stdout and stderr interleaved
};

// Runs `command` through /bin/sh in `cwd`.
CommandResult run_command(const std::filesystem::path& cwd, const std::string& command);

}  // namespace playforge
