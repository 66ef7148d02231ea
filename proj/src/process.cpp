#include "playforge/process.hpp"

#include <array>
#include <cstdio>

#include <sys/wait.h>

#include "playforge/error.hpp"

namespace playforge {

CommandResult run_command(const std::filesystem::path& cwd, const std::string& command) {
    std::string quoted;
    for (char c : cwd.string()) {
        if (c == '\'') quoted += "'\\''";
        else quoted += c;
    }
    const std::string full = "cd '" + quoted + "' && (" + command + ") 2>&1";
    FILE* pipe = popen(full.c_str(), "r");
    if (!pipe) throw Error(Errc::fatal_error, "could not start: " + command);
    CommandResult out;
    std::array<char, 4096> buf{};
    while (std::size_t n = fread(buf.data(), 1, buf.size(), pipe)) out.output.append(buf.data(), n);
    const int status = pclose(pipe);
    out.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : 128;
    return out;
}

}  // namespace playforge
