#pragma once

#include "playforge/browser/launcher.hpp"
#include "support/temp_dir.hpp"

namespace playforge::testing {

// One page host per test binary, started on first use.
inline browser::Browser& shared_browser() {
    static browser::Browser instance([] {
        auto c = browser::BrowserConfig::from_env();
        c.seed = 7;
        return c;
    }());
    return instance;
}

inline arena::GameBuild fixture_build(const std::string& name) {
    return {fixtures_dir() / "builds" / name, "index.html", 1};
}

}  // namespace playforge::testing
