#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace playforge {

// Every failure the library raises carries one of these codes so callers
// (and tests) can branch on the kind without parsing messages.
enum class Errc {
    // arena model
    missing_file,
    malformed_rubric,
    malformed_task,
    empty_prompt,
    missing_verdict,
    dangling_verdict,
    duplicate_verdict,
    empty_corpus,
    // browser driver
    port_unavailable,
    build_invalid,
    load_timeout,
    browser_unavailable,
    out_of_bounds,
    unknown_key,
    session_closed,
    protocol_error,
    // agents
    backend_failure,
    build_emission_invalid,
    script_incomplete,
    // reports
    invariant_violation,
    missing_heading,
    unknown_outcome,
    unknown_confidence,
    malformed_fix_item,
    malformed_report,
    // memory
    consistency_violation,
    // loop
    verify_command_failed,
    load_check_failed,
    fatal_error,
    // statistics
    empty_input,
    k_out_of_range,
    item_set_mismatch,
    key_set_mismatch,
    too_few_games,
    too_few_rounds,
    // cli / serve
    config_error,
    no_records,
};

std::string_view to_string(Errc code);

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

}  // namespace playforge
