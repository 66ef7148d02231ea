#include "playforge/error.hpp"

namespace playforge {

std::string_view to_string(Errc code) {
    switch (code) {
    case Errc::missing_file: return "MissingFile";
    case Errc::malformed_rubric: return "MalformedRubric";
    case Errc::malformed_task: return "MalformedTask";
    case Errc::empty_prompt: return "EmptyPrompt";
    case Errc::missing_verdict: return "MissingVerdict";
    case Errc::dangling_verdict: return "DanglingVerdict";
    case Errc::duplicate_verdict: return "DuplicateVerdict";
    case Errc::empty_corpus: return "EmptyCorpus";
    case Errc::port_unavailable: return "PortUnavailable";
    case Errc::build_invalid: return "BuildInvalid";
    case Errc::load_timeout: return "LoadTimeout";
    case Errc::browser_unavailable: return "BrowserUnavailable";
    case Errc::out_of_bounds: return "OutOfBounds";
    case Errc::unknown_key: return "UnknownKey";
    case Errc::session_closed: return "SessionClosed";
    case Errc::protocol_error: return "ProtocolError";
    case Errc::backend_failure: return "BackendFailure";
    case Errc::build_emission_invalid: return "BuildEmissionInvalid";
    case Errc::script_incomplete: return "ScriptIncomplete";
    case Errc::invariant_violation: return "InvariantViolation";
    case Errc::missing_heading: return "MissingHeading";
    case Errc::unknown_outcome: return "UnknownOutcome";
    case Errc::unknown_confidence: return "UnknownConfidence";
    case Errc::malformed_fix_item: return "MalformedFixItem";
    case Errc::malformed_report: return "MalformedReport";
    case Errc::consistency_violation: return "ConsistencyViolation";
    case Errc::verify_command_failed: return "VerifyCommandFailed";
    case Errc::load_check_failed: return "LoadCheckFailed";
    case Errc::fatal_error: return "FatalError";
    case Errc::empty_input: return "EmptyInput";
    case Errc::k_out_of_range: return "KOutOfRange";
    case Errc::item_set_mismatch: return "ItemSetMismatch";
    case Errc::key_set_mismatch: return "KeySetMismatch";
    case Errc::too_few_games: return "TooFewGames";
    case Errc::too_few_rounds: return "TooFewRounds";
    case Errc::config_error: return "ConfigError";
    case Errc::no_records: return "NoRecords";
    }
    return "Unknown";
}

}  // namespace playforge
