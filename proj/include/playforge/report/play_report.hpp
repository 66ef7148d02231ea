#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "playforge/arena/types.hpp"

namespace playforge::report {

using arena::Dimension;
using nlohmann::json;

enum class RunOutcome { completed, reached_ending, blocked_by_bug, could_not_start };
enum class Confidence { low, medium, high };
enum class Severity { blocker, major, minor };
enum class FeedbackCategory { functionality, controls, experience, visual, other };

inline constexpr std::array<RunOutcome, 4> kAllOutcomes = {
    RunOutcome::completed, RunOutcome::reached_ending, RunOutcome::blocked_by_bug,
    RunOutcome::could_not_start};
inline constexpr std::array<Confidence, 3> kAllConfidences = {
    Confidence::low, Confidence::medium, Confidence::high};
inline constexpr std::array<FeedbackCategory, 5> kAllCategories = {
    FeedbackCategory::functionality, FeedbackCategory::controls, FeedbackCategory::experience,
    FeedbackCategory::visual, FeedbackCategory::other};

std::string_view to_string(RunOutcome v);
std::string_view to_string(Confidence v);
std::string_view to_string(Severity v);
std::string_view to_string(FeedbackCategory v);
std::optional<RunOutcome> parse_outcome(std::string_view text);
std::optional<Confidence> parse_confidence(std::string_view text);
std::optional<Severity> parse_severity(std::string_view text);
std::optional<FeedbackCategory> parse_category(std::string_view text);

struct Finding {
    Severity severity = Severity::minor;
    FeedbackCategory category = FeedbackCategory::other;
    std::string text;
    std::vector<int> evidence;

    bool operator==(const Finding&) const = default;
};

// Rendered as "observation → suggested change".
struct FixItem {
    std::string observation;
    std::string suggested_change;

    bool operator==(const FixItem&) const = default;
};

struct PlayReport {
    RunOutcome outcome = RunOutcome::could_not_start;
    Confidence confidence = Confidence::low;
    std::vector<std::string> probe_signals;
    std::string interaction_log_ref;              // path of the persisted session log, may be empty
    std::vector<std::string> interaction_log;     // chronological one-line entries
    std::map<Dimension, std::string> dimension_assessments;
    std::vector<Finding> findings;
    std::optional<std::size_t> most_blocking;     // index into findings
    std::string fix_direction;
    std::vector<FixItem> fixes;

    bool operator==(const PlayReport&) const = default;
};

inline constexpr std::string_view kFixArrow = "→";

// The canonical section headings, in document order.
inline constexpr std::array<std::string_view, 7> kReportHeadings = {
    "## Run Outcome",        "## Probe Signals",       "## Interaction Log",
    "## Gameplay Assessment", "## Findings",           "## Most Blocking Issue",
    "## Recommended Fix Direction"};

// Throws Errc::invariant_violation when a text field is empty, multi-line,
// carries surrounding whitespace, or a fix observation contains the arrow.
void validate(const PlayReport& report);

std::string render_report(const PlayReport& report);
PlayReport parse_report(std::string_view text);

// Order-preserving; identical (observation, change) pairs collapse to the first.
std::vector<FixItem> extract_fix_list(const PlayReport& report);

std::string summarize(const PlayReport& report);

std::string render_fix_item(const FixItem& item);

void to_json(json& j, const PlayReport& r);
void from_json(const json& j, PlayReport& r);
void to_json(json& j, const FixItem& f);
void from_json(const json& j, FixItem& f);

}  // namespace playforge::report
