#include "playforge/report/play_report.hpp"

#include <set>
#include <sstream>

#include "playforge/error.hpp"

namespace playforge::report {

namespace {

constexpr std::array<std::string_view, 4> kOutcomeNames = {"completed", "reached-ending",
                                                           "blocked-by-bug", "could-not-start"};
constexpr std::array<std::string_view, 3> kConfidenceNames = {"low", "medium", "high"};
constexpr std::array<std::string_view, 3> kSeverityNames = {"blocker", "major", "minor"};
constexpr std::array<std::string_view, 5> kCategoryNames = {"functionality", "controls",
                                                            "experience", "visual", "other"};

template <typename Enum, std::size_t N>
std::optional<Enum> lookup(const std::array<std::string_view, N>& names, std::string_view text) {
    for (std::size_t i = 0; i < N; ++i) {
        if (names[i] == text) return static_cast<Enum>(i);
    }
    return std::nullopt;
}

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

bool starts_with(std::string_view s, std::string_view prefix) {
    return s.substr(0, prefix.size()) == prefix;
}

void check_line(std::string_view field, const std::string& value, bool allow_empty) {
    if (value.empty()) {
        if (allow_empty) return;
        throw Error(Errc::invariant_violation, std::string(field) + " must not be empty");
    }
    if (value.find_first_of("\r\n") != std::string::npos) {
        throw Error(Errc::invariant_violation, std::string(field) + " must be a single line");
    }
    if (trim(value).size() != value.size()) {
        throw Error(Errc::invariant_violation,
                    std::string(field) + " must not carry leading or trailing whitespace");
    }
}

std::string render_evidence(const std::vector<int>& evidence) {
    if (evidence.empty()) return "(evidence: none)";
    std::string out = "(evidence: ";
    for (std::size_t i = 0; i < evidence.size(); ++i) {
        if (i) out += ", ";
        out += std::to_string(evidence[i]);
    }
    return out + ")";
}

std::vector<int> parse_evidence(std::string_view list) {
    std::vector<int> out;
    list = trim(list);
    if (list == "none" || list.empty()) return out;
    std::size_t pos = 0;
    while (pos <= list.size()) {
        auto comma = list.find(',', pos);
        if (comma == std::string_view::npos) comma = list.size();
        const auto item = std::string(trim(list.substr(pos, comma - pos)));
        try {
            std::size_t used = 0;
            out.push_back(std::stoi(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::logic_error&) {
            throw Error(Errc::malformed_report, "bad evidence index '" + item + "'");
        }
        pos = comma + 1;
    }
    return out;
}

std::string render_finding_body(const Finding& f) {
    return "[" + std::string(to_string(f.severity)) + "][" + std::string(to_string(f.category)) +
           "] " + f.text;
}

Finding parse_finding(std::string_view body) {
    Finding f;
    auto take_tag = [&](std::string_view& s) {
        if (s.empty() || s.front() != '[') {
            throw Error(Errc::malformed_report, "finding must start with [severity][category]");
        }
        const auto close = s.find(']');
        if (close == std::string_view::npos) {
            throw Error(Errc::malformed_report, "unterminated finding tag");
        }
        auto tag = s.substr(1, close - 1);
        s.remove_prefix(close + 1);
        return tag;
    };
    const auto sev_tag = take_tag(body);
    const auto cat_tag = take_tag(body);
    const auto sev = parse_severity(sev_tag);
    if (!sev) throw Error(Errc::malformed_report, "unknown severity '" + std::string(sev_tag) + "'");
    const auto cat = parse_category(cat_tag);
    if (!cat) throw Error(Errc::malformed_report, "unknown category '" + std::string(cat_tag) + "'");
    f.severity = *sev;
    f.category = *cat;
    body = trim(body);
    const auto ev = body.rfind(" (evidence: ");
    if (ev != std::string_view::npos && body.back() == ')') {
        const auto list = body.substr(ev + 12, body.size() - ev - 13);
        f.evidence = parse_evidence(list);
        body = trim(body.substr(0, ev));
    }
    f.text = std::string(body);
    if (f.text.empty()) throw Error(Errc::malformed_report, "finding without text");
    return f;
}

FixItem parse_fix(std::string_view body) {
    const auto arrow = body.find(kFixArrow);
    if (arrow == std::string_view::npos) {
        throw Error(Errc::malformed_fix_item,
                    "fix item is missing the '→' separator: " + std::string(body));
    }
    FixItem item;
    item.observation = std::string(trim(body.substr(0, arrow)));
    item.suggested_change = std::string(trim(body.substr(arrow + kFixArrow.size())));
    if (item.observation.empty() || item.suggested_change.empty()) {
        throw Error(Errc::malformed_fix_item, "fix item needs both an observation and a change");
    }
    return item;
}

}  // namespace

std::string_view to_string(RunOutcome v) { return kOutcomeNames[static_cast<std::size_t>(v)]; }
std::string_view to_string(Confidence v) { return kConfidenceNames[static_cast<std::size_t>(v)]; }
std::string_view to_string(Severity v) { return kSeverityNames[static_cast<std::size_t>(v)]; }
std::string_view to_string(FeedbackCategory v) {
    return kCategoryNames[static_cast<std::size_t>(v)];
}

std::optional<RunOutcome> parse_outcome(std::string_view t) {
    return lookup<RunOutcome>(kOutcomeNames, t);
}
std::optional<Confidence> parse_confidence(std::string_view t) {
    return lookup<Confidence>(kConfidenceNames, t);
}
std::optional<Severity> parse_severity(std::string_view t) {
    return lookup<Severity>(kSeverityNames, t);
}
std::optional<FeedbackCategory> parse_category(std::string_view t) {
    return lookup<FeedbackCategory>(kCategoryNames, t);
}

std::string render_fix_item(const FixItem& item) {
    return item.observation + " " + std::string(kFixArrow) + " " + item.suggested_change;
}

void validate(const PlayReport& r) {
    for (const auto& s : r.probe_signals) check_line("probe signal", s, false);
    check_line("interaction log ref", r.interaction_log_ref, true);
    for (const auto& s : r.interaction_log) check_line("interaction log entry", s, false);
    for (const auto& [dim, text] : r.dimension_assessments) check_line("assessment", text, false);
    for (const auto& f : r.findings) {
        check_line("finding text", f.text, false);
        for (int e : f.evidence) {
            if (e < 0) throw Error(Errc::invariant_violation, "negative evidence index");
        }
    }
    if (r.most_blocking && *r.most_blocking >= r.findings.size()) {
        throw Error(Errc::invariant_violation, "most_blocking does not refer to a finding");
    }
    check_line("fix direction", r.fix_direction, true);
    if (!r.fix_direction.empty() && r.fix_direction.front() == '#') {
        throw Error(Errc::invariant_violation, "fix direction must not start with a heading marker");
    }
    for (const auto& fix : r.fixes) {
        check_line("fix observation", fix.observation, false);
        check_line("fix suggested change", fix.suggested_change, false);
        if (fix.observation.find(kFixArrow) != std::string::npos) {
            throw Error(Errc::invariant_violation, "fix observation must not contain the arrow");
        }
    }
}

std::string render_report(const PlayReport& r) {
    validate(r);
    std::ostringstream out;
    out << "# Playtest Report\n\n";

    out << kReportHeadings[0] << "\n";
    out << "Run Outcome: " << to_string(r.outcome) << "\n";
    out << "Confidence: " << to_string(r.confidence) << "\n\n";

    out << kReportHeadings[1] << "\n";
    for (const auto& s : r.probe_signals) out << "- " << s << "\n";
    out << "\n";

    out << kReportHeadings[2] << "\n";
    if (!r.interaction_log_ref.empty()) out << "Ref: " << r.interaction_log_ref << "\n";
    for (const auto& s : r.interaction_log) out << "- " << s << "\n";
    out << "\n";

    out << kReportHeadings[3] << "\n";
    for (const auto& [dim, text] : r.dimension_assessments) {
        out << "- " << arena::to_string(dim) << ": " << text << "\n";
    }
    out << "\n";

    out << kReportHeadings[4] << "\n";
    for (const auto& f : r.findings) {
        out << "- " << render_finding_body(f) << " " << render_evidence(f.evidence) << "\n";
    }
    for (const auto& fix : r.fixes) out << "- FIX: " << render_fix_item(fix) << "\n";
    out << "\n";

    out << kReportHeadings[5] << "\n";
    if (r.most_blocking) {
        out << "Finding " << (*r.most_blocking + 1) << ": " << r.findings[*r.most_blocking].text
            << "\n";
    } else {
        out << "None\n";
    }
    out << "\n";

    out << kReportHeadings[6] << "\n";
    if (!r.fix_direction.empty()) out << r.fix_direction << "\n";
    return out.str();
}

PlayReport parse_report(std::string_view text) {
    std::vector<std::string_view> lines;
    {
        std::size_t pos = 0;
        while (pos <= text.size()) {
            auto nl = text.find('\n', pos);
            if (nl == std::string_view::npos) nl = text.size();
            auto line = text.substr(pos, nl - pos);
            if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
            lines.push_back(line);
            pos = nl + 1;
        }
    }

    // Locate the canonical headings; they must all appear, once, in order.
    std::array<std::size_t, kReportHeadings.size()> at{};
    std::array<bool, kReportHeadings.size()> found{};
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto line = trim(lines[i]);
        for (std::size_t h = 0; h < kReportHeadings.size(); ++h) {
            if (line == kReportHeadings[h]) {
                if (found[h]) {
                    throw Error(Errc::malformed_report,
                                "duplicate heading '" + std::string(kReportHeadings[h]) + "'");
                }
                found[h] = true;
                at[h] = i;
            }
        }
    }
    for (std::size_t h = 0; h < kReportHeadings.size(); ++h) {
        if (!found[h]) {
            throw Error(Errc::missing_heading,
                        "missing heading '" + std::string(kReportHeadings[h]) + "'");
        }
        if (h > 0 && at[h] < at[h - 1]) {
            throw Error(Errc::malformed_report,
                        "heading '" + std::string(kReportHeadings[h]) + "' is out of order");
        }
    }
    auto section = [&](std::size_t h) {
        std::vector<std::string_view> out;
        const auto end = h + 1 < at.size() ? at[h + 1] : lines.size();
        for (auto i = at[h] + 1; i < end; ++i) out.push_back(lines[i]);
        return out;
    };
    auto bullet = [](std::string_view line) -> std::optional<std::string_view> {
        const auto t = trim(line);
        if (starts_with(t, "- ")) return trim(t.substr(2));
        return std::nullopt;
    };

    PlayReport r;

    std::optional<RunOutcome> outcome;
    std::optional<Confidence> confidence;
    for (auto line : section(0)) {
        const auto t = trim(line);
        if (starts_with(t, "Run Outcome:")) {
            const auto v = trim(t.substr(12));
            outcome = parse_outcome(v);
            if (!outcome) throw Error(Errc::unknown_outcome, "unknown run outcome '" + std::string(v) + "'");
        } else if (starts_with(t, "Confidence:")) {
            const auto v = trim(t.substr(11));
            confidence = parse_confidence(v);
            if (!confidence) {
                throw Error(Errc::unknown_confidence, "unknown confidence '" + std::string(v) + "'");
            }
        }
    }
    if (!outcome) throw Error(Errc::unknown_outcome, "missing 'Run Outcome:' line");
    if (!confidence) throw Error(Errc::unknown_confidence, "missing 'Confidence:' line");
    r.outcome = *outcome;
    r.confidence = *confidence;

    for (auto line : section(1)) {
        if (auto b = bullet(line); b && !b->empty()) r.probe_signals.emplace_back(*b);
    }

    for (auto line : section(2)) {
        const auto t = trim(line);
        if (starts_with(t, "Ref:") && r.interaction_log.empty() && r.interaction_log_ref.empty()) {
            r.interaction_log_ref = std::string(trim(t.substr(4)));
        } else if (auto b = bullet(line); b && !b->empty()) {
            r.interaction_log.emplace_back(*b);
        }
    }

    for (auto line : section(3)) {
        auto b = bullet(line);
        if (!b) continue;
        const auto colon = b->find(':');
        if (colon == std::string_view::npos) {
            throw Error(Errc::malformed_report, "assessment bullet lacks 'dimension:' prefix");
        }
        const auto dim_name = trim(b->substr(0, colon));
        const auto dim = arena::parse_dimension(dim_name);
        if (!dim) {
            throw Error(Errc::malformed_report, "unknown dimension '" + std::string(dim_name) + "'");
        }
        const auto body = trim(b->substr(colon + 1));
        if (body.empty()) throw Error(Errc::malformed_report, "empty assessment");
        r.dimension_assessments[*dim] = std::string(body);
    }

    for (auto line : section(4)) {
        auto b = bullet(line);
        if (!b) continue;
        if (starts_with(*b, "FIX:")) {
            r.fixes.push_back(parse_fix(trim(b->substr(4))));
        } else {
            r.findings.push_back(parse_finding(*b));
        }
    }

    for (auto line : section(5)) {
        const auto t = trim(line);
        if (starts_with(t, "Finding ")) {
            const auto colon = t.find(':');
            const auto num = std::string(trim(t.substr(8, colon == std::string_view::npos
                                                                ? std::string_view::npos
                                                                : colon - 8)));
            std::size_t idx = 0;
            try {
                idx = std::stoul(num);
            } catch (const std::logic_error&) {
                throw Error(Errc::malformed_report, "bad most-blocking reference '" + num + "'");
            }
            if (idx < 1 || idx > r.findings.size()) {
                throw Error(Errc::malformed_report, "most-blocking reference out of range");
            }
            r.most_blocking = idx - 1;
            break;
        }
    }

    std::string direction;
    for (auto line : section(6)) {
        const auto t = trim(line);
        if (t.empty()) continue;
        if (!direction.empty()) direction += ' ';
        direction += t;
    }
    r.fix_direction = std::move(direction);
    return r;
}

std::vector<FixItem> extract_fix_list(const PlayReport& report) {
    std::vector<FixItem> out;
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& fix : report.fixes) {
        if (seen.emplace(fix.observation, fix.suggested_change).second) out.push_back(fix);
    }
    return out;
}

std::string summarize(const PlayReport& report) {
    std::ostringstream out;
    out << "Run Outcome: " << to_string(report.outcome)
        << " (confidence: " << to_string(report.confidence) << ")\n";
    for (const auto& [dim, text] : report.dimension_assessments) {
        out << arena::to_string(dim) << ": " << text << "\n";
    }
    if (report.most_blocking && *report.most_blocking < report.findings.size()) {
        out << "Most blocking issue: " << render_finding_body(report.findings[*report.most_blocking])
            << "\n";
    }
    return out.str();
}

void to_json(json& j, const FixItem& f) {
    j = json{{"observation", f.observation}, {"suggested_change", f.suggested_change}};
}

void from_json(const json& j, FixItem& f) {
    f.observation = j.at("observation").get<std::string>();
    f.suggested_change = j.at("suggested_change").get<std::string>();
}

void to_json(json& j, const PlayReport& r) {
    json findings = json::array();
    for (const auto& f : r.findings) {
        findings.push_back({{"severity", to_string(f.severity)},
                            {"category", to_string(f.category)},
                            {"text", f.text},
                            {"evidence", f.evidence}});
    }
    json assessments = json::object();
    for (const auto& [dim, text] : r.dimension_assessments) {
        assessments[std::string(arena::to_string(dim))] = text;
    }
    j = json{{"outcome", to_string(r.outcome)},
             {"confidence", to_string(r.confidence)},
             {"probe_signals", r.probe_signals},
             {"interaction_log_ref", r.interaction_log_ref},
             {"interaction_log", r.interaction_log},
             {"dimension_assessments", assessments},
             {"findings", findings},
             {"most_blocking", r.most_blocking ? json(*r.most_blocking) : json(nullptr)},
             {"fix_direction", r.fix_direction},
             {"fixes", r.fixes}};
}

void from_json(const json& j, PlayReport& r) {
    auto need = [](auto opt, Errc code, const std::string& what) {
        if (!opt) throw Error(code, "unknown value for " + what);
        return *opt;
    };
    r.outcome = need(parse_outcome(j.at("outcome").get<std::string>()), Errc::unknown_outcome,
                     "outcome");
    r.confidence = need(parse_confidence(j.at("confidence").get<std::string>()),
                        Errc::unknown_confidence, "confidence");
    r.probe_signals = j.value("probe_signals", std::vector<std::string>{});
    r.interaction_log_ref = j.value("interaction_log_ref", std::string{});
    r.interaction_log = j.value("interaction_log", std::vector<std::string>{});
    r.dimension_assessments.clear();
    const json assessments = j.value("dimension_assessments", json::object());
    for (const auto& [key, value] : assessments.items()) {
        r.dimension_assessments[need(arena::parse_dimension(key), Errc::malformed_report,
                                     "dimension")] = value.get<std::string>();
    }
    r.findings.clear();
    for (const auto& f : j.value("findings", json::array())) {
        Finding finding;
        finding.severity = need(parse_severity(f.at("severity").get<std::string>()),
                                Errc::malformed_report, "severity");
        finding.category = need(parse_category(f.at("category").get<std::string>()),
                                Errc::malformed_report, "category");
        finding.text = f.at("text").get<std::string>();
        finding.evidence = f.value("evidence", std::vector<int>{});
        r.findings.push_back(std::move(finding));
    }
    if (j.contains("most_blocking") && !j.at("most_blocking").is_null()) {
        r.most_blocking = j.at("most_blocking").get<std::size_t>();
    } else {
        r.most_blocking.reset();
    }
    r.fix_direction = j.value("fix_direction", std::string{});
    r.fixes = j.value("fixes", std::vector<FixItem>{});
}

}  // namespace playforge::report
