#pragma once

#include <random>
#include <string>
#include <vector>

#include "playforge/report/play_report.hpp"

namespace playforge::testing {

// Random valid PlayReport values, including text that looks like report
// syntax ("FIX:", "[major]", "(evidence: 3)", "→") to stress the parser.
class ReportGenerator {
public:
    explicit ReportGenerator(unsigned seed) : rng_(seed) {}

    std::string phrase(int max_words = 6) {
        static const std::vector<std::string> words = {
            "enemy",  "jump",       "score",       "[major]",  "(evidence: 3)", "FIX:",
            "→",      "naïve",      "Run Outcome:", "## Findings", "- dash",    "Finding 2:",
            "patrol", "stationary", "click",       "50%",      "\"quoted\"",    "Ref:"};
        const int n = 1 + static_cast<int>(rng_() % static_cast<unsigned>(max_words));
        std::string out;
        for (int i = 0; i < n; ++i) {
            if (i) out += ' ';
            out += words[rng_() % words.size()];
        }
        return out;
    }

    std::string phrase_without_arrow() {
        std::string s;
        do {
            s = phrase();
        } while (s.find("→") != std::string::npos);
        return s;
    }

    report::PlayReport next() {
        using namespace report;
        PlayReport r;
        r.outcome = kAllOutcomes[rng_() % kAllOutcomes.size()];
        r.confidence = kAllConfidences[rng_() % kAllConfidences.size()];
        for (int i = 0, n = count(); i < n; ++i) r.probe_signals.push_back(phrase());
        if (rng_() % 2) r.interaction_log_ref = "runs/t/1/gui_agent.jsonl";
        for (int i = 0, n = count(); i < n; ++i) r.interaction_log.push_back(phrase());
        for (auto d : arena::kAllDimensions) {
            if (rng_() % 2) r.dimension_assessments[d] = phrase();
        }
        for (int i = 0, n = count(); i < n; ++i) {
            Finding f;
            f.severity = static_cast<Severity>(rng_() % 3);
            f.category = kAllCategories[rng_() % kAllCategories.size()];
            f.text = phrase();
            for (int e = 0, m = static_cast<int>(rng_() % 3); e < m; ++e) {
                f.evidence.push_back(static_cast<int>(rng_() % 400));
            }
            r.findings.push_back(std::move(f));
        }
        if (!r.findings.empty() && rng_() % 2) r.most_blocking = rng_() % r.findings.size();
        if (rng_() % 3) r.fix_direction = "Check " + phrase();
        for (int i = 0, n = count(); i < n; ++i) {
            r.fixes.push_back({phrase_without_arrow(), phrase()});
        }
        return r;
    }

private:
    int count() { return static_cast<int>(rng_() % 4); }

    std::mt19937 rng_;
};

}  // namespace playforge::testing
