#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace playforge::eval {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

// n episodes of one level, c of which met the completion condition.
// `episodes`, when present, records per-episode outcomes in run order and
// enables the first-k estimator.
struct LevelRecord {
    std::string level_id;
    int n = 0;
    int c = 0;
    std::vector<bool> episodes;
};

enum class PassAtKEstimator {
    unbiased,  // 1 - C(n-c, k) / C(n, k)
    first_k,   // success among the first k recorded episodes
};

BigInt binomial(int n, int k);

// Exact unbiased estimate. Throws Errc::k_out_of_range unless 1 <= k <= n.
Rational pass_at_k_exact(const LevelRecord& record, int k);

double pass_at_k(const LevelRecord& record, int k,
                 PassAtKEstimator estimator = PassAtKEstimator::unbiased);

struct PassAtKTable {
    std::vector<int> ks;
    std::map<int, double> mean;  // k -> level-averaged pass@k
};

PassAtKTable pass_at_k_suite(const std::vector<LevelRecord>& records,
                             const std::vector<int>& ks = {5, 10, 20},
                             PassAtKEstimator estimator = PassAtKEstimator::unbiased);

// One judge's binary verdicts over an item set (criterion ids).
struct JudgmentSet {
    std::string judge;
    std::map<std::string, bool> verdicts;
};

double raw_agreement(const JudgmentSet& a, const JudgmentSet& b);

// Cohen's kappa with per-judge marginals. Returns 1 in the degenerate case
// p_e = 1 (both judges constant and equal).
double cohen_kappa(const JudgmentSet& a, const JudgmentSet& b);

struct AgreementSummary {
    double raw_agreement = 0.0;
    double kappa = 0.0;
};

// Pairwise metrics averaged over every unordered pair of judges.
AgreementSummary mean_pairwise_agreement(const std::vector<JudgmentSet>& judges);

struct Correlations {
    double spearman = 0.0;
    double pearson = 0.0;  // NaN when either score map has zero variance
};

// Average ranks for ties.
std::vector<double> average_ranks(const std::vector<double>& values);

Correlations rank_correlations(const std::map<std::string, double>& scores_a,
                               const std::map<std::string, double>& scores_b);

enum class ComplexityTier { low, moderate, high };

std::string_view to_string(ComplexityTier tier);

// Delta is the rubric-score gain in percentage points: high iff delta <= 10,
// moderate iff 10 < delta <= 15, low iff delta > 15.
ComplexityTier tier_for_delta(double delta_points);

struct TrajectoryRecord {
    std::string task_id;
    std::vector<double> scores;  // index i holds round i + 1, values in [0, 1]
};

// Delta between the last and first round in percentage points, rounded to 1e-9
// so that score arithmetic cannot push an exact boundary across a tier.
double trajectory_delta(const TrajectoryRecord& trajectory);

ComplexityTier tier_assign(const TrajectoryRecord& trajectory);

}  // namespace playforge::eval
