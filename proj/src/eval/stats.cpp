#include "playforge/eval/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "playforge/error.hpp"

namespace playforge::eval {

BigInt binomial(int n, int k) {
    if (k < 0 || n < 0 || k > n) return 0;
    k = std::min(k, n - k);
    BigInt result = 1;
    for (int i = 1; i <= k; ++i) {
        result *= n - k + i;
        result /= i;
    }
    return result;
}

namespace {

void check_record(const LevelRecord& r) {
    if (r.n < 1 || r.c < 0 || r.c > r.n) {
        throw Error(Errc::k_out_of_range, "level '" + r.level_id + "' needs 0 <= c <= n, n >= 1");
    }
}

void check_same_items(const JudgmentSet& a, const JudgmentSet& b) {
    if (a.verdicts.size() != b.verdicts.size() ||
        !std::equal(a.verdicts.begin(), a.verdicts.end(), b.verdicts.begin(),
                    [](const auto& x, const auto& y) { return x.first == y.first; })) {
        throw Error(Errc::item_set_mismatch,
                    "judges '" + a.judge + "' and '" + b.judge + "' rated different items");
    }
    if (a.verdicts.empty()) throw Error(Errc::item_set_mismatch, "empty item set");
}

double pearson_of(const std::vector<double>& x, const std::vector<double>& y) {
    const auto n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace

Rational pass_at_k_exact(const LevelRecord& record, int k) {
    check_record(record);
    if (k < 1 || k > record.n) {
        throw Error(Errc::k_out_of_range, "k=" + std::to_string(k) + " outside [1, " +
                                              std::to_string(record.n) + "]");
    }
    return Rational(1) - Rational(binomial(record.n - record.c, k), binomial(record.n, k));
}

double pass_at_k(const LevelRecord& record, int k, PassAtKEstimator estimator) {
    if (estimator == PassAtKEstimator::unbiased) {
        return static_cast<double>(pass_at_k_exact(record, k));
    }
    check_record(record);
    if (record.episodes.size() != static_cast<std::size_t>(record.n)) {
        throw Error(Errc::k_out_of_range,
                    "first-k estimator needs the per-episode outcomes of level '" +
                        record.level_id + "'");
    }
    if (k < 1 || k > record.n) {
        throw Error(Errc::k_out_of_range, "k=" + std::to_string(k) + " outside [1, n]");
    }
    const auto first = record.episodes.begin();
    return std::any_of(first, first + k, [](bool ok) { return ok; }) ? 1.0 : 0.0;
}

PassAtKTable pass_at_k_suite(const std::vector<LevelRecord>& records, const std::vector<int>& ks,
                             PassAtKEstimator estimator) {
    if (records.empty()) throw Error(Errc::empty_input, "no level records");
    PassAtKTable table;
    table.ks = ks;
    for (int k : ks) {
        if (estimator == PassAtKEstimator::unbiased) {
            Rational sum = 0;
            for (const auto& r : records) sum += pass_at_k_exact(r, k);
            table.mean[k] = static_cast<double>(sum / static_cast<int>(records.size()));
        } else {
            double sum = 0;
            for (const auto& r : records) sum += pass_at_k(r, k, estimator);
            table.mean[k] = sum / static_cast<double>(records.size());
        }
    }
    return table;
}

double raw_agreement(const JudgmentSet& a, const JudgmentSet& b) {
    check_same_items(a, b);
    std::size_t matches = 0;
    for (auto ia = a.verdicts.begin(), ib = b.verdicts.begin(); ia != a.verdicts.end(); ++ia, ++ib) {
        if (ia->second == ib->second) ++matches;
    }
    return 100.0 * static_cast<double>(matches) / static_cast<double>(a.verdicts.size());
}

double cohen_kappa(const JudgmentSet& a, const JudgmentSet& b) {
    check_same_items(a, b);
    if (a.verdicts.size() < 2) throw Error(Errc::item_set_mismatch, "kappa needs >= 2 items");
    const auto n = static_cast<double>(a.verdicts.size());
    double matches = 0, pass_a = 0, pass_b = 0;
    for (auto ia = a.verdicts.begin(), ib = b.verdicts.begin(); ia != a.verdicts.end(); ++ia, ++ib) {
        if (ia->second == ib->second) matches += 1;
        if (ia->second) pass_a += 1;
        if (ib->second) pass_b += 1;
    }
    const double p_o = matches / n;
    const double pa = pass_a / n;
    const double pb = pass_b / n;
    const double p_e = pa * pb + (1 - pa) * (1 - pb);
    if (p_e == 1.0) return 1.0;
    return (p_o - p_e) / (1 - p_e);
}

AgreementSummary mean_pairwise_agreement(const std::vector<JudgmentSet>& judges) {
    if (judges.size() < 2) throw Error(Errc::empty_input, "need at least two judges");
    AgreementSummary sum;
    int pairs = 0;
    for (std::size_t i = 0; i < judges.size(); ++i) {
        for (std::size_t j = i + 1; j < judges.size(); ++j) {
            sum.raw_agreement += raw_agreement(judges[i], judges[j]);
            sum.kappa += cohen_kappa(judges[i], judges[j]);
            ++pairs;
        }
    }
    sum.raw_agreement /= pairs;
    sum.kappa /= pairs;
    return sum;
}

std::vector<double> average_ranks(const std::vector<double>& values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
        const double rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = rank;
        i = j + 1;
    }
    return ranks;
}

Correlations rank_correlations(const std::map<std::string, double>& scores_a,
                               const std::map<std::string, double>& scores_b) {
    if (scores_a.size() != scores_b.size() ||
        !std::equal(scores_a.begin(), scores_a.end(), scores_b.begin(),
                    [](const auto& x, const auto& y) { return x.first == y.first; })) {
        throw Error(Errc::key_set_mismatch, "score maps cover different games");
    }
    if (scores_a.size() < 3) throw Error(Errc::too_few_games, "need at least 3 games");
    std::vector<double> a, b;
    for (const auto& [k, v] : scores_a) a.push_back(v);
    for (const auto& [k, v] : scores_b) b.push_back(v);
    Correlations out;
    // Spearman as Pearson over average ranks, which stays exact under ties.
    out.spearman = pearson_of(average_ranks(a), average_ranks(b));
    out.pearson = pearson_of(a, b);
    return out;
}

std::string_view to_string(ComplexityTier tier) {
    switch (tier) {
    case ComplexityTier::low: return "low";
    case ComplexityTier::moderate: return "moderate";
    case ComplexityTier::high: return "high";
    }
    return "?";
}

ComplexityTier tier_for_delta(double delta) {
    if (delta <= 10.0) return ComplexityTier::high;
    if (delta <= 15.0) return ComplexityTier::moderate;
    return ComplexityTier::low;
}

double trajectory_delta(const TrajectoryRecord& t) {
    if (t.scores.size() < 2) {
        throw Error(Errc::too_few_rounds, "task '" + t.task_id + "' has fewer than 2 rounds");
    }
    const double raw = 100.0 * (t.scores.back() - t.scores.front());
    return std::round(raw * 1e9) / 1e9;
}

ComplexityTier tier_assign(const TrajectoryRecord& t) { return tier_for_delta(trajectory_delta(t)); }

}  // namespace playforge::eval
