#include <chrono>
#include <cmath>
#include <random>

#include "doctest.h"
#include "playforge/error.hpp"
#include "playforge/eval/stats.hpp"
#include "support/stats_oracle.hpp"

using namespace playforge;
using namespace playforge::eval;

namespace {

JudgmentSet judge(const std::string& name, std::vector<bool> v) {
    JudgmentSet j{name, {}};
    for (std::size_t i = 0; i < v.size(); ++i) j.verdicts["c" + std::to_string(i)] = v[i];
    return j;
}

std::map<std::string, double> scores(std::vector<double> v) {
    std::map<std::string, double> m;
    for (std::size_t i = 0; i < v.size(); ++i) m["g" + std::to_string(i)] = v[i];
    return m;
}

Errc code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an Error");
    return Errc::fatal_error;
}

}  // namespace

TEST_CASE("binomial") {
    CHECK(binomial(5, 2) == 10);
    CHECK(binomial(20, 10) == 184756);
    CHECK(binomial(3, 4) == 0);
    CHECK(binomial(7, 0) == 1);
}

TEST_CASE("pass@k matches k-subset enumeration for n <= 10") {
    const auto start = std::chrono::steady_clock::now();
    for (int n = 1; n <= 10; ++n) {
        for (int c = 0; c <= n; ++c) {
            for (int k = 1; k <= n; ++k) {
                const LevelRecord r{"L", n, c, {}};
                CHECK(pass_at_k_exact(r, k) == playforge::testing::brute_force_pass_at_k(n, c, k));
            }
        }
    }
    CHECK(std::chrono::steady_clock::now() - start < std::chrono::seconds(1));
}

TEST_CASE("pass@k worked values") {
    CHECK(pass_at_k_exact({"L", 5, 2, {}}, 3) == Rational(9, 10));
    CHECK(pass_at_k({"L", 20, 20, {}}, 7) == 1.0);
    CHECK(pass_at_k({"L", 20, 0, {}}, 7) == 0.0);
    CHECK(code_of([] { pass_at_k({"L", 5, 2, {}}, 0); }) == Errc::k_out_of_range);
    CHECK(code_of([] { pass_at_k({"L", 5, 2, {}}, 6); }) == Errc::k_out_of_range);
}

TEST_CASE("pass@k is monotone in k and c") {
    for (int n = 1; n <= 12; ++n) {
        for (int c = 0; c <= n; ++c) {
            for (int k = 1; k <= n; ++k) {
                const auto here = pass_at_k_exact({"L", n, c, {}}, k);
                if (k < n) CHECK(here <= pass_at_k_exact({"L", n, c, {}}, k + 1));
                if (c < n) CHECK(here <= pass_at_k_exact({"L", n, c + 1, {}}, k));
            }
        }
    }
}

TEST_CASE("first-k estimator reads the episode order") {
    LevelRecord r{"L", 5, 1, {false, false, false, true, false}};
    CHECK(pass_at_k(r, 3, PassAtKEstimator::first_k) == 0.0);
    CHECK(pass_at_k(r, 4, PassAtKEstimator::first_k) == 1.0);
    CHECK(pass_at_k(r, 3) == doctest::Approx(1.0 - 4.0 / 10.0));  // 1 - C(4,3)/C(5,3)
}

TEST_CASE("pass@k suite averages levels") {
    const std::vector<LevelRecord> recs{{"a", 20, 20, {}}, {"b", 20, 0, {}}};
    const auto t = pass_at_k_suite(recs);
    CHECK(t.ks == std::vector<int>{5, 10, 20});
    for (int k : t.ks) CHECK(t.mean.at(k) == 0.5);
    CHECK(pass_at_k_suite({{"x", 5, 2, {}}}, {3}).mean.at(3) == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(code_of([] { pass_at_k_suite({{"x", 5, 2, {}}}); }) == Errc::k_out_of_range);
    CHECK(code_of([] { pass_at_k_suite({}); }) == Errc::empty_input);
}

TEST_CASE("agreement on the four-item case") {
    const auto a = judge("A", {true, true, false, false});
    const auto b = judge("B", {true, false, false, false});
    CHECK(raw_agreement(a, b) == doctest::Approx(75.0).epsilon(1e-12));
    // p_o = 3/4; marginals 1/2 and 1/4 give p_e = 1/2*1/4 + 1/2*3/4 = 1/2.
    CHECK(std::abs(cohen_kappa(a, b) - 0.5) < 1e-9);
    CHECK(cohen_kappa(a, a) == 1.0);
    CHECK(raw_agreement(a, judge("C", {false, false, true, true})) == 0.0);
}

TEST_CASE("kappa degenerate and chance cases") {
    const auto all_pass = judge("A", {true, true, true});
    CHECK(cohen_kappa(all_pass, all_pass) == 1.0);
    // p_o = 1/2, p_e = 1/2.
    const auto a = judge("A", {true, true, false, false});
    const auto b = judge("B", {true, false, true, false});
    CHECK(std::abs(cohen_kappa(a, b)) < 1e-12);
    CHECK(code_of([] { cohen_kappa(judge("A", {true}), judge("B", {true})); }) ==
          Errc::item_set_mismatch);
    JudgmentSet other{"B", {{"x", true}, {"y", false}}};
    CHECK(code_of([&] { raw_agreement(a, other); }) == Errc::item_set_mismatch);
}

TEST_CASE("kappa is symmetric and hits 1 only on perfect agreement") {
    std::mt19937 rng(11);
    for (int trial = 0; trial < 500; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 8);
        std::vector<bool> va, vb;
        for (int i = 0; i < n; ++i) {
            va.push_back(rng() % 2);
            vb.push_back(rng() % 2);
        }
        const auto a = judge("A", va);
        const auto b = judge("B", vb);
        CHECK(cohen_kappa(a, b) == cohen_kappa(b, a));
        const bool degenerate_a = std::count(va.begin(), va.end(), true) % n == 0;
        if (!degenerate_a) CHECK((cohen_kappa(a, b) == 1.0) == (va == vb));
    }
}

TEST_CASE("mean pairwise agreement averages the three pairs") {
    const auto a = judge("A", {true, true, false, false});
    const auto b = judge("B", {true, false, false, false});
    const auto c = judge("C", {true, true, false, false});
    const auto s = mean_pairwise_agreement({a, b, c});
    CHECK(s.raw_agreement == doctest::Approx((75.0 + 100.0 + 75.0) / 3));
    CHECK(s.kappa == doctest::Approx((0.5 + 1.0 + 0.5) / 3));
}

TEST_CASE("rank correlations") {
    const auto base = scores({1, 2, 3, 4});
    auto r = rank_correlations(base, scores({1, 3, 2, 4}));
    CHECK(std::abs(r.spearman - 0.8) < 1e-9);
    r = rank_correlations(base, base);
    CHECK(r.spearman == 1.0);
    CHECK(r.pearson == 1.0);
    r = rank_correlations(base, scores({4, 3, 2, 1}));
    CHECK(r.spearman == -1.0);
    CHECK(r.pearson == -1.0);
    CHECK(std::isnan(rank_correlations(base, scores({2, 2, 2, 2})).pearson));
    CHECK(average_ranks({10, 20, 20, 30}) == std::vector<double>{1, 2.5, 2.5, 4});
    CHECK(code_of([] { rank_correlations(scores({1, 2}), scores({1, 2})); }) == Errc::too_few_games);
    CHECK(code_of([&] { rank_correlations(base, scores({1, 2, 3})); }) == Errc::key_set_mismatch);
}

TEST_CASE("spearman is invariant under monotone transforms; pearson is not") {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    bool pearson_moved = false;
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> va, vb;
        for (int i = 0; i < 6; ++i) {
            va.push_back(u(rng));
            vb.push_back(u(rng));
        }
        std::vector<double> vb_exp;
        for (double x : vb) vb_exp.push_back(std::exp(5 * x));
        const auto plain = rank_correlations(scores(va), scores(vb));
        const auto moved = rank_correlations(scores(va), scores(vb_exp));
        CHECK(plain.spearman == doctest::Approx(moved.spearman).epsilon(1e-12));
        CHECK(plain.spearman >= -1.0);
        CHECK(plain.spearman <= 1.0);
        pearson_moved = pearson_moved || std::abs(plain.pearson - moved.pearson) > 1e-6;
    }
    CHECK(pearson_moved);
}

TEST_CASE("tier boundaries are closed as stated") {
    CHECK(tier_for_delta(8) == ComplexityTier::high);
    CHECK(tier_for_delta(10) == ComplexityTier::high);
    CHECK(tier_for_delta(10.01) == ComplexityTier::moderate);
    CHECK(tier_for_delta(12) == ComplexityTier::moderate);
    CHECK(tier_for_delta(15) == ComplexityTier::moderate);
    CHECK(tier_for_delta(15.01) == ComplexityTier::low);
    CHECK(tier_for_delta(20) == ComplexityTier::low);
    CHECK(tier_for_delta(-5) == ComplexityTier::high);
}

TEST_CASE("tier_assign measures last minus first in points") {
    // 0.7 - 0.6 is 0.0999... in binary; the delta must still land on 10.
    CHECK(trajectory_delta({"t", {0.6, 0.65, 0.7}}) == 10.0);
    CHECK(tier_assign({"t", {0.6, 0.65, 0.7}}) == ComplexityTier::high);
    CHECK(tier_assign({"t", {0.5, 0.65}}) == ComplexityTier::moderate);
    CHECK(tier_assign({"t", {0.33, 1.0}}) == ComplexityTier::low);
    CHECK(code_of([] { tier_assign({"t", {0.5}}); }) == Errc::too_few_rounds);
}
