#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"

using namespace metacf;

namespace {

ScoredRow row_of(const std::vector<double>& v) {
    ScoredRow r;
    for (std::size_t j = 0; j < v.size(); ++j) r.emplace_back("c" + std::to_string(j + 1), v[j]);
    return r;
}

TruthRow truth_of(const std::vector<double>& v) {
    TruthRow t;
    for (std::size_t j = 0; j < v.size(); ++j) t.emplace("c" + std::to_string(j + 1), v[j]);
    return t;
}

std::vector<std::string> ids(const Recommendation& r) {
    std::vector<std::string> out;
    for (const auto& c : r.ranked_configs) out.push_back(c.config_id);
    return out;
}

Recommendation rec_of(std::vector<std::string> configs) {
    Recommendation r{"d", {}, configs.size()};
    for (auto& c : configs) r.ranked_configs.push_back({std::move(c), 0.0});
    return r;
}

}  // namespace

TEST(TopK, Examples) {
    EXPECT_EQ(ids(top_k(row_of({70, 85, 80, 90}), 2)), (std::vector<std::string>{"c4", "c2"}));
    EXPECT_EQ(top_k(row_of({70, 85, 80, 90}), 2).ranked_configs[0].predicted_accuracy, 90.0);
    EXPECT_EQ(top_k(row_of({70, 85, 80, 90}), 10).ranked_configs.size(), 4u);
    EXPECT_EQ(ids(top_k(row_of({80, 80}), 1)), (std::vector<std::string>{"c1"}));
}

TEST(TopK, Errors) {
    EXPECT_THROW(top_k(ScoredRow{}, 1), ArgumentError);
    EXPECT_THROW(top_k(row_of({1, 2}), 0), ArgumentError);
}

TEST(ScoreBestOfTopK, Examples) {
    const auto t = truth_of({70, 85, 80, 90});
    EXPECT_EQ(score_best_of_topk(t, rec_of({"c2", "c3"})), 85.0);
    EXPECT_EQ(score_best_of_topk(t, rec_of({"c4"})), 90.0);
    EXPECT_THROW(score_best_of_topk(t, rec_of({"c4", "c9"})), EvaluationError);
}

TEST(OracleBest, Examples) {
    const auto t = truth_of({70, 85, 80, 90});
    EXPECT_EQ(oracle_best(t, {"c1", "c2", "c3", "c4"}), 90.0);
    EXPECT_EQ(oracle_best(t, {"c1"}), 70.0);
    EXPECT_THROW(oracle_best(t, std::vector<std::string>{}), ArgumentError);
    EXPECT_THROW(oracle_best(t, {"zz"}), ArgumentError);
}

TEST(TopK, PropertyOrderingAndTieBreak) {
    std::mt19937_64 gen(31);
    std::uniform_int_distribution<int> len(1, 12), val(60, 70), kd(1, 15);
    for (int t = 0; t < 300; ++t) {
        std::vector<double> v(static_cast<std::size_t>(len(gen)));
        for (auto& x : v) x = val(gen);  // small range forces ties
        const auto k = static_cast<std::size_t>(kd(gen));
        const auto rec = top_k(row_of(v), k);
        ASSERT_EQ(rec.ranked_configs.size(), std::min(k, v.size()));
        // Brute force: stable sort of indices by value descending.
        std::vector<std::size_t> idx(v.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] > v[b]; });
        for (std::size_t i = 0; i < rec.ranked_configs.size(); ++i)
            EXPECT_EQ(rec.ranked_configs[i].config_id, "c" + std::to_string(idx[i] + 1));
    }
}

TEST(TopK, PropertyInvariantUnderIncreasingTransform) {
    std::mt19937_64 gen(32);
    std::uniform_real_distribution<double> val(0.0, 100.0);
    std::uniform_int_distribution<int> len(1, 10), kd(1, 10), pick(0, 2);
    for (int t = 0; t < 200; ++t) {
        std::vector<double> v(static_cast<std::size_t>(len(gen)));
        for (auto& x : v) x = std::round(val(gen));
        std::vector<double> w(v);
        const int kind = pick(gen);
        for (auto& x : w) x = kind == 0 ? std::exp(x / 20.0) : kind == 1 ? 3.0 * x - 7.0 : std::sqrt(x) + 1.0;
        const auto k = static_cast<std::size_t>(kd(gen));
        EXPECT_EQ(ids(top_k(row_of(v), k)), ids(top_k(row_of(w), k)));
    }
}

TEST(ScoreBestOfTopK, PropertyBoundedMonotoneAndExactOnTruth) {
    std::mt19937_64 gen(33);
    std::uniform_real_distribution<double> val(40.0, 100.0);
    std::uniform_int_distribution<int> len(1, 12);
    for (int t = 0; t < 300; ++t) {
        const auto n = static_cast<std::size_t>(len(gen));
        std::vector<double> truth(n), pred(n);
        for (auto& x : truth) x = val(gen);
        for (auto& x : pred) x = val(gen);
        const auto tr = truth_of(truth);
        std::vector<std::string> all;
        for (std::size_t j = 0; j < n; ++j) all.push_back("c" + std::to_string(j + 1));
        const double best = oracle_best(tr, all);
        EXPECT_EQ(best, *std::max_element(truth.begin(), truth.end()));
        double prev = -1.0;
        for (std::size_t k = 1; k <= n + 1; ++k) {
            const double s = score_best_of_topk(tr, top_k(row_of(pred), k));
            EXPECT_LE(s, best);
            EXPECT_GE(s, prev);
            prev = s;
            EXPECT_EQ(score_best_of_topk(tr, top_k(row_of(truth), k)), best);
        }
        EXPECT_EQ(score_best_of_topk(tr, top_k(row_of(pred), n)), best);
    }
}
