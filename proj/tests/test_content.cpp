#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "oracles.hpp"

using namespace metacf;

namespace {

Dataset from_csv(const std::string& csv) {
    std::istringstream in(csv);
    return load_dataset(in, "toy");
}

MetaFeatureVector random_features(std::mt19937_64& gen) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    MetaFeatureVector m;
    m.log_n_instances = 3.0 + 5.0 * u(gen);
    m.log_n_features = 4.0 * u(gen);
    m.log_n_classes = 2.0 * u(gen);
    m.class_entropy = 3.0 * u(gen);
    m.mean_feature_entropy = 2.0 * u(gen);
    m.mean_feature_skewness = 4.0 * u(gen) - 2.0;
    m.mean_feature_kurtosis = 6.0 * u(gen) - 1.0;
    m.majority_class_fraction = 0.3 + 0.7 * u(gen);
    return m;
}

ScoredRow perf_row(std::mt19937_64& gen, std::size_t n) {
    std::uniform_real_distribution<double> u(40.0, 100.0);
    ScoredRow r;
    for (std::size_t j = 0; j < n; ++j) r.emplace_back("c" + std::to_string(j + 1), std::round(u(gen) * 100.0) / 100.0);
    return r;
}

std::vector<std::string> ids(const Recommendation& r) {
    std::vector<std::string> out;
    for (const auto& c : r.ranked_configs) out.push_back(c.config_id);
    return out;
}

/// Applies x -> a*x + b to one distance field of a feature vector.
void affine(MetaFeatureVector& m, std::size_t field, double a, double b) {
    double* f[] = {&m.log_n_instances,      &m.log_n_features,        &m.log_n_classes,         &m.class_entropy,
                   &m.mean_feature_entropy, &m.mean_feature_skewness, &m.mean_feature_kurtosis, &m.majority_class_fraction};
    *f[field] = a * *f[field] + b;
}

}  // namespace

TEST(Entropy, Examples) {
    EXPECT_DOUBLE_EQ(entropy_bits({50, 50}), 1.0);
    EXPECT_DOUBLE_EQ(entropy_bits({10}), 0.0);
    EXPECT_NEAR(entropy_bits({70, 20, 10}), 1.1568, 1e-4);
    EXPECT_DOUBLE_EQ(entropy_bits({0, 4, 4, 0}), 1.0);
}

TEST(MetaFeatures, SingleClassAndCounts) {
    const auto m = meta_features(from_csv("x,c\n1,a\n2,a\n3,a\n"));
    EXPECT_EQ(m.n_instances, 3.0);
    EXPECT_EQ(m.n_features, 1.0);
    EXPECT_EQ(m.n_classes, 1.0);
    EXPECT_DOUBLE_EQ(m.class_entropy, 0.0);
    EXPECT_DOUBLE_EQ(m.majority_class_fraction, 1.0);
    EXPECT_DOUBLE_EQ(m.log_n_instances, std::log(3.0));
}

TEST(MetaFeatures, MomentsAndCategoricalEntropy) {
    // x = 0,0,0,4 has mean 1; central moments are written out below.
    const auto m = meta_features(from_csv("x,col,c\n0,r,a\n0,r,b\n0,g,a\n4,g,b\n"));
    const double m2 = (1 + 1 + 1 + 9) / 4.0, m3 = (-1 - 1 - 1 + 27) / 4.0, m4 = (1 + 1 + 1 + 81) / 4.0;
    EXPECT_NEAR(m.mean_feature_skewness, m3 / std::pow(m2, 1.5), 1e-12);
    EXPECT_NEAR(m.mean_feature_kurtosis, m4 / (m2 * m2) - 3.0, 1e-12);
    EXPECT_DOUBLE_EQ(m.mean_feature_entropy, 1.0);
    EXPECT_DOUBLE_EQ(m.class_entropy, 1.0);
    EXPECT_DOUBLE_EQ(m.majority_class_fraction, 0.5);
}

TEST(ContentRecommend, NearestPoolEntryDecides) {
    std::mt19937_64 gen(61);
    std::vector<ContentExample> pool;
    for (int i = 0; i < 3; ++i) pool.push_back({random_features(gen), perf_row(gen, 5)});
    for (std::size_t i = 0; i < 3; ++i) {
        const auto rec = content_recommend(pool[i].features, pool, 1, 5, "t");
        EXPECT_EQ(ids(rec), ids(top_k(pool[i].performance, 5)));
        EXPECT_EQ(rec.dataset_id, "t");
    }
    EXPECT_THROW(content_recommend(pool[0].features, pool, 0, 2), ArgumentError);
    EXPECT_THROW(content_recommend(pool[0].features, pool, 4, 2), ArgumentError);
    EXPECT_THROW(content_recommend(pool[0].features, {}, 1, 2), ArgumentError);
}

TEST(ContentRecommend, PropertyWholePoolGivesColumnMeans) {
    std::mt19937_64 gen(62);
    for (int t = 0; t < 100; ++t) {
        const std::size_t n = 2 + gen() % 6, cols = 1 + gen() % 8;
        std::vector<ContentExample> pool;
        for (std::size_t i = 0; i < n; ++i) pool.push_back({random_features(gen), perf_row(gen, cols)});
        const auto rec = content_recommend(random_features(gen), pool, n, cols);
        std::vector<double> mean(cols, 0.0);
        for (const auto& ex : pool)
            for (std::size_t j = 0; j < cols; ++j) mean[j] += ex.performance[j].second;
        for (auto& m : mean) m /= static_cast<double>(n);
        ASSERT_EQ(rec.ranked_configs.size(), cols);
        for (std::size_t q = 0; q + 1 < cols; ++q) {
            const auto a = std::stoul(rec.ranked_configs[q].config_id.substr(1)) - 1;
            const auto b = std::stoul(rec.ranked_configs[q + 1].config_id.substr(1)) - 1;
            EXPECT_GE(mean[a] + 1e-9, mean[b]);
            EXPECT_NEAR(rec.ranked_configs[q].predicted_accuracy, mean[a], 1e-9);
        }
    }
}

TEST(ContentRecommend, PropertyInvariantUnderAffineFieldRescaling) {
    std::mt19937_64 gen(63);
    std::uniform_real_distribution<double> scale(0.1, 10.0), shift(-50.0, 50.0);
    for (int t = 0; t < 150; ++t) {
        const std::size_t n = 3 + gen() % 5;
        std::vector<ContentExample> pool;
        for (std::size_t i = 0; i < n; ++i) pool.push_back({random_features(gen), perf_row(gen, 6)});
        auto target = random_features(gen);
        const std::size_t nn = 1 + gen() % n;
        const auto before = content_recommend(target, pool, nn, 3);
        const std::size_t field = gen() % MetaFeatureVector::kDistanceFields;
        const double a = scale(gen) * ((gen() & 1) ? 1.0 : -1.0), b = shift(gen);
        for (auto& ex : pool) affine(ex.features, field, a, b);
        affine(target, field, a, b);
        EXPECT_EQ(ids(content_recommend(target, pool, nn, 3)), ids(before));
    }
}

TEST(MetaFeatures, PropertyInvariantUnderInstanceOrder) {
    std::mt19937_64 gen(64);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    for (int t = 0; t < 100; ++t) {
        const std::size_t n = 4 + gen() % 30;
        std::vector<std::string> lines;
        for (std::size_t i = 0; i < n; ++i) {
            std::ostringstream l;
            l << std::round(u(gen) * 100) / 100 << "," << "pqr"[gen() % 3] << "," << std::round(u(gen) * 10) / 10 << ","
              << "AB"[gen() % 2];
            lines.push_back(l.str());
        }
        auto csv = [&] {
            std::string s = "x,k,y,class\n";
            for (const auto& l : lines) s += l + "\n";
            return s;
        };
        const auto a = meta_features(from_csv(csv()));
        std::shuffle(lines.begin(), lines.end(), gen);
        const auto b = meta_features(from_csv(csv()));
        const auto fa = a.distance_fields(), fb = b.distance_fields();
        for (std::size_t f = 0; f < fa.size(); ++f) EXPECT_NEAR(fa[f], fb[f], 1e-9 * std::max(1.0, std::fabs(fa[f])));
    }
}

TEST(EvaluateContent, LeaveOneOutOnHandMatrix) {
    const auto full = load_matrix("dataset_id,c1,c2\nd1,90,70\nd2,88,72\nd3,60,95\n");
    std::mt19937_64 gen(65);
    auto f1 = random_features(gen), f2 = f1, f3 = random_features(gen);
    f2.class_entropy += 0.01;
    const auto s = evaluate_content(full, {f1, f2, f3}, {1}, 1);
    // d1 and d2 are each other's nearest neighbour and recommend c1; d3's
    // nearest neighbour is d1 or d2, which also recommends c1.
    EXPECT_DOUBLE_EQ(s.best, (90.0 + 88.0 + 60.0) / 3.0);
    EXPECT_TRUE(s.level_means.empty());
    EXPECT_THROW(evaluate_content(load_matrix("dataset_id,c1\nd1,50\nd2,\n"), {f1, f2}, {1}, 1), InputError);
}
