#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "error.hpp"
#include "eval_harness.hpp"
#include "experiment/dataset.hpp"
#include "recommender.hpp"

namespace metacf {

/// Dataset characteristics used by the content-based recommender.
struct MetaFeatureVector {
    double n_instances = 0.0;
    double n_features = 0.0;
    double n_classes = 0.0;
    double log_n_instances = 0.0;
    double log_n_features = 0.0;
    double log_n_classes = 0.0;
    double class_entropy = 0.0;         // bits
    double mean_feature_entropy = 0.0;  // bits, categorical features only
    double mean_feature_skewness = 0.0;
    double mean_feature_kurtosis = 0.0;  // excess kurtosis
    double majority_class_fraction = 1.0;

    static constexpr std::size_t kDistanceFields = 8;

    /// The fields compared by the recommender: counts enter log-scaled.
    std::array<double, kDistanceFields> distance_fields() const {
        return {log_n_instances,      log_n_features,        log_n_classes,         class_entropy,
                mean_feature_entropy, mean_feature_skewness, mean_feature_kurtosis, majority_class_fraction};
    }
};

inline double entropy_bits(const std::vector<std::size_t>& counts) {
    double n = 0.0;
    for (auto c : counts) n += static_cast<double>(c);
    double h = 0.0;
    for (auto c : counts)
        if (c > 0) {
            const double p = static_cast<double>(c) / n;
            h -= p * std::log2(p);
        }
    return h;
}

inline MetaFeatureVector meta_features(const Dataset& d) {
    d.validate();
    MetaFeatureVector m;
    m.n_instances = static_cast<double>(d.size());
    m.n_features = static_cast<double>(d.features.size());
    m.n_classes = static_cast<double>(d.n_classes());
    m.log_n_instances = std::log(m.n_instances);
    m.log_n_features = std::log(m.n_features);
    m.log_n_classes = std::log(m.n_classes);

    const auto counts = d.class_counts();
    m.class_entropy = entropy_bits(counts);
    m.majority_class_fraction =
        static_cast<double>(*std::max_element(counts.begin(), counts.end())) / m.n_instances;

    double ent = 0.0, skew = 0.0, kurt = 0.0;
    std::size_t n_cat = 0, n_num = 0;
    for (const auto& f : d.features) {
        if (f.kind == FeatureKind::categorical) {
            std::vector<std::size_t> c(f.levels.size(), 0);
            for (int code : f.codes) ++c[static_cast<std::size_t>(code)];
            ent += entropy_bits(c);
            ++n_cat;
        } else {
            const double n = static_cast<double>(f.numeric.size());
            const double mean = std::accumulate(f.numeric.begin(), f.numeric.end(), 0.0) / n;
            double m2 = 0.0, m3 = 0.0, m4 = 0.0;
            for (double v : f.numeric) {
                const double dlt = v - mean;
                m2 += dlt * dlt;
                m3 += dlt * dlt * dlt;
                m4 += dlt * dlt * dlt * dlt;
            }
            m2 /= n;
            m3 /= n;
            m4 /= n;
            if (m2 > 1e-12) {
                skew += m3 / std::pow(m2, 1.5);
                kurt += m4 / (m2 * m2) - 3.0;
            }
            ++n_num;
        }
    }
    if (n_cat) m.mean_feature_entropy = ent / static_cast<double>(n_cat);
    if (n_num) {
        m.mean_feature_skewness = skew / static_cast<double>(n_num);
        m.mean_feature_kurtosis = kurt / static_cast<double>(n_num);
    }
    return m;
}

/// A training dataset for the content recommender: its meta-features and its
/// true accuracies in column order.
struct ContentExample {
    MetaFeatureVector features;
    ScoredRow performance;
};

/// Nearest-neighbour regression over z-scored meta-features: each config is
/// predicted as the mean accuracy of the `n_neighbors` closest pool datasets.
/// Fields with zero variance in the pool are ignored; distance ties go to the
/// earlier pool entry.
inline Recommendation content_recommend(const MetaFeatureVector& target, const std::vector<ContentExample>& training,
                                        std::size_t n_neighbors, std::size_t k, std::string dataset_id = {}) {
    if (training.empty()) throw ArgumentError("content recommender needs a non-empty training pool");
    if (n_neighbors < 1 || n_neighbors > training.size())
        throw ArgumentError("n_neighbors must lie in [1, pool size]");
    constexpr std::size_t F = MetaFeatureVector::kDistanceFields;
    const auto n = static_cast<double>(training.size());
    std::array<double, F> mean{}, sd{};
    for (const auto& ex : training) {
        const auto v = ex.features.distance_fields();
        for (std::size_t f = 0; f < F; ++f) mean[f] += v[f] / n;
    }
    for (const auto& ex : training) {
        const auto v = ex.features.distance_fields();
        for (std::size_t f = 0; f < F; ++f) sd[f] += (v[f] - mean[f]) * (v[f] - mean[f]) / n;
    }
    for (auto& s : sd) s = std::sqrt(s);

    const auto t = target.distance_fields();
    std::vector<std::pair<double, std::size_t>> dist;
    for (std::size_t i = 0; i < training.size(); ++i) {
        const auto v = training[i].features.distance_fields();
        double d = 0.0;
        for (std::size_t f = 0; f < F; ++f) {
            if (sd[f] <= 1e-12 * std::max(1.0, std::fabs(mean[f]))) continue;
            const double z = (v[f] - t[f]) / sd[f];
            d += z * z;
        }
        dist.emplace_back(d, i);
    }
    std::stable_sort(dist.begin(), dist.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

    const auto& cols = training[dist.front().second].performance;
    ScoredRow predicted;
    for (std::size_t c = 0; c < cols.size(); ++c) {
        double s = 0.0;
        for (std::size_t q = 0; q < n_neighbors; ++q) {
            const auto& row = training[dist[q].second].performance;
            if (row.size() != cols.size() || row[c].first != cols[c].first)
                throw ArgumentError("content pool rows must share one configuration list");
            s += row[c].second;
        }
        predicted.emplace_back(cols[c].first, s / static_cast<double>(n_neighbors));
    }
    return top_k(predicted, k, std::move(dataset_id));
}

/// Leave-one-dataset-out evaluation of the content recommender over a fully
/// observed matrix. Each neighbour count is one "setting"; the summary has
/// Best/Median/Average over them and no per-level columns.
inline EngineSummary evaluate_content(const PerformanceMatrix& full, const std::vector<MetaFeatureVector>& features,
                                      std::vector<std::size_t> neighbor_counts, std::size_t k) {
    if (features.size() != full.rows()) throw ArgumentError("need one meta-feature vector per dataset");
    if (full.rows() < 2) throw ArgumentError("content evaluation needs at least two datasets");
    if (full.observed_count() != full.rows() * full.cols())
        throw InputError("content evaluation needs a fully observed matrix");
    std::vector<ScoredRow> rows;
    for (std::size_t r = 0; r < full.rows(); ++r) {
        ScoredRow row;
        for (std::size_t c = 0; c < full.cols(); ++c) row.emplace_back(full.col_ids()[c], *full.at(r, c));
        rows.push_back(std::move(row));
    }
    for (auto& n : neighbor_counts) n = std::clamp<std::size_t>(n, 1, full.rows() - 1);
    std::sort(neighbor_counts.begin(), neighbor_counts.end());
    neighbor_counts.erase(std::unique(neighbor_counts.begin(), neighbor_counts.end()), neighbor_counts.end());

    std::vector<std::pair<std::string, double>> means;
    for (auto nn : neighbor_counts) {
        double total = 0.0;
        for (std::size_t target = 0; target < full.rows(); ++target) {
            std::vector<ContentExample> pool;
            for (std::size_t r = 0; r < full.rows(); ++r)
                if (r != target) pool.push_back({features[r], rows[r]});
            const auto rec = content_recommend(features[target], pool, nn, k, full.row_ids()[target]);
            total += score_best_of_topk(truth_row(full, target), rec);
        }
        means.emplace_back("content[neighbors=" + std::to_string(nn) + "]", total / static_cast<double>(full.rows()));
    }
    return summarize("Content", std::move(means));
}

}  // namespace metacf
