#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "error.hpp"

namespace metacf {

struct RankedConfig {
    std::string config_id;
    double predicted_accuracy = 0.0;
    bool operator==(const RankedConfig&) const = default;
};

struct Recommendation {
    std::string dataset_id;
    std::vector<RankedConfig> ranked_configs;
    std::size_t k = 0;
};

/// A row of (config_id, value) pairs in column order.
using ScoredRow = std::vector<std::pair<std::string, double>>;

/// Ground-truth accuracies of one dataset; absent configs are unobserved.
using TruthRow = std::unordered_map<std::string, double>;

/// Highest k values, ties broken by ascending column index.
inline Recommendation top_k(const ScoredRow& row, std::size_t k, std::string dataset_id = {}) {
    if (k == 0) throw ArgumentError("k must be >= 1");
    if (row.empty()) throw ArgumentError("cannot rank an empty row");
    std::vector<std::size_t> idx(row.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    const std::size_t n = std::min(k, row.size());
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n), idx.end(),
                      [&](std::size_t a, std::size_t b) {
                          if (row[a].second != row[b].second) return row[a].second > row[b].second;
                          return a < b;
                      });
    Recommendation rec{std::move(dataset_id), {}, k};
    for (std::size_t i = 0; i < n; ++i) rec.ranked_configs.push_back({row[idx[i]].first, row[idx[i]].second});
    return rec;
}

/// Maximum TRUE accuracy among the recommended configurations.
inline double score_best_of_topk(const TruthRow& truth, const Recommendation& rec) {
    if (rec.ranked_configs.empty()) throw EvaluationError("empty recommendation");
    double best = -1.0;
    for (const auto& rc : rec.ranked_configs) {
        const auto it = truth.find(rc.config_id);
        if (it == truth.end())
            throw EvaluationError("recommended config " + rc.config_id + " has no true accuracy for dataset " +
                                  rec.dataset_id);
        best = std::max(best, it->second);
    }
    return best;
}

/// Best true accuracy over the candidates that are observed in `truth`.
template <typename Range>
double oracle_best(const TruthRow& truth, const Range& candidates) {
    std::optional<double> best;
    for (const auto& id : candidates) {
        if (auto it = truth.find(id); it != truth.end()) best = std::max(best.value_or(it->second), it->second);
    }
    if (!best) throw ArgumentError("no candidate configuration is observed for this dataset");
    return *best;
}

inline double oracle_best(const TruthRow& truth, std::initializer_list<std::string> candidates) {
    return oracle_best<std::initializer_list<std::string>>(truth, candidates);
}

}  // namespace metacf
