#pragma once

#include <chrono>
#include <vector>

#include "../error.hpp"
#include "../perf_matrix.hpp"
#include "completed_matrix.hpp"

namespace metacf {

/// Predicts every missing cell as its column's observed mean; empty columns
/// fall back to the global observed mean.
inline CompletedMatrix complete_baseline(const PerformanceMatrix& masked) {
    const auto start = std::chrono::steady_clock::now();
    const auto stats = column_stats(masked);
    if (!stats.global_mean) throw InputError("baseline: matrix has no observed cells");

    std::vector<double> pred(masked.rows() * masked.cols());
    for (std::size_t r = 0; r < masked.rows(); ++r)
        for (std::size_t c = 0; c < masked.cols(); ++c)
            pred[r * masked.cols() + c] = stats.mean[c].value_or(*stats.global_mean);

    double sse = 0.0;
    std::size_t n = 0;
    for (std::size_t r = 0; r < masked.rows(); ++r) {
        for (std::size_t c = 0; c < masked.cols(); ++c) {
            if (auto v = masked.at(r, c)) {
                const double e = *v - pred[r * masked.cols() + c];
                sse += e * e;
                ++n;
            }
        }
    }
    FitReport report;
    report.initial_loss = report.final_loss = sse / static_cast<double>(n);
    report.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return CompletedMatrix(masked, pred, report);
}

}  // namespace metacf
