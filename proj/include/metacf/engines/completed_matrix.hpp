#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "../perf_matrix.hpp"

namespace metacf {

struct FitReport {
    int iterations_run = 0;
    double initial_loss = 0.0;  // accuracy-point^2 units
    double final_loss = 0.0;
    double wall_time_seconds = 0.0;
};

/// Dense result of a completion: observed cells verbatim, predictions
/// elsewhere, everything in [0, 100].
class CompletedMatrix {
public:
    CompletedMatrix() = default;

    /// Copies observed cells of `masked` verbatim and clips `predictions`
    /// (row-major, rows x cols) into [0, 100] for the rest.
    CompletedMatrix(const PerformanceMatrix& masked, std::span<const double> predictions, FitReport report)
        : row_ids_(masked.row_ids()), col_ids_(masked.col_ids()), values_(masked.rows() * masked.cols()),
          observed_(values_.size(), 0), report_(report) {
        for (std::size_t r = 0; r < masked.rows(); ++r) {
            for (std::size_t c = 0; c < masked.cols(); ++c) {
                const std::size_t k = r * masked.cols() + c;
                if (auto v = masked.at(r, c)) {
                    values_[k] = *v;
                    observed_[k] = 1;
                } else {
                    values_[k] = std::clamp(predictions[k], 0.0, 100.0);
                }
            }
        }
    }

    std::size_t rows() const { return row_ids_.size(); }
    std::size_t cols() const { return col_ids_.size(); }
    const std::vector<std::string>& row_ids() const { return row_ids_; }
    const std::vector<std::string>& col_ids() const { return col_ids_; }

    double value(std::size_t r, std::size_t c) const { return values_[r * cols() + c]; }
    bool was_observed(std::size_t r, std::size_t c) const { return observed_[r * cols() + c] != 0; }
    std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols(), cols()}; }
    const std::vector<double>& values() const { return values_; }

    const FitReport& fit_report() const { return report_; }
    FitReport& fit_report() { return report_; }

    /// Fully observed matrix with the completed values.
    PerformanceMatrix to_matrix() const {
        PerformanceMatrix m(row_ids_, col_ids_);
        for (std::size_t r = 0; r < rows(); ++r)
            for (std::size_t c = 0; c < cols(); ++c) m.set(r, c, value(r, c));
        return m;
    }

private:
    std::vector<std::string> row_ids_;
    std::vector<std::string> col_ids_;
    std::vector<double> values_;
    std::vector<std::uint8_t> observed_;
    FitReport report_;
};

/// One observed cell in training units.
struct Observation {
    std::uint32_t row = 0;
    std::uint32_t col = 0;
    double target = 0.0;
};

/// Observed cells of `m` mapped through `to_units`.
template <typename F>
std::vector<Observation> observations(const PerformanceMatrix& m, F&& to_units) {
    std::vector<Observation> out;
    out.reserve(m.observed_count());
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c)
            if (auto v = m.at(r, c))
                out.push_back({static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(c), to_units(*v)});
    return out;
}

}  // namespace metacf
