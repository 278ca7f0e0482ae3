#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "../error.hpp"
#include "../perf_matrix.hpp"
#include "../random.hpp"

namespace metacf {

/// Noisy low-rank accuracy matrix for verifying completion engines.
///
/// For rank >= 2 the first factor column is all ones on both sides, so the
/// remaining rank - 1 Gaussian components ride on a constant and the affine
/// rescale into [55, 95] stays inside the rank-`rank` span. For rank 1 the
/// factors are drawn from [sqrt(55/95), 1] and the product is scaled by 95,
/// which keeps values in [55, 95] without an additive offset. Gaussian noise
/// of `noise_sigma` is added last and the result clipped to [0, 100].
inline PerformanceMatrix gen_synthetic(std::size_t rows, std::size_t cols, std::size_t rank, double noise_sigma,
                                       std::uint64_t seed) {
    if (rows == 0 || cols == 0) throw ArgumentError("rows and cols must be positive");
    if (rank == 0 || rank > std::min(rows, cols))
        throw ArgumentError("rank " + std::to_string(rank) + " must lie in [1, min(rows, cols)]");
    if (!(noise_sigma >= 0.0)) throw ArgumentError("noise_sigma must be >= 0");

    Rng rng(seed);
    std::vector<double> a(rows * rank), b(cols * rank);
    std::vector<double> m(rows * cols, 0.0);
    if (rank == 1) {
        const double lo = std::sqrt(55.0 / 95.0);
        for (auto& v : a) v = rng.uniform(lo, 1.0);
        for (auto& v : b) v = rng.uniform(lo, 1.0);
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j) m[i * cols + j] = 95.0 * a[i] * b[j];
    } else {
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t k = 0; k < rank; ++k) a[i * rank + k] = k == 0 ? 1.0 : rng.normal();
        for (std::size_t j = 0; j < cols; ++j)
            for (std::size_t k = 0; k < rank; ++k) b[j * rank + k] = k == 0 ? 1.0 : rng.normal();
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j) {
                double s = 0.0;
                for (std::size_t k = 0; k < rank; ++k) s += a[i * rank + k] * b[j * rank + k];
                m[i * cols + j] = s;
            }
        const auto [lo, hi] = std::minmax_element(m.begin(), m.end());
        const double min = *lo, span = *hi - *lo;
        for (auto& v : m) v = span > 0.0 ? 55.0 + 40.0 * (v - min) / span : 75.0;
    }

    std::vector<std::string> row_ids, col_ids;
    for (std::size_t i = 0; i < rows; ++i) row_ids.push_back("d" + std::to_string(i + 1));
    for (std::size_t j = 0; j < cols; ++j) col_ids.push_back("c" + std::to_string(j + 1));
    PerformanceMatrix out(std::move(row_ids), std::move(col_ids));
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) {
            double v = m[i * cols + j];
            if (noise_sigma > 0.0) v += noise_sigma * rng.normal();
            out.set(i, j, std::clamp(v, 0.0, 100.0));
        }
    return out;
}

}  // namespace metacf
