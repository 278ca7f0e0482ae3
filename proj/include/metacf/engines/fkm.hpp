#pragma once

#include <chrono>
#include <cmath>
#include <limits>
#include <vector>

#include "../error.hpp"
#include "../perf_matrix.hpp"
#include "../random.hpp"
#include "completed_matrix.hpp"
#include "engine_setting.hpp"

namespace metacf {

/// Fuzzy k-means over dataset rows with partial distances.
struct FkmState {
    std::size_t clusters = 0;
    std::vector<double> centroids;    // clusters x cols
    std::vector<double> memberships;  // rows x clusters, each row sums to 1
};

namespace detail {

/// Squared Euclidean distance over the row's observed coordinates, scaled by
/// cols / #shared. Returns NaN when nothing is shared.
inline double partial_distance(std::span<const double> row, std::span<const double> centroid) {
    double d = 0.0;
    std::size_t shared = 0;
    for (std::size_t j = 0; j < row.size(); ++j) {
        if (std::isnan(row[j])) continue;
        const double diff = row[j] - centroid[j];
        d += diff * diff;
        ++shared;
    }
    if (shared == 0) return std::numeric_limits<double>::quiet_NaN();
    return d * static_cast<double>(row.size()) / static_cast<double>(shared);
}

/// Standard FCM membership rule u_ik = 1 / sum_l (d_ik / d_il)^(1/(m-1)) on
/// squared distances. Zero distances share the membership equally.
inline void update_memberships(const PerformanceMatrix& m, FkmState& s, double fuzzifier) {
    const std::size_t c = s.clusters;
    const double expo = 1.0 / (fuzzifier - 1.0);
    std::vector<double> d(c);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        double* u = &s.memberships[i * c];
        bool none_shared = false;
        std::size_t zeros = 0;
        for (std::size_t k = 0; k < c; ++k) {
            d[k] = partial_distance(m.row(i), {&s.centroids[k * m.cols()], m.cols()});
            if (std::isnan(d[k])) none_shared = true;
            else if (d[k] == 0.0) ++zeros;
        }
        if (none_shared) {
            for (std::size_t k = 0; k < c; ++k) u[k] = 1.0 / static_cast<double>(c);
            continue;
        }
        if (zeros > 0) {
            for (std::size_t k = 0; k < c; ++k) u[k] = d[k] == 0.0 ? 1.0 / static_cast<double>(zeros) : 0.0;
            continue;
        }
        for (std::size_t k = 0; k < c; ++k) {
            double sum = 0.0;
            for (std::size_t l = 0; l < c; ++l) sum += std::pow(d[k] / d[l], expo);
            u[k] = 1.0 / sum;
        }
    }
}

/// Centroid column j is the u^m-weighted mean of the rows observing j; empty
/// columns take the global observed mean.
inline void update_centroids(const PerformanceMatrix& m, FkmState& s, double fuzzifier, double global_mean) {
    const std::size_t c = s.clusters;
    for (std::size_t k = 0; k < c; ++k) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            double num = 0.0, den = 0.0;
            for (std::size_t i = 0; i < m.rows(); ++i) {
                const double v = m.row(i)[j];
                if (std::isnan(v)) continue;
                const double w = std::pow(s.memberships[i * c + k], fuzzifier);
                num += w * v;
                den += w;
            }
            s.centroids[k * m.cols() + j] = den > 0.0 ? num / den : global_mean;
        }
    }
}

/// FCM objective over observed cells, divided by the observed count:
/// sum_i sum_k u_ik^m sum_{j observed in i} (x_ij - C_kj)^2 / N.
/// Both alternating steps minimize it exactly, so it never increases.
inline double fkm_objective(const PerformanceMatrix& m, const FkmState& s, double fuzzifier) {
    double total = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const auto row = m.row(i);
        for (std::size_t k = 0; k < s.clusters; ++k) {
            const double w = std::pow(s.memberships[i * s.clusters + k], fuzzifier);
            const double* cen = &s.centroids[k * m.cols()];
            for (std::size_t j = 0; j < m.cols(); ++j)
                if (!std::isnan(row[j])) total += w * (row[j] - cen[j]) * (row[j] - cen[j]);
        }
        n += m.observed_in_row(i);
    }
    return n ? total / static_cast<double>(n) : 0.0;
}

/// k-means++ style seeding over distinct rows (missing coordinates filled with
/// column means): the first row uniformly, later rows with probability
/// proportional to the squared distance from the nearest chosen centroid.
inline void seed_centroids(const PerformanceMatrix& m, FkmState& s, Rng& rng) {
    const auto stats = column_stats(m);
    const double global = stats.global_mean.value_or(0.0);
    const std::size_t cols = m.cols();
    std::vector<double> filled(m.rows() * cols);
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < cols; ++j) {
            const double v = m.row(i)[j];
            filled[i * cols + j] = std::isnan(v) ? stats.mean[j].value_or(global) : v;
        }

    std::vector<bool> taken(m.rows(), false);
    std::vector<double> nearest(m.rows(), std::numeric_limits<double>::infinity());
    for (std::size_t k = 0; k < s.clusters; ++k) {
        std::size_t pick = 0;
        double total = 0.0;
        for (std::size_t i = 0; i < m.rows(); ++i)
            if (!taken[i] && std::isfinite(nearest[i])) total += nearest[i];
        if (k == 0 || total <= 0.0) {
            std::vector<std::size_t> free;
            for (std::size_t i = 0; i < m.rows(); ++i)
                if (!taken[i]) free.push_back(i);
            pick = free[rng.below(free.size())];
        } else {
            double target = rng.uniform() * total;
            pick = m.rows();
            for (std::size_t i = 0; i < m.rows(); ++i) {
                if (taken[i]) continue;
                pick = i;
                target -= nearest[i];
                if (target < 0.0) break;
            }
        }
        taken[pick] = true;
        std::copy_n(&filled[pick * cols], cols, &s.centroids[k * cols]);
        for (std::size_t i = 0; i < m.rows(); ++i) {
            double d = 0.0;
            for (std::size_t j = 0; j < cols; ++j) {
                const double diff = filled[i * cols + j] - filled[pick * cols + j];
                d += diff * diff;
            }
            nearest[i] = std::min(nearest[i], d);
        }
    }
}

}  // namespace detail

/// Runs the alternating optimization and returns the final state along with
/// iteration count and losses.
inline FkmState fit_fkm(const PerformanceMatrix& masked, const FkmParams& p, std::uint64_t seed, FitReport* report = nullptr) {
    if (p.cluster_count < 1) throw ArgumentError("cluster_count must be >= 1");
    if (static_cast<std::size_t>(p.cluster_count) > masked.rows())
        throw ArgumentError("cluster_count " + std::to_string(p.cluster_count) + " exceeds row count " +
                            std::to_string(masked.rows()));
    const auto stats = column_stats(masked);
    if (!stats.global_mean) throw InputError("fkm: matrix has no observed cells");

    FkmState s;
    s.clusters = static_cast<std::size_t>(p.cluster_count);
    s.centroids.assign(s.clusters * masked.cols(), 0.0);
    s.memberships.assign(masked.rows() * s.clusters, 0.0);

    Rng rng(derive_seed(seed, {0x666b6d}));
    detail::seed_centroids(masked, s, rng);
    detail::update_memberships(masked, s, p.fuzzifier);
    double prev = detail::fkm_objective(masked, s, p.fuzzifier);
    const double initial = prev;
    int iters = 0;
    while (iters < p.max_iters) {
        ++iters;
        detail::update_centroids(masked, s, p.fuzzifier, *stats.global_mean);
        detail::update_memberships(masked, s, p.fuzzifier);
        const double cur = detail::fkm_objective(masked, s, p.fuzzifier);
        const double rel = prev > 0.0 ? (prev - cur) / prev : 0.0;
        prev = std::min(prev, cur);
        if (rel < p.tolerance) break;
    }
    // Centroids consistent with the final memberships.
    detail::update_centroids(masked, s, p.fuzzifier, *stats.global_mean);
    if (report) {
        report->iterations_run = iters;
        report->initial_loss = initial;
        report->final_loss = std::min(prev, detail::fkm_objective(masked, s, p.fuzzifier));
    }
    return s;
}

/// Missing cell (i, j) is predicted as sum_k u_ik C_kj.
inline CompletedMatrix complete_fkm(const PerformanceMatrix& masked, const EngineSetting& setting) {
    const auto start = std::chrono::steady_clock::now();
    if (setting.engine != Engine::fkm) throw ArgumentError("complete_fkm needs an fkm setting");
    const auto* p = std::get_if<FkmParams>(&setting.hyperparams);
    if (!p) throw ArgumentError("fkm setting needs fkm hyperparameters");
    if (static_cast<std::size_t>(std::max(p->cluster_count, 0)) > masked.rows())
        throw ArgumentError("cluster_count " + std::to_string(p->cluster_count) + " exceeds row count " +
                            std::to_string(masked.rows()));
    validate(setting);

    FitReport report;
    const auto s = fit_fkm(masked, *p, setting.seed, &report);
    std::vector<double> pred(masked.rows() * masked.cols(), 0.0);
    for (std::size_t i = 0; i < masked.rows(); ++i)
        for (std::size_t j = 0; j < masked.cols(); ++j) {
            double v = 0.0;
            for (std::size_t k = 0; k < s.clusters; ++k)
                v += s.memberships[i * s.clusters + k] * s.centroids[k * masked.cols() + j];
            pred[i * masked.cols() + j] = v;
        }
    report.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return CompletedMatrix(masked, pred, report);
}

}  // namespace metacf
