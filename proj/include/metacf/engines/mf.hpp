#pragma once

#include <chrono>
#include <cmath>
#include <span>
#include <vector>

#include "../error.hpp"
#include "../perf_matrix.hpp"
#include "../random.hpp"
#include "completed_matrix.hpp"
#include "descent.hpp"
#include "engine_setting.hpp"

namespace metacf {

namespace detail {

/// Biased matrix factorization in standardized units:
///   prediction(i, j) = mu + b_i + c_j + <U_i, V_j>
/// All parameters live in one flat vector so gradients can be compared
/// coordinate-wise against finite differences.
///
/// Objective (mean over observed cells of the per-cell term):
///   f_ij = e_ij^2 + lambda (b_i^2 + c_j^2 + |U_i|^2 + |V_j|^2)
class MfModel {
public:
    MfModel(std::size_t rows, std::size_t cols, std::size_t rank, double lambda)
        : rows_(rows), cols_(cols), rank_(rank), lambda_(lambda), theta_(1 + rows + cols + (rows + cols) * rank, 0.0) {}

    void init(Rng& rng) {
        for (std::size_t k = u_offset(); k < theta_.size(); ++k) theta_[k] = rng.uniform(-0.1, 0.1);
    }

    std::size_t rank() const { return rank_; }
    std::vector<double>& parameters() { return theta_; }
    const std::vector<double>& parameters() const { return theta_; }

    double predict(std::size_t i, std::size_t j) const {
        const double* u = &theta_[u_offset() + i * rank_];
        const double* v = &theta_[v_offset() + j * rank_];
        double dot = 0.0;
        for (std::size_t k = 0; k < rank_; ++k) dot += u[k] * v[k];
        return theta_[0] + theta_[1 + i] + theta_[1 + rows_ + j] + dot;
    }

    double loss(std::span<const Observation> data) const {
        if (data.empty()) return 0.0;
        double sum = 0.0;
        for (const auto& o : data) {
            const double e = o.target - predict(o.row, o.col);
            sum += e * e + lambda_ * penalty(o.row, o.col);
        }
        return sum / static_cast<double>(data.size());
    }

    /// Full gradient of loss() in parameter layout.
    std::vector<double> gradient(std::span<const Observation> data) const {
        std::vector<double> g(theta_.size(), 0.0);
        const double scale = 1.0 / static_cast<double>(data.size());
        for (const auto& o : data) {
            const double e = o.target - predict(o.row, o.col);
            accumulate(o.row, o.col, e, scale, g.data());
        }
        return g;
    }

    void sgd_epoch(std::span<const Observation> ordered, double lr) {
        for (const auto& o : ordered) {
            const double e = o.target - predict(o.row, o.col);
            const std::size_t bi = 1 + o.row;
            const std::size_t cj = 1 + rows_ + o.col;
            double* u = &theta_[u_offset() + o.row * rank_];
            double* v = &theta_[v_offset() + o.col * rank_];
            theta_[0] += lr * 2.0 * e;
            theta_[bi] += lr * 2.0 * (e - lambda_ * theta_[bi]);
            theta_[cj] += lr * 2.0 * (e - lambda_ * theta_[cj]);
            for (std::size_t k = 0; k < rank_; ++k) {
                const double uk = u[k];
                u[k] += lr * 2.0 * (e * v[k] - lambda_ * uk);
                v[k] += lr * 2.0 * (e * uk - lambda_ * v[k]);
            }
        }
    }

private:
    std::size_t u_offset() const { return 1 + rows_ + cols_; }
    std::size_t v_offset() const { return u_offset() + rows_ * rank_; }

    double penalty(std::size_t i, std::size_t j) const {
        double p = theta_[1 + i] * theta_[1 + i] + theta_[1 + rows_ + j] * theta_[1 + rows_ + j];
        for (std::size_t k = 0; k < rank_; ++k) {
            const double u = theta_[u_offset() + i * rank_ + k];
            const double v = theta_[v_offset() + j * rank_ + k];
            p += u * u + v * v;
        }
        return p;
    }

    void accumulate(std::size_t i, std::size_t j, double e, double scale, double* g) const {
        const std::size_t bi = 1 + i;
        const std::size_t cj = 1 + rows_ + j;
        g[0] += scale * (-2.0 * e);
        g[bi] += scale * (-2.0 * e + 2.0 * lambda_ * theta_[bi]);
        g[cj] += scale * (-2.0 * e + 2.0 * lambda_ * theta_[cj]);
        for (std::size_t k = 0; k < rank_; ++k) {
            const std::size_t uk = u_offset() + i * rank_ + k;
            const std::size_t vk = v_offset() + j * rank_ + k;
            g[uk] += scale * (-2.0 * e * theta_[vk] + 2.0 * lambda_ * theta_[uk]);
            g[vk] += scale * (-2.0 * e * theta_[uk] + 2.0 * lambda_ * theta_[vk]);
        }
    }

    std::size_t rows_, cols_, rank_;
    double lambda_;
    std::vector<double> theta_;
};

/// Observed mean and standard deviation used to standardize training targets.
struct Standardizer {
    double mean = 0.0;
    double scale = 1.0;

    static Standardizer fit(const PerformanceMatrix& m) {
        double sum = 0.0, sq = 0.0;
        std::size_t n = 0;
        for (std::size_t r = 0; r < m.rows(); ++r)
            for (auto v : m.row(r))
                if (!std::isnan(v)) {
                    sum += v;
                    sq += v * v;
                    ++n;
                }
        Standardizer s;
        if (n == 0) return s;
        s.mean = sum / static_cast<double>(n);
        const double var = std::max(0.0, sq / static_cast<double>(n) - s.mean * s.mean);
        s.scale = var > 1e-12 ? std::sqrt(var) : 1.0;
        return s;
    }
};

}  // namespace detail

/// Matrix factorization with global, row and column biases trained by SGD on
/// the observed cells.
inline CompletedMatrix complete_mf(const PerformanceMatrix& masked, const EngineSetting& setting) {
    const auto start = std::chrono::steady_clock::now();
    if (setting.engine != Engine::mf) throw ArgumentError("complete_mf needs an mf setting");
    validate(setting);
    const auto& p = std::get<MfParams>(setting.hyperparams);
    if (masked.observed_count() == 0) throw InputError("mf: matrix has no observed cells");

    const auto z = detail::Standardizer::fit(masked);
    const auto data = observations(masked, [&](double v) { return (v - z.mean) / z.scale; });

    Rng rng(derive_seed(setting.seed, {0x6d66}));
    detail::MfModel model(masked.rows(), masked.cols(), static_cast<std::size_t>(p.rank), p.regularization);
    model.init(rng);
    const auto outcome = detail::descend(
        model, data, {.learning_rate = p.learning_rate, .max_epochs = p.max_epochs, .tolerance = p.tolerance}, rng,
        "mf");

    std::vector<double> pred(masked.rows() * masked.cols());
    for (std::size_t r = 0; r < masked.rows(); ++r)
        for (std::size_t c = 0; c < masked.cols(); ++c)
            pred[r * masked.cols() + c] = z.mean + z.scale * model.predict(r, c);

    FitReport report;
    report.iterations_run = outcome.epochs;
    report.initial_loss = outcome.initial_loss * z.scale * z.scale;
    report.final_loss = outcome.final_loss * z.scale * z.scale;
    report.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return CompletedMatrix(masked, pred, report);
}

}  // namespace metacf
