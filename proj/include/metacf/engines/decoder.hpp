#pragma once

#include <algorithm>
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

inline double sigmoid(double a) { return 1.0 / (1.0 + std::exp(-a)); }

/// Latent-variable decoder shared by NLPCA and UBP.
///
/// Each dataset row i owns a free latent vector z_i. The decoder maps it
/// through tanh hidden layers (none for NLPCA) to one sigmoid unit per
/// column, so prediction(i, j) = sigmoid(w_j . h_L(z_i) + b_j) in [0, 1]
/// (accuracy / 100). Latents and weights are trained together by
/// backpropagating the error of observed cells only.
///
/// Objective: mean over observed cells of
///   e_ij^2 + lambda (|z_i|^2 + |w_j|^2)
/// plus lambda times the squared norm of the hidden-layer weight matrices.
/// Biases are unregularized.
class DecoderModel {
public:
    enum Group : unsigned { latents = 1u, weights = 2u, all = 3u };

    DecoderModel(std::size_t rows, std::size_t cols, std::size_t latent_dim, std::vector<int> hidden, double lambda)
        : rows_(rows), cols_(cols), latent_(latent_dim), lambda_(lambda) {
        widths_.push_back(latent_dim);
        for (int h : hidden) widths_.push_back(static_cast<std::size_t>(h));
        std::size_t off = rows * latent_dim;
        for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
            layer_w_.push_back(off);
            off += widths_[l + 1] * widths_[l];
            layer_b_.push_back(off);
            off += widths_[l + 1];
        }
        out_w_ = off;
        off += cols * widths_.back();
        out_b_ = off;
        off += cols;
        theta_.assign(off, 0.0);
    }

    /// Latents and output weights ~ U(-0.1, 0.1). Hidden tanh layers use
    /// Glorot-uniform bounds; at +-0.1 their activations are too small for the
    /// latents to move. Output biases start at the logit of the column's
    /// observed mean.
    void init(Rng& rng, std::span<const double> column_fraction_means) {
        for (std::size_t k = 0; k < rows_ * latent_; ++k) theta_[k] = rng.uniform(-0.1, 0.1);
        for (std::size_t l = 0; l < layer_w_.size(); ++l) {
            const double r = std::sqrt(6.0 / static_cast<double>(widths_[l] + widths_[l + 1]));
            for (std::size_t k = 0; k < widths_[l + 1] * widths_[l]; ++k) theta_[layer_w_[l] + k] = rng.uniform(-r, r);
        }
        for (std::size_t k = out_w_; k < out_b_; ++k) theta_[k] = rng.uniform(-0.1, 0.1);
        for (std::size_t l = 0; l < layer_b_.size(); ++l)
            for (std::size_t k = 0; k < widths_[l + 1]; ++k) theta_[layer_b_[l] + k] = 0.0;
        for (std::size_t j = 0; j < cols_; ++j) {
            const double f = std::clamp(column_fraction_means[j], 0.01, 0.99);
            theta_[out_b_ + j] = std::log(f / (1.0 - f));
        }
    }

    void set_trainable(unsigned groups) { trainable_ = groups; }

    std::vector<double>& parameters() { return theta_; }
    const std::vector<double>& parameters() const { return theta_; }
    std::size_t hidden_layer_count() const { return layer_w_.size(); }

    /// Activations of every layer for row i: acts[0] = z_i, acts[L] = last hidden.
    std::vector<std::vector<double>> forward_hidden(std::size_t i) const {
        std::vector<std::vector<double>> acts;
        acts.emplace_back(theta_.begin() + static_cast<std::ptrdiff_t>(i * latent_),
                          theta_.begin() + static_cast<std::ptrdiff_t>((i + 1) * latent_));
        for (std::size_t l = 0; l < layer_w_.size(); ++l) {
            const auto& in = acts.back();
            std::vector<double> out(widths_[l + 1]);
            for (std::size_t o = 0; o < out.size(); ++o) {
                double a = theta_[layer_b_[l] + o];
                const double* w = &theta_[layer_w_[l] + o * widths_[l]];
                for (std::size_t k = 0; k < in.size(); ++k) a += w[k] * in[k];
                out[o] = std::tanh(a);
            }
            acts.push_back(std::move(out));
        }
        return acts;
    }

    double output(const std::vector<double>& last, std::size_t j) const {
        const std::size_t width = widths_.back();
        const double* w = &theta_[out_w_ + j * width];
        double a = theta_[out_b_ + j];
        for (std::size_t k = 0; k < width; ++k) a += w[k] * last[k];
        return sigmoid(a);
    }

    double predict(std::size_t i, std::size_t j) const { return output(forward_hidden(i).back(), j); }

    double loss(std::span<const Observation> data) const {
        if (data.empty()) return 0.0;
        std::vector<std::vector<std::vector<double>>> cache(rows_);
        double sum = 0.0;
        for (const auto& o : data) {
            auto& acts = cache[o.row];
            if (acts.empty()) acts = forward_hidden(o.row);
            const double e = o.target - output(acts.back(), o.col);
            sum += e * e + lambda_ * (sq_norm(o.row * latent_, latent_) + sq_norm(out_w_ + o.col * widths_.back(), widths_.back()));
        }
        return sum / static_cast<double>(data.size()) + lambda_ * hidden_sq_norm();
    }

    /// Full gradient of loss() in parameter layout (all groups).
    std::vector<double> gradient(std::span<const Observation> data) const {
        std::vector<double> g(theta_.size(), 0.0);
        const double scale = 1.0 / static_cast<double>(data.size());
        for (const auto& o : data) {
            const auto acts = forward_hidden(o.row);
            backprop(o, acts, scale, g.data(), all);
        }
        for (std::size_t l = 0; l < layer_w_.size(); ++l)
            for (std::size_t k = 0; k < widths_[l + 1] * widths_[l]; ++k)
                g[layer_w_[l] + k] += 2.0 * lambda_ * theta_[layer_w_[l] + k];
        return g;
    }

    /// One pass of per-cell updates. The hidden-weight penalty is spread
    /// evenly across the cells so that the expected step is the gradient.
    void sgd_epoch(std::span<const Observation> ordered, double lr) {
        std::vector<double> g(theta_.size(), 0.0);
        std::vector<std::size_t> touched;
        for (const auto& o : ordered) {
            const auto acts = forward_hidden(o.row);
            touched.clear();
            backprop_sparse(o, acts, g.data(), touched);
            const bool hidden = (trainable_ & weights) && !layer_w_.empty();
            if (hidden) {
                for (std::size_t l = 0; l < layer_w_.size(); ++l)
                    for (std::size_t k = 0; k < widths_[l + 1] * widths_[l]; ++k)
                        g[layer_w_[l] + k] += 2.0 * lambda_ * theta_[layer_w_[l] + k];
            }
            for (std::size_t idx : touched) {
                theta_[idx] -= lr * g[idx];
                g[idx] = 0.0;
            }
        }
    }

private:
    double sq_norm(std::size_t off, std::size_t n) const {
        double s = 0.0;
        for (std::size_t k = 0; k < n; ++k) s += theta_[off + k] * theta_[off + k];
        return s;
    }

    double hidden_sq_norm() const {
        double s = 0.0;
        for (std::size_t l = 0; l < layer_w_.size(); ++l) s += sq_norm(layer_w_[l], widths_[l + 1] * widths_[l]);
        return s;
    }

    /// Accumulates scale * d f_ij / d theta into g (hidden-weight penalty excluded).
    void backprop(const Observation& o, const std::vector<std::vector<double>>& acts, double scale, double* g,
                  unsigned groups) const {
        backprop_impl(o, acts, scale, g, groups, nullptr);
    }

    void backprop_sparse(const Observation& o, const std::vector<std::vector<double>>& acts, double* g,
                         std::vector<std::size_t>& touched) const {
        backprop_impl(o, acts, 1.0, g, trainable_, &touched);
    }

    void backprop_impl(const Observation& o, const std::vector<std::vector<double>>& acts, double scale, double* g,
                       unsigned groups, std::vector<std::size_t>* touched) const {
        const std::size_t width = widths_.back();
        const std::size_t ow = out_w_ + o.col * width;
        const double y = output(acts.back(), o.col);
        const double e = o.target - y;
        const double delta = scale * (-2.0 * e * y * (1.0 - y));
        const bool train_w = groups & weights;
        const bool train_z = groups & latents;

        auto add = [&](std::size_t idx, double v) {
            g[idx] += v;
            if (touched) touched->push_back(idx);
        };

        std::vector<double> dh(width);
        for (std::size_t k = 0; k < width; ++k) dh[k] = delta * theta_[ow + k];
        if (train_w) {
            for (std::size_t k = 0; k < width; ++k) add(ow + k, delta * acts.back()[k] + scale * 2.0 * lambda_ * theta_[ow + k]);
            add(out_b_ + o.col, delta);
        }
        for (std::size_t l = layer_w_.size(); l-- > 0;) {
            const auto& out = acts[l + 1];
            const auto& in = acts[l];
            std::vector<double> dpre(out.size());
            for (std::size_t q = 0; q < out.size(); ++q) dpre[q] = dh[q] * (1.0 - out[q] * out[q]);
            std::vector<double> din(in.size(), 0.0);
            for (std::size_t q = 0; q < out.size(); ++q) {
                const std::size_t row = layer_w_[l] + q * in.size();
                for (std::size_t k = 0; k < in.size(); ++k) {
                    din[k] += dpre[q] * theta_[row + k];
                    if (train_w) add(row + k, dpre[q] * in[k]);
                }
                if (train_w) add(layer_b_[l] + q, dpre[q]);
            }
            dh = std::move(din);
        }
        if (train_z) {
            const std::size_t zo = o.row * latent_;
            for (std::size_t k = 0; k < latent_; ++k) add(zo + k, dh[k] + scale * 2.0 * lambda_ * theta_[zo + k]);
        }
    }

    std::size_t rows_, cols_, latent_;
    double lambda_;
    std::vector<std::size_t> widths_;
    std::vector<std::size_t> layer_w_, layer_b_;
    std::size_t out_w_ = 0, out_b_ = 0;
    std::vector<double> theta_;
    unsigned trainable_ = all;
};

inline CompletedMatrix complete_decoder(const PerformanceMatrix& masked, const EngineSetting& setting) {
    const auto start = std::chrono::steady_clock::now();
    validate(setting);
    const auto& p = std::get<DecoderParams>(setting.hyperparams);
    const auto name = engine_name(setting.engine);
    const auto stats = column_stats(masked);
    if (!stats.global_mean) throw InputError(std::string(name) + ": matrix has no observed cells");

    std::vector<double> col_means(masked.cols());
    for (std::size_t j = 0; j < masked.cols(); ++j) col_means[j] = stats.mean[j].value_or(*stats.global_mean) / 100.0;

    const auto data = observations(masked, [](double v) { return v / 100.0; });
    Rng rng(derive_seed(setting.seed, {0x6e6e, static_cast<std::uint64_t>(setting.engine)}));
    DecoderModel model(masked.rows(), masked.cols(), static_cast<std::size_t>(p.latent_dim), p.hidden_layers,
                       p.regularization);
    model.init(rng, col_means);

    const DescentControl ctl{.learning_rate = p.learning_rate, .max_epochs = p.max_epochs, .tolerance = p.tolerance};
    DescentOutcome total;
    if (setting.engine == Engine::ubp) {
        // Latents against the frozen random decoder, then the decoder against
        // frozen latents, then both.
        const unsigned phases[] = {DecoderModel::latents, DecoderModel::weights, DecoderModel::all};
        for (std::size_t ph = 0; ph < 3; ++ph) {
            model.set_trainable(phases[ph]);
            const auto o = descend(model, data, ctl, rng, name);
            if (ph == 0) total.initial_loss = o.initial_loss;
            total.final_loss = o.final_loss;
            total.epochs += o.epochs;
        }
    } else {
        total = descend(model, data, ctl, rng, name);
    }

    std::vector<double> pred(masked.rows() * masked.cols());
    for (std::size_t i = 0; i < masked.rows(); ++i) {
        const auto last = model.forward_hidden(i).back();
        for (std::size_t j = 0; j < masked.cols(); ++j) pred[i * masked.cols() + j] = 100.0 * model.output(last, j);
    }
    FitReport report;
    report.iterations_run = total.epochs;
    report.initial_loss = total.initial_loss * 1e4;
    report.final_loss = total.final_loss * 1e4;
    report.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return CompletedMatrix(masked, pred, report);
}

}  // namespace detail

/// Nonlinear PCA: latent rows decoded by an affine map and a sigmoid output.
inline CompletedMatrix complete_nlpca(const PerformanceMatrix& masked, const EngineSetting& setting) {
    if (setting.engine != Engine::nlpca) throw ArgumentError("complete_nlpca needs an nlpca setting");
    return detail::complete_decoder(masked, setting);
}

/// Unsupervised backpropagation: as NLPCA with tanh hidden layers, trained in
/// three phases.
inline CompletedMatrix complete_ubp(const PerformanceMatrix& masked, const EngineSetting& setting) {
    if (setting.engine != Engine::ubp) throw ArgumentError("complete_ubp needs a ubp setting");
    return detail::complete_decoder(masked, setting);
}

}  // namespace metacf
