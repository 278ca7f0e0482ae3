#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "../error.hpp"
#include "../perf_matrix.hpp"
#include "../random.hpp"

namespace metacf {

/// Training data in encoded form: row-major features plus class codes.
struct EncodedSet {
    std::vector<double> x;  // n x width
    std::vector<int> y;
    std::size_t width = 0;
    std::size_t n_classes = 0;

    std::size_t size() const { return y.size(); }
    std::span<const double> row(std::size_t i) const { return {x.data() + i * width, width}; }
};

class Learner {
public:
    virtual ~Learner() = default;
    virtual void fit(const EncodedSet& train, Rng& rng) = 0;
    virtual int predict(std::span<const double> x) const = 0;
};

namespace detail {

inline int argmax(std::span<const double> v) {
    return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

inline int majority(std::span<const int> y, std::size_t n_classes) {
    std::vector<double> counts(n_classes, 0.0);
    for (int c : y) counts[static_cast<std::size_t>(c)] += 1.0;
    return argmax(counts);
}

}  // namespace detail

/// k nearest neighbours, Euclidean on the encoded features.
class KnnLearner final : public Learner {
public:
    KnnLearner(int k, bool inverse_distance) : k_(static_cast<std::size_t>(std::max(k, 1))), inverse_(inverse_distance) {}

    void fit(const EncodedSet& train, Rng&) override { train_ = train; }

    int predict(std::span<const double> x) const override {
        const std::size_t n = train_.size();
        std::vector<std::pair<double, std::size_t>> dist(n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto r = train_.row(i);
            double d = 0.0;
            for (std::size_t j = 0; j < x.size(); ++j) d += (x[j] - r[j]) * (x[j] - r[j]);
            dist[i] = {d, i};
        }
        const std::size_t k = std::min(k_, n);
        std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
        std::vector<double> votes(train_.n_classes, 0.0);
        for (std::size_t i = 0; i < k; ++i) {
            const double w = inverse_ ? 1.0 / (std::sqrt(dist[i].first) + 1e-9) : 1.0;
            votes[static_cast<std::size_t>(train_.y[dist[i].second])] += w;
        }
        return detail::argmax(votes);
    }

private:
    std::size_t k_;
    bool inverse_;
    EncodedSet train_;
};

/// Naive Bayes over features discretized into equal-width bins of [0, 1]
/// (the encoded range), with Laplace smoothing alpha on bin and class counts.
class NaiveBayesLearner final : public Learner {
public:
    static constexpr std::size_t kBins = 10;

    explicit NaiveBayesLearner(double alpha) : alpha_(alpha) {}

    static std::size_t bin(double v) {
        const double c = std::clamp(v, 0.0, 1.0);
        return std::min(kBins - 1, static_cast<std::size_t>(c * static_cast<double>(kBins)));
    }

    void fit(const EncodedSet& train, Rng&) override {
        classes_ = train.n_classes;
        width_ = train.width;
        std::vector<double> class_n(classes_, 0.0);
        std::vector<double> counts(classes_ * width_ * kBins, 0.0);
        for (std::size_t i = 0; i < train.size(); ++i) {
            const auto c = static_cast<std::size_t>(train.y[i]);
            class_n[c] += 1.0;
            const auto r = train.row(i);
            for (std::size_t j = 0; j < width_; ++j) counts[(c * width_ + j) * kBins + bin(r[j])] += 1.0;
        }
        log_prior_.assign(classes_, 0.0);
        log_lik_.assign(counts.size(), 0.0);
        const double total = static_cast<double>(train.size());
        for (std::size_t c = 0; c < classes_; ++c) {
            log_prior_[c] = std::log((class_n[c] + alpha_) / (total + alpha_ * static_cast<double>(classes_)));
            for (std::size_t j = 0; j < width_; ++j)
                for (std::size_t b = 0; b < kBins; ++b) {
                    const std::size_t k = (c * width_ + j) * kBins + b;
                    log_lik_[k] = std::log((counts[k] + alpha_) / (class_n[c] + alpha_ * static_cast<double>(kBins)));
                }
        }
    }

    int predict(std::span<const double> x) const override {
        std::vector<double> score(log_prior_);
        for (std::size_t c = 0; c < classes_; ++c)
            for (std::size_t j = 0; j < width_; ++j) score[c] += log_lik_[(c * width_ + j) * kBins + bin(x[j])];
        return detail::argmax(score);
    }

private:
    double alpha_;
    std::size_t classes_ = 0, width_ = 0;
    std::vector<double> log_prior_, log_lik_;
};

/// CART-style tree with Gini impurity and axis-aligned threshold splits.
/// max_depth 0 is a single majority leaf.
class DecisionTreeLearner final : public Learner {
public:
    DecisionTreeLearner(int max_depth, int min_split) : max_depth_(max_depth), min_split_(std::max(min_split, 2)) {}

    void fit(const EncodedSet& train, Rng&) override {
        nodes_.clear();
        std::vector<std::size_t> idx(train.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        build(train, idx, 0);
    }

    int predict(std::span<const double> x) const override {
        std::size_t n = 0;
        while (!nodes_[n].leaf) n = x[nodes_[n].feature] <= nodes_[n].threshold ? nodes_[n].left : nodes_[n].right;
        return nodes_[n].label;
    }

private:
    struct Node {
        bool leaf = true;
        int label = 0;
        std::size_t feature = 0;
        double threshold = 0.0;
        std::size_t left = 0, right = 0;
    };

    static double gini(std::span<const double> counts, double n) {
        if (n <= 0.0) return 0.0;
        double s = 1.0;
        for (double c : counts) s -= (c / n) * (c / n);
        return s;
    }

    std::size_t build(const EncodedSet& t, std::vector<std::size_t>& idx, int depth) {
        const std::size_t id = nodes_.size();
        nodes_.emplace_back();
        std::vector<int> ys;
        for (auto i : idx) ys.push_back(t.y[i]);
        nodes_[id].label = detail::majority(ys, t.n_classes);

        std::vector<double> total(t.n_classes, 0.0);
        for (int y : ys) total[static_cast<std::size_t>(y)] += 1.0;
        const double n = static_cast<double>(idx.size());
        const double parent = gini(total, n);
        if (depth >= max_depth_ || idx.size() < static_cast<std::size_t>(min_split_) || parent == 0.0) return id;

        double best_gain = 1e-12;
        std::size_t best_f = 0;
        double best_thr = 0.0;
        std::vector<std::size_t> order = idx;
        std::vector<double> left(t.n_classes);
        for (std::size_t f = 0; f < t.width; ++f) {
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                const double va = t.x[a * t.width + f], vb = t.x[b * t.width + f];
                return va != vb ? va < vb : a < b;
            });
            std::fill(left.begin(), left.end(), 0.0);
            for (std::size_t p = 0; p + 1 < order.size(); ++p) {
                left[static_cast<std::size_t>(t.y[order[p]])] += 1.0;
                const double v = t.x[order[p] * t.width + f];
                const double next = t.x[order[p + 1] * t.width + f];
                if (v == next) continue;
                const double nl = static_cast<double>(p + 1);
                const double nr = n - nl;
                std::vector<double> right(t.n_classes);
                for (std::size_t c = 0; c < t.n_classes; ++c) right[c] = total[c] - left[c];
                const double gain = parent - (nl / n) * gini(left, nl) - (nr / n) * gini(right, nr);
                if (gain > best_gain) {
                    best_gain = gain;
                    best_f = f;
                    best_thr = 0.5 * (v + next);
                }
            }
        }
        if (best_gain <= 1e-12) return id;

        std::vector<std::size_t> li, ri;
        for (auto i : idx) (t.x[i * t.width + best_f] <= best_thr ? li : ri).push_back(i);
        nodes_[id].leaf = false;
        nodes_[id].feature = best_f;
        nodes_[id].threshold = best_thr;
        const std::size_t l = build(t, li, depth + 1);
        nodes_[id].left = l;
        const std::size_t r = build(t, ri, depth + 1);
        nodes_[id].right = r;
        return id;
    }

    int max_depth_;
    int min_split_;
    std::vector<Node> nodes_;
};

/// Multiclass perceptron with a bias input; weights start at U(-0.05, 0.05).
class PerceptronLearner final : public Learner {
public:
    PerceptronLearner(double learning_rate, int epochs) : lr_(learning_rate), epochs_(std::max(epochs, 1)) {}

    void fit(const EncodedSet& train, Rng& rng) override {
        classes_ = train.n_classes;
        width_ = train.width + 1;
        w_.assign(classes_ * width_, 0.0);
        for (auto& v : w_) v = rng.uniform(-0.05, 0.05);
        std::vector<std::size_t> order(train.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        for (int e = 0; e < epochs_; ++e) {
            rng.shuffle(order.begin(), order.end());
            bool mistakes = false;
            for (auto i : order) {
                const auto x = train.row(i);
                const int pred = predict(x);
                const int y = train.y[i];
                if (pred == y) continue;
                mistakes = true;
                double* wy = &w_[static_cast<std::size_t>(y) * width_];
                double* wp = &w_[static_cast<std::size_t>(pred) * width_];
                for (std::size_t j = 0; j < train.width; ++j) {
                    wy[j] += lr_ * x[j];
                    wp[j] -= lr_ * x[j];
                }
                wy[train.width] += lr_;
                wp[train.width] -= lr_;
            }
            if (!mistakes) break;
        }
    }

    int predict(std::span<const double> x) const override {
        std::vector<double> score(classes_, 0.0);
        for (std::size_t c = 0; c < classes_; ++c) {
            const double* w = &w_[c * width_];
            double s = w[width_ - 1];
            for (std::size_t j = 0; j + 1 < width_; ++j) s += w[j] * x[j];
            score[c] = s;
        }
        return detail::argmax(score);
    }

private:
    double lr_;
    int epochs_;
    std::size_t classes_ = 0, width_ = 0;
    std::vector<double> w_;
};

/// Builds the learner named by `algorithm` from a configuration's params.
inline std::unique_ptr<Learner> make_learner(const std::string& algorithm, const Configuration& config) {
    if (algorithm == "knn") {
        const auto weighting = config.params.contains("weighting") ? config.param<std::string>("weighting") : "uniform";
        if (weighting != "uniform" && weighting != "inverse-distance")
            throw ConfigurationError("knn weighting must be uniform or inverse-distance");
        return std::make_unique<KnnLearner>(static_cast<int>(config.param<long long>("k")), weighting == "inverse-distance");
    }
    if (algorithm == "naive_bayes") return std::make_unique<NaiveBayesLearner>(config.param<double>("laplace_alpha"));
    if (algorithm == "decision_tree")
        return std::make_unique<DecisionTreeLearner>(static_cast<int>(config.param<long long>("max_depth")),
                                                     static_cast<int>(config.param<long long>("min_split")));
    if (algorithm == "perceptron")
        return std::make_unique<PerceptronLearner>(config.param<double>("learning_rate"),
                                                   static_cast<int>(config.param<long long>("epochs")));
    throw ConfigurationError("unknown algorithm " + algorithm);
}

}  // namespace metacf
