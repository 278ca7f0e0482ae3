#pragma once

#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "../error.hpp"
#include "../random.hpp"
#include "completed_matrix.hpp"

namespace metacf::detail {

struct DescentOutcome {
    int epochs = 0;
    int halvings = 0;
    double initial_loss = 0.0;
    double final_loss = 0.0;
};

struct DescentControl {
    double learning_rate = 0.01;
    int max_epochs = 500;
    double tolerance = 1e-5;
    int max_halvings = 10;
};

/// Epoch-wise stochastic gradient descent with a step-halving safeguard.
///
/// `Model` must be copyable and provide
///   double loss(std::span<const Observation>) const;
///   void sgd_epoch(std::span<const Observation> ordered, double lr);
///
/// Each epoch visits the observations in a fresh seeded order at the base
/// step. An epoch whose loss increases is rolled back and retried at half the
/// previous step; when an epoch still fails after `max_halvings` halvings the
/// loop stops. Every attempt counts toward `max_epochs`, and the final loss
/// never exceeds the initial one. Stops early when the relative improvement
/// of an accepted epoch drops below `tolerance`.
template <typename Model>
DescentOutcome descend(Model& model, std::span<const Observation> data, const DescentControl& ctl, Rng& rng,
                       std::string_view engine) {
    DescentOutcome out;
    double prev = model.loss(data);
    if (!std::isfinite(prev)) throw DivergenceError(std::string(engine) + ": non-finite loss at epoch 0");
    out.initial_loss = prev;
    out.final_loss = prev;
    if (data.empty() || prev == 0.0) return out;

    std::vector<Observation> order(data.begin(), data.end());
    double lr = ctl.learning_rate;
    int retries = 0;
    while (out.epochs < ctl.max_epochs) {
        ++out.epochs;
        rng.shuffle(order.begin(), order.end());
        Model snapshot = model;
        model.sgd_epoch(order, lr);
        const double cur = model.loss(data);
        if (!std::isfinite(cur) || cur > prev) {
            model = std::move(snapshot);
            if (retries == ctl.max_halvings) {
                if (!std::isfinite(cur))
                    throw DivergenceError(std::string(engine) + ": non-finite loss at epoch " +
                                          std::to_string(out.epochs));
                break;
            }
            ++retries;
            ++out.halvings;
            lr *= 0.5;
            continue;
        }
        retries = 0;
        lr = ctl.learning_rate;
        const double rel = (prev - cur) / prev;
        prev = cur;
        if (prev == 0.0 || rel < ctl.tolerance) break;
    }
    out.final_loss = prev;
    return out;
}

}  // namespace metacf::detail
