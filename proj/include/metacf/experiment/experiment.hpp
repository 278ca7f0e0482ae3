#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <json.hpp>

#include "../error.hpp"
#include "../perf_matrix.hpp"
#include "../random.hpp"
#include "dataset.hpp"
#include "learners.hpp"

namespace metacf {

// ---------------------------------------------------------------------------
// Hyperparameter spaces and random search
// ---------------------------------------------------------------------------

struct IntRange {
    long long low = 0, high = 0;
};
struct RealRange {
    double low = 0.0, high = 0.0;
};
struct LogRange {
    double low = 1.0, high = 1.0;
};
struct Choice {
    std::vector<std::string> values;
};

using ParamSpace = std::variant<IntRange, RealRange, LogRange, Choice>;

struct ParamRange {
    std::string name;
    ParamSpace space;
};

/// A learning algorithm, its sampling space and its default configuration.
struct LearnerSpec {
    std::string algorithm;
    std::vector<ParamRange> ranges;
    std::map<std::string, ParamValue> defaults;
};

inline bool in_range(const ParamSpace& space, const ParamValue& v) {
    if (const auto* r = std::get_if<IntRange>(&space)) {
        const auto* x = std::get_if<long long>(&v);
        return x && *x >= r->low && *x <= r->high;
    }
    auto real = [&]() -> std::optional<double> {
        if (const auto* d = std::get_if<double>(&v)) return *d;
        if (const auto* i = std::get_if<long long>(&v)) return static_cast<double>(*i);
        return std::nullopt;
    };
    if (const auto* r = std::get_if<RealRange>(&space)) {
        const auto x = real();
        return x && *x >= r->low && *x <= r->high;
    }
    if (const auto* r = std::get_if<LogRange>(&space)) {
        const auto x = real();
        return x && *x >= r->low && *x <= r->high;
    }
    const auto& c = std::get<Choice>(space);
    const auto* s = std::get_if<std::string>(&v);
    return s && std::find(c.values.begin(), c.values.end(), *s) != c.values.end();
}

inline void validate(const LearnerSpec& spec) {
    if (spec.algorithm.empty()) throw ConfigurationError("learner spec without algorithm");
    for (const auto& r : spec.ranges) {
        const std::string where = spec.algorithm + "." + r.name;
        if (const auto* x = std::get_if<IntRange>(&r.space)) {
            if (x->low > x->high) throw ConfigurationError("empty integer range for " + where);
        } else if (const auto* x = std::get_if<RealRange>(&r.space)) {
            if (!(x->low <= x->high)) throw ConfigurationError("empty real range for " + where);
        } else if (const auto* x = std::get_if<LogRange>(&r.space)) {
            if (!(x->low > 0.0 && x->low <= x->high)) throw ConfigurationError("invalid log-uniform range for " + where);
        } else if (std::get<Choice>(r.space).values.empty()) {
            throw ConfigurationError("empty categorical set for " + where);
        }
        const auto d = spec.defaults.find(r.name);
        if (d == spec.defaults.end()) throw ConfigurationError("no default for " + where);
        if (!in_range(r.space, d->second)) throw ConfigurationError("default of " + where + " lies outside its range");
    }
}

/// n i.i.d. draws from the spec's ranges, then the default as config n+1.
inline std::vector<Configuration> sample_configs(const LearnerSpec& spec, int n, std::uint64_t seed) {
    if (n < 1) throw ArgumentError("n must be >= 1");
    validate(spec);
    Rng rng(seed);
    std::vector<Configuration> out;
    const int digits = static_cast<int>(std::to_string(n).size());
    for (int i = 0; i < n; ++i) {
        Configuration c;
        char buf[32];
        std::snprintf(buf, sizeof buf, "%0*d", digits, i + 1);
        c.config_id = spec.algorithm + "_" + buf;
        c.algorithm = spec.algorithm;
        for (const auto& r : spec.ranges) {
            ParamValue v;
            if (const auto* x = std::get_if<IntRange>(&r.space)) v = rng.integer(x->low, x->high);
            else if (const auto* x = std::get_if<RealRange>(&r.space)) v = rng.uniform(x->low, x->high);
            else if (const auto* x = std::get_if<LogRange>(&r.space))
                v = std::exp(rng.uniform(std::log(x->low), std::log(x->high)));
            else {
                const auto& ch = std::get<Choice>(r.space).values;
                v = ch[rng.below(ch.size())];
            }
            c.params.emplace(r.name, std::move(v));
        }
        out.push_back(std::move(c));
    }
    Configuration d;
    d.config_id = spec.algorithm + "_default";
    d.algorithm = spec.algorithm;
    d.params = spec.defaults;
    d.is_default = true;
    out.push_back(std::move(d));
    return out;
}

/// The four native learners with their sampling spaces and defaults.
inline std::vector<LearnerSpec> default_learner_specs() {
    return {
        {"knn",
         {{"k", IntRange{1, 25}}, {"weighting", Choice{{"uniform", "inverse-distance"}}}},
         {{"k", 5LL}, {"weighting", std::string("uniform")}}},
        {"naive_bayes", {{"laplace_alpha", LogRange{1e-3, 10.0}}}, {{"laplace_alpha", 1.0}}},
        {"decision_tree",
         {{"max_depth", IntRange{1, 20}}, {"min_split", IntRange{2, 20}}},
         {{"max_depth", 10LL}, {"min_split", 2LL}}},
        {"perceptron",
         {{"learning_rate", LogRange{1e-4, 1.0}}, {"epochs", IntRange{5, 200}}},
         {{"learning_rate", 0.01}, {"epochs", 50LL}}},
    };
}

/// Parses an array of
/// `{"algorithm": "knn", "ranges": {"k": {"type": "int", "low": 1, "high": 25}, ...},
///   "default": {"k": 5, ...}}`. Range types: int, real, log, categorical
/// (with "values").
inline std::vector<LearnerSpec> learner_specs_from_json(const nlohmann::ordered_json& j) {
    if (!j.is_array()) throw ConfigurationError("learner specs must be a JSON array");
    std::vector<LearnerSpec> out;
    try {
        for (const auto& item : j) {
            LearnerSpec s;
            s.algorithm = item.at("algorithm").get<std::string>();
            for (const auto& [name, r] : item.at("ranges").items()) {
                const auto type = r.at("type").get<std::string>();
                ParamRange pr{name, {}};
                if (type == "int") pr.space = IntRange{r.at("low").get<long long>(), r.at("high").get<long long>()};
                else if (type == "real") pr.space = RealRange{r.at("low").get<double>(), r.at("high").get<double>()};
                else if (type == "log") pr.space = LogRange{r.at("low").get<double>(), r.at("high").get<double>()};
                else if (type == "categorical") pr.space = Choice{r.at("values").get<std::vector<std::string>>()};
                else throw ConfigurationError("unknown range type " + type);
                s.ranges.push_back(std::move(pr));
            }
            for (const auto& [name, v] : item.at("default").items()) s.defaults.emplace(name, param_from_json(v, s.algorithm));
            validate(s);
            out.push_back(std::move(s));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigurationError(std::string("learner specs: ") + e.what());
    } catch (const FormatError& e) {
        throw ConfigurationError(e.what());
    }
    if (out.empty()) throw ConfigurationError("learner specs are empty");
    return out;
}

// ---------------------------------------------------------------------------
// Cross-validation
// ---------------------------------------------------------------------------

/// Fold index per instance: each class's instances are shuffled and dealt
/// round-robin, so every fold holds floor or ceil of count/folds per class.
inline std::vector<int> stratified_folds(const Dataset& d, int folds, std::uint64_t seed) {
    if (folds < 2) throw ArgumentError("folds must be >= 2");
    const auto counts = d.class_counts();
    for (std::size_t c = 0; c < counts.size(); ++c)
        if (counts[c] < static_cast<std::size_t>(folds))
            throw ArgumentError("dataset " + d.name + ": class " + d.class_names[c] + " has " +
                                std::to_string(counts[c]) + " instances, fewer than " + std::to_string(folds) + " folds");
    Rng rng(derive_seed(seed, {0x666f6c64}));
    std::vector<int> fold(d.size(), 0);
    int offset = 0;
    for (std::size_t c = 0; c < counts.size(); ++c) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < d.size(); ++i)
            if (static_cast<std::size_t>(d.labels[i]) == c) members.push_back(i);
        rng.shuffle(members.begin(), members.end());
        for (std::size_t p = 0; p < members.size(); ++p) fold[members[p]] = static_cast<int>((p + static_cast<std::size_t>(offset)) % static_cast<std::size_t>(folds));
        offset = static_cast<int>((static_cast<std::size_t>(offset) + members.size()) % static_cast<std::size_t>(folds));
    }
    return fold;
}

/// Stratified k-fold CV accuracy in percent: correct predictions over all
/// instances times 100.
inline double evaluate_config(const Dataset& d, const std::string& algorithm, const Configuration& config, int folds,
                              std::uint64_t seed) {
    const auto fold = stratified_folds(d, folds, seed);
    std::size_t correct = 0;
    for (int f = 0; f < folds; ++f) {
        std::vector<std::size_t> train, test;
        for (std::size_t i = 0; i < d.size(); ++i) (fold[i] == f ? test : train).push_back(i);
        const FeatureEncoder enc(d, train);
        EncodedSet ts{enc.encode(train), {}, enc.width(), d.n_classes()};
        for (auto i : train) ts.y.push_back(d.labels[i]);
        auto learner = make_learner(algorithm, config);
        Rng rng(derive_seed(seed, {0x6c726e, static_cast<std::uint64_t>(f)}));
        learner->fit(ts, rng);
        std::vector<double> x(enc.width());
        for (auto i : test) {
            enc.encode(i, x);
            if (learner->predict(x) == d.labels[i]) ++correct;
        }
    }
    return 100.0 * static_cast<double>(correct) / static_cast<double>(d.size());
}

// ---------------------------------------------------------------------------
// Matrix construction
// ---------------------------------------------------------------------------

struct BuiltMatrix {
    PerformanceMatrix matrix;
    std::vector<Configuration> registry;
};

inline std::uint64_t spec_seed(std::uint64_t seed, std::size_t spec_index) {
    return derive_seed(seed, {0x73706563, spec_index});
}

/// Fold split and learner randomness for every cell of one dataset row.
inline std::uint64_t dataset_seed(std::uint64_t seed, std::size_t dataset_index) {
    return derive_seed(seed, {0x64617461, dataset_index});
}

/// Samples configurations once per spec and evaluates the same list on every
/// dataset, giving a fully observed matrix.
inline BuiltMatrix build_matrix(const std::vector<Dataset>& datasets, const std::vector<LearnerSpec>& specs,
                                int n_per_learner, int folds, std::uint64_t seed, unsigned jobs = 1) {
    if (datasets.empty()) throw ArgumentError("no datasets");
    if (specs.empty()) throw ArgumentError("no learner specs");
    BuiltMatrix out;
    for (std::size_t s = 0; s < specs.size(); ++s) {
        auto configs = sample_configs(specs[s], n_per_learner, spec_seed(seed, s));
        out.registry.insert(out.registry.end(), configs.begin(), configs.end());
    }
    validate_registry(out.registry);
    std::vector<std::string> rows, cols;
    for (const auto& d : datasets) rows.push_back(d.name);
    for (const auto& c : out.registry) cols.push_back(c.config_id);
    out.matrix = PerformanceMatrix(rows, cols);

    const std::size_t n_cells = datasets.size() * out.registry.size();
    std::vector<double> acc(n_cells, 0.0);
    std::vector<std::exception_ptr> failures(n_cells);
    auto run = [&](std::size_t cell) {
        const std::size_t d = cell / out.registry.size();
        const std::size_t c = cell % out.registry.size();
        try {
            acc[cell] = evaluate_config(datasets[d], out.registry[c].algorithm, out.registry[c], folds, dataset_seed(seed, d));
        } catch (...) {
            failures[cell] = std::current_exception();
        }
    };
    const unsigned workers = std::max(1u, jobs);
    if (workers == 1) {
        for (std::size_t c = 0; c < n_cells; ++c) run(c);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t c = next++; c < n_cells; c = next++) run(c);
            });
    }
    for (std::size_t cell = 0; cell < n_cells; ++cell) {
        const std::size_t d = cell / out.registry.size();
        const std::size_t c = cell % out.registry.size();
        if (failures[cell]) {
            try {
                std::rethrow_exception(failures[cell]);
            } catch (const std::exception& e) {
                throw ArgumentError("(" + datasets[d].name + "," + out.registry[c].config_id + "): " + e.what());
            }
        }
        out.matrix.set(d, c, acc[cell]);
    }
    return out;
}

}  // namespace metacf
