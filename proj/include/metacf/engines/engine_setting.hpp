#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "../error.hpp"
#include "../text.hpp"

namespace metacf {

enum class Engine { baseline, fkm, mf, nlpca, ubp };

inline constexpr std::array<std::string_view, 5> kEngineNames = {"baseline", "fkm", "mf", "nlpca", "ubp"};

inline std::string_view engine_name(Engine e) { return kEngineNames[static_cast<std::size_t>(e)]; }

inline std::optional<Engine> parse_engine(std::string_view token) {
    for (std::size_t i = 0; i < kEngineNames.size(); ++i)
        if (kEngineNames[i] == token) return static_cast<Engine>(i);
    return std::nullopt;
}

struct FkmParams {
    int cluster_count = 4;
    double fuzzifier = 2.0;
    int max_iters = 200;
    double tolerance = 1e-5;
    bool operator==(const FkmParams&) const = default;
};

struct MfParams {
    int rank = 4;
    double learning_rate = 0.2;
    double regularization = 0.002;
    int max_epochs = 500;
    double tolerance = 1e-5;
    bool operator==(const MfParams&) const = default;
};

/// Shared by nlpca (no hidden layers) and ubp (at least one hidden layer).
struct DecoderParams {
    int latent_dim = 4;
    std::vector<int> hidden_layers;
    double learning_rate = 2.0;
    double regularization = 1e-4;
    int max_epochs = 500;
    double tolerance = 1e-5;
    bool operator==(const DecoderParams&) const = default;
};

using Hyperparams = std::variant<std::monostate, FkmParams, MfParams, DecoderParams>;

/// One engine plus its hyperparameters and seed: a row of the sweep grid.
struct EngineSetting {
    Engine engine = Engine::baseline;
    Hyperparams hyperparams;
    std::uint64_t seed = 0;

    bool operator==(const EngineSetting&) const = default;

    static EngineSetting baseline() { return {Engine::baseline, std::monostate{}, 0}; }
    static EngineSetting fkm(FkmParams p = {}, std::uint64_t seed = 0) { return {Engine::fkm, p, seed}; }
    static EngineSetting mf(MfParams p = {}, std::uint64_t seed = 0) { return {Engine::mf, p, seed}; }
    static EngineSetting nlpca(DecoderParams p = {}, std::uint64_t seed = 0) {
        p.hidden_layers.clear();
        return {Engine::nlpca, p, seed};
    }
    static EngineSetting ubp(DecoderParams p = {}, std::uint64_t seed = 0) {
        if (p.hidden_layers.empty()) p.hidden_layers = {8};
        return {Engine::ubp, p, seed};
    }
};

namespace detail {

inline void require(bool ok, const std::string& msg) {
    if (!ok) throw ArgumentError(msg);
}

inline void check_common(int epochs, double lr, double reg, double tol) {
    require(epochs >= 1, "max_epochs must be >= 1");
    require(lr > 0.0, "learning_rate must be > 0");
    require(reg > 0.0, "regularization must be > 0");
    require(tol >= 0.0, "tolerance must be >= 0");
}

}  // namespace detail

/// Throws ArgumentError when the setting violates its engine's invariants.
inline void validate(const EngineSetting& s) {
    using detail::require;
    switch (s.engine) {
        case Engine::baseline:
            require(std::holds_alternative<std::monostate>(s.hyperparams), "baseline takes no hyperparameters");
            break;
        case Engine::fkm: {
            const auto* p = std::get_if<FkmParams>(&s.hyperparams);
            require(p != nullptr, "fkm setting needs fkm hyperparameters");
            require(p->cluster_count >= 1, "cluster_count must be >= 1");
            require(p->fuzzifier > 1.0, "fuzzifier must be > 1");
            require(p->max_iters >= 1, "max_iters must be >= 1");
            require(p->tolerance >= 0.0, "tolerance must be >= 0");
            break;
        }
        case Engine::mf: {
            const auto* p = std::get_if<MfParams>(&s.hyperparams);
            require(p != nullptr, "mf setting needs mf hyperparameters");
            require(p->rank >= 1, "rank must be >= 1");
            detail::check_common(p->max_epochs, p->learning_rate, p->regularization, p->tolerance);
            break;
        }
        case Engine::nlpca:
        case Engine::ubp: {
            const auto* p = std::get_if<DecoderParams>(&s.hyperparams);
            require(p != nullptr, std::string(engine_name(s.engine)) + " setting needs decoder hyperparameters");
            require(p->latent_dim >= 1, "latent_dim must be >= 1");
            for (int h : p->hidden_layers) require(h >= 1, "hidden layer widths must be >= 1");
            if (s.engine == Engine::nlpca) require(p->hidden_layers.empty(), "nlpca has no hidden layers");
            if (s.engine == Engine::ubp) require(!p->hidden_layers.empty(), "ubp requires at least one hidden layer");
            detail::check_common(p->max_epochs, p->learning_rate, p->regularization, p->tolerance);
            break;
        }
    }
}

/// Compact, comma-free identifier: the engine name plus every hyperparameter
/// that differs from its default, with the structural one always shown.
inline std::string setting_id(const EngineSetting& s) {
    std::string id(engine_name(s.engine));
    std::vector<std::string> parts;
    auto num = [](double v) { return text::format_decimal(v, 6); };
    if (const auto* p = std::get_if<FkmParams>(&s.hyperparams)) {
        const FkmParams d;
        parts.push_back("c=" + std::to_string(p->cluster_count));
        parts.push_back("m=" + num(p->fuzzifier));
        if (p->max_iters != d.max_iters) parts.push_back("iters=" + std::to_string(p->max_iters));
        if (p->tolerance != d.tolerance) parts.push_back("tol=" + num(p->tolerance));
    } else if (const auto* p = std::get_if<MfParams>(&s.hyperparams)) {
        const MfParams d;
        parts.push_back("rank=" + std::to_string(p->rank));
        if (p->learning_rate != d.learning_rate) parts.push_back("lr=" + num(p->learning_rate));
        if (p->regularization != d.regularization) parts.push_back("reg=" + num(p->regularization));
        if (p->max_epochs != d.max_epochs) parts.push_back("epochs=" + std::to_string(p->max_epochs));
        if (p->tolerance != d.tolerance) parts.push_back("tol=" + num(p->tolerance));
    } else if (const auto* p = std::get_if<DecoderParams>(&s.hyperparams)) {
        const DecoderParams d;
        parts.push_back("latent=" + std::to_string(p->latent_dim));
        if (!p->hidden_layers.empty()) {
            std::string h = "hidden=";
            for (std::size_t i = 0; i < p->hidden_layers.size(); ++i)
                h += (i ? "x" : "") + std::to_string(p->hidden_layers[i]);
            parts.push_back(h);
        }
        if (p->learning_rate != d.learning_rate) parts.push_back("lr=" + num(p->learning_rate));
        if (p->regularization != d.regularization) parts.push_back("reg=" + num(p->regularization));
        if (p->max_epochs != d.max_epochs) parts.push_back("epochs=" + std::to_string(p->max_epochs));
        if (p->tolerance != d.tolerance) parts.push_back("tol=" + num(p->tolerance));
    }
    if (s.seed != 0) parts.push_back("seed=" + std::to_string(s.seed));
    if (!parts.empty()) {
        id += "[";
        for (std::size_t i = 0; i < parts.size(); ++i) id += (i ? ";" : "") + parts[i];
        id += "]";
    }
    return id;
}

/// Parses `{"engine": "mf", "hyperparams": {...}, "seed": 7}`. Unknown
/// hyperparameter names are rejected.
inline EngineSetting setting_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("engine") || !j["engine"].is_string())
        throw ArgumentError("engine setting must be an object with a string \"engine\"");
    const auto token = j["engine"].get<std::string>();
    const auto engine = parse_engine(token);
    if (!engine) throw ArgumentError("unknown engine " + token + " (valid: baseline, fkm, mf, nlpca, ubp)");
    const nlohmann::json hp = j.value("hyperparams", nlohmann::json::object());
    if (!hp.is_object()) throw ArgumentError("hyperparams must be an object");

    EngineSetting s;
    s.engine = *engine;
    if (j.contains("seed")) {
        if (!j["seed"].is_number_integer()) throw ArgumentError("seed must be an integer");
        s.seed = j["seed"].get<std::uint64_t>();
    }

    auto unknown = [&](const std::string& k) {
        return ArgumentError("unknown hyperparameter " + k + " for engine " + token);
    };
    auto get_int = [&](const nlohmann::json& v, const std::string& k) {
        if (!v.is_number_integer()) throw ArgumentError(k + " must be an integer");
        return v.get<int>();
    };
    auto get_real = [&](const nlohmann::json& v, const std::string& k) {
        if (!v.is_number()) throw ArgumentError(k + " must be a number");
        return v.get<double>();
    };

    switch (s.engine) {
        case Engine::baseline:
            if (!hp.empty()) throw ArgumentError("baseline takes no hyperparameters");
            break;
        case Engine::fkm: {
            FkmParams p;
            for (const auto& [k, v] : hp.items()) {
                if (k == "cluster_count") p.cluster_count = get_int(v, k);
                else if (k == "fuzzifier") p.fuzzifier = get_real(v, k);
                else if (k == "max_iters") p.max_iters = get_int(v, k);
                else if (k == "tolerance") p.tolerance = get_real(v, k);
                else throw unknown(k);
            }
            s.hyperparams = p;
            break;
        }
        case Engine::mf: {
            MfParams p;
            for (const auto& [k, v] : hp.items()) {
                if (k == "rank") p.rank = get_int(v, k);
                else if (k == "learning_rate") p.learning_rate = get_real(v, k);
                else if (k == "regularization") p.regularization = get_real(v, k);
                else if (k == "max_epochs") p.max_epochs = get_int(v, k);
                else if (k == "tolerance") p.tolerance = get_real(v, k);
                else throw unknown(k);
            }
            s.hyperparams = p;
            break;
        }
        case Engine::nlpca:
        case Engine::ubp: {
            DecoderParams p;
            if (s.engine == Engine::ubp) p.hidden_layers = {8};
            for (const auto& [k, v] : hp.items()) {
                if (k == "latent_dim") p.latent_dim = get_int(v, k);
                else if (k == "hidden_layers") {
                    if (!v.is_array()) throw ArgumentError("hidden_layers must be an array");
                    p.hidden_layers.clear();
                    for (const auto& h : v) p.hidden_layers.push_back(get_int(h, k));
                } else if (k == "learning_rate") p.learning_rate = get_real(v, k);
                else if (k == "regularization") p.regularization = get_real(v, k);
                else if (k == "max_epochs") p.max_epochs = get_int(v, k);
                else if (k == "tolerance") p.tolerance = get_real(v, k);
                else throw unknown(k);
            }
            s.hyperparams = p;
            break;
        }
    }
    validate(s);
    return s;
}

inline nlohmann::json setting_to_json(const EngineSetting& s) {
    nlohmann::json hp = nlohmann::json::object();
    if (const auto* p = std::get_if<FkmParams>(&s.hyperparams)) {
        hp = {{"cluster_count", p->cluster_count}, {"fuzzifier", p->fuzzifier}, {"max_iters", p->max_iters},
              {"tolerance", p->tolerance}};
    } else if (const auto* p = std::get_if<MfParams>(&s.hyperparams)) {
        hp = {{"rank", p->rank}, {"learning_rate", p->learning_rate}, {"regularization", p->regularization},
              {"max_epochs", p->max_epochs}, {"tolerance", p->tolerance}};
    } else if (const auto* p = std::get_if<DecoderParams>(&s.hyperparams)) {
        hp = {{"latent_dim", p->latent_dim}, {"hidden_layers", p->hidden_layers},
              {"learning_rate", p->learning_rate}, {"regularization", p->regularization},
              {"max_epochs", p->max_epochs}, {"tolerance", p->tolerance}};
    }
    return {{"engine", engine_name(s.engine)}, {"hyperparams", hp}, {"seed", s.seed}};
}

/// The sweep grid: baseline; fkm c in {2,4,8}; mf rank in {2,4,8,16};
/// nlpca latent in {2,4,8}; ubp latent in {2,4,8} with one hidden layer of 8.
inline std::vector<EngineSetting> default_engine_grid() {
    std::vector<EngineSetting> grid{EngineSetting::baseline()};
    for (int c : {2, 4, 8}) grid.push_back(EngineSetting::fkm({.cluster_count = c, .fuzzifier = 2.0}));
    for (int r : {2, 4, 8, 16}) grid.push_back(EngineSetting::mf({.rank = r}));
    for (int l : {2, 4, 8}) grid.push_back(EngineSetting::nlpca({.latent_dim = l, .hidden_layers = {}}));
    for (int l : {2, 4, 8}) grid.push_back(EngineSetting::ubp({.latent_dim = l, .hidden_layers = {8}}));
    return grid;
}

}  // namespace metacf
