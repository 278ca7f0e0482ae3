#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <istream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "engines/complete.hpp"
#include "error.hpp"
#include "perf_matrix.hpp"
#include "random.hpp"
#include "recommender.hpp"
#include "text.hpp"

namespace metacf {

// ---------------------------------------------------------------------------
// Plan and raw records
// ---------------------------------------------------------------------------

struct SweepPlan {
    std::vector<double> retained_levels{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    int repetitions = 10;
    std::size_t k = 4;
    std::vector<EngineSetting> engine_settings = default_engine_grid();
    std::uint64_t master_seed = 0;
};

inline void validate(const SweepPlan& plan) {
    if (plan.retained_levels.empty()) throw ArgumentError("plan has no retained levels");
    for (double f : plan.retained_levels)
        if (!(f > 0.0 && f <= 1.0)) throw ArgumentError("retained level " + text::format_decimal(f, 6) + " outside (0, 1]");
    if (plan.repetitions < 1) throw ArgumentError("repetitions must be >= 1");
    if (plan.k < 1) throw ArgumentError("k must be >= 1");
    if (plan.engine_settings.empty()) throw ArgumentError("plan has no engine settings");
    for (const auto& s : plan.engine_settings) validate(s);
}

/// Missing fields take their defaults; `engine_settings` absent means the
/// default grid.
inline SweepPlan plan_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ArgumentError("plan JSON must be an object");
    SweepPlan plan;
    try {
        if (j.contains("retained_levels")) plan.retained_levels = j["retained_levels"].get<std::vector<double>>();
        if (j.contains("repetitions")) plan.repetitions = j["repetitions"].get<int>();
        if (j.contains("k")) plan.k = j["k"].get<std::size_t>();
        if (j.contains("master_seed")) plan.master_seed = j["master_seed"].get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw ArgumentError(std::string("plan JSON: ") + e.what());
    }
    for (const auto& [key, _] : j.items()) {
        if (key != "retained_levels" && key != "repetitions" && key != "k" && key != "master_seed" &&
            key != "engine_settings")
            throw ArgumentError("unknown plan field " + key);
    }
    if (j.contains("engine_settings")) {
        if (!j["engine_settings"].is_array()) throw ArgumentError("engine_settings must be an array");
        plan.engine_settings.clear();
        for (const auto& s : j["engine_settings"]) plan.engine_settings.push_back(setting_from_json(s));
    }
    validate(plan);
    return plan;
}

inline nlohmann::json plan_to_json(const SweepPlan& plan) {
    nlohmann::json settings = nlohmann::json::array();
    for (const auto& s : plan.engine_settings) settings.push_back(setting_to_json(s));
    return {{"retained_levels", plan.retained_levels},
            {"repetitions", plan.repetitions},
            {"k", plan.k},
            {"master_seed", plan.master_seed},
            {"engine_settings", settings}};
}

struct SweepRecord {
    std::string engine;
    std::string setting_id;
    std::size_t setting_index = 0;
    std::size_t level_index = 0;
    double retained = 0.0;
    int repetition = 0;
    std::string dataset_id;
    double best_of_topk_accuracy = 0.0;
    double completion_seconds = 0.0;  // wall time of the completion this record came from
};

struct SweepResult {
    std::vector<SweepRecord> records;
};

/// Seed of the mask for (level, repetition). Every engine setting sees the
/// same masks, so settings are compared on identical inputs.
inline std::uint64_t mask_seed(std::uint64_t master, std::size_t level, int repetition) {
    return derive_seed(master, {0x6d61736bULL, level, static_cast<std::uint64_t>(repetition)});
}

/// Seed of the engine run for (setting, level, repetition), folded with the
/// setting's own seed.
inline std::uint64_t engine_seed(std::uint64_t master, std::size_t setting, std::size_t level, int repetition,
                                 std::uint64_t setting_seed) {
    return derive_seed(master, {0x656e67ULL, setting, level, static_cast<std::uint64_t>(repetition), setting_seed});
}

inline TruthRow truth_row(const PerformanceMatrix& m, std::size_t r) {
    TruthRow t;
    for (std::size_t c = 0; c < m.cols(); ++c)
        if (auto v = m.at(r, c)) t.emplace(m.col_ids()[c], *v);
    return t;
}

inline ScoredRow scored_row(const CompletedMatrix& m, std::size_t r) {
    ScoredRow row;
    row.reserve(m.cols());
    for (std::size_t c = 0; c < m.cols(); ++c) row.emplace_back(m.col_ids()[c], m.value(r, c));
    return row;
}

namespace detail {

[[noreturn]] inline void rethrow_tagged(std::exception_ptr ep, const std::string& tag) {
    try {
        std::rethrow_exception(ep);
    } catch (const DivergenceError& e) {
        throw DivergenceError(tag + e.what());
    } catch (const InputError& e) {
        throw InputError(tag + e.what());
    } catch (const ArgumentError& e) {
        throw ArgumentError(tag + e.what());
    } catch (const EvaluationError& e) {
        throw EvaluationError(tag + e.what());
    } catch (const std::exception& e) {
        throw Error(tag + e.what());
    }
}

}  // namespace detail

/// Masks, completes, recommends and scores every (setting, level,
/// repetition) cell of the plan. Records are ordered setting-major, then
/// level, repetition and dataset, independent of `jobs`.
inline SweepResult run_sweep(const PerformanceMatrix& full, const SweepPlan& plan, unsigned jobs = 1) {
    validate(plan);
    for (std::size_t r = 0; r < full.rows(); ++r)
        if (full.observed_in_row(r) == 0) throw InputError("dataset " + full.row_ids()[r] + " has no observed results");

    const std::size_t n_set = plan.engine_settings.size();
    const std::size_t n_lvl = plan.retained_levels.size();
    const auto n_rep = static_cast<std::size_t>(plan.repetitions);
    const std::size_t n_cells = n_set * n_lvl * n_rep;
    const std::size_t n_rows = full.rows();

    std::vector<TruthRow> truth;
    for (std::size_t r = 0; r < n_rows; ++r) truth.push_back(truth_row(full, r));
    std::vector<std::string> ids;
    for (const auto& s : plan.engine_settings) ids.push_back(setting_id(s));

    SweepResult result;
    result.records.resize(n_cells * n_rows);
    std::vector<std::exception_ptr> failures(n_cells);

    auto run_cell = [&](std::size_t cell) {
        const std::size_t si = cell / (n_lvl * n_rep);
        const std::size_t li = (cell / n_rep) % n_lvl;
        const int rep = static_cast<int>(cell % n_rep);
        try {
            const double level = plan.retained_levels[li];
            const auto masked = apply_mask(full, level, mask_seed(plan.master_seed, li, rep));
            EngineSetting setting = plan.engine_settings[si];
            setting.seed = engine_seed(plan.master_seed, si, li, rep, setting.seed);
            const auto start = std::chrono::steady_clock::now();
            const auto completed = complete(masked.masked, setting);
            const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            for (std::size_t r = 0; r < n_rows; ++r) {
                const auto rec = top_k(scored_row(completed, r), plan.k, full.row_ids()[r]);
                auto& out = result.records[cell * n_rows + r];
                out = {std::string(engine_name(setting.engine)), ids[si], si, li, level, rep, full.row_ids()[r],
                       score_best_of_topk(truth[r], rec), secs};
            }
        } catch (...) {
            failures[cell] = std::current_exception();
        }
    };

    const unsigned workers = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(n_cells)));
    if (workers == 1) {
        for (std::size_t c = 0; c < n_cells; ++c) {
            run_cell(c);
            if (failures[c]) break;
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::atomic<bool> failed{false};
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t c = next++; c < n_cells && !failed; c = next++) {
                    run_cell(c);
                    if (failures[c]) failed = true;
                }
            });
        pool.clear();
    }
    for (std::size_t c = 0; c < n_cells; ++c) {
        if (failures[c]) {
            const std::size_t si = c / (n_lvl * n_rep);
            const std::size_t li = (c / n_rep) % n_lvl;
            detail::rethrow_tagged(failures[c], "setting " + ids[si] + ", retained " +
                                                    text::format_decimal(plan.retained_levels[li], 4) +
                                                    ", repetition " + std::to_string(c % n_rep) + ": ");
        }
    }
    return result;
}

inline std::string raw_records_csv(const SweepResult& raw) {
    std::string out = "engine,setting_id,retained,repetition,dataset_id,score\n";
    for (const auto& r : raw.records) {
        out += r.engine + "," + r.setting_id + "," + text::format_decimal(r.retained, 4) + "," +
               std::to_string(r.repetition) + "," + r.dataset_id + "," +
               text::format_decimal(r.best_of_topk_accuracy, 6) + "\n";
    }
    return out;
}

/// Reads records written by raw_records_csv, resolving setting and level
/// indices against `plan`.
inline SweepResult load_raw_records(std::istream& in, const SweepPlan& plan) {
    const auto lines = text::read_lines(in);
    if (lines.empty() || lines.front() != "engine,setting_id,retained,repetition,dataset_id,score")
        throw FormatError("raw records: unexpected header");
    std::map<std::string, std::size_t> setting_index;
    for (std::size_t i = 0; i < plan.engine_settings.size(); ++i) setting_index.emplace(setting_id(plan.engine_settings[i]), i);
    SweepResult raw;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        const auto f = text::split_csv(lines[li]);
        if (f.size() != 6) throw FormatError("raw records: line " + std::to_string(li + 1) + " needs 6 fields");
        SweepRecord r;
        r.engine = f[0];
        r.setting_id = f[1];
        const auto it = setting_index.find(r.setting_id);
        if (it == setting_index.end()) throw EvaluationError("raw records: setting " + r.setting_id + " not in plan");
        r.setting_index = it->second;
        const auto retained = text::parse_double(f[2]);
        const auto score = text::parse_double(f[5]);
        const auto rep = text::parse_double(f[3]);
        if (!retained || !score || !rep) throw FormatError("raw records: bad number on line " + std::to_string(li + 1));
        r.retained = *retained;
        r.repetition = static_cast<int>(*rep);
        r.dataset_id = f[4];
        r.best_of_topk_accuracy = *score;
        bool found = false;
        for (std::size_t l = 0; l < plan.retained_levels.size(); ++l) {
            if (text::format_decimal(plan.retained_levels[l], 4) == text::format_decimal(r.retained, 4)) {
                r.level_index = l;
                found = true;
                break;
            }
        }
        if (!found) throw EvaluationError("raw records: retained level " + f[2] + " not in plan");
        raw.records.push_back(std::move(r));
    }
    return raw;
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

/// One report row: Best/Median/Average over settings and per-level means.
/// `level_means` is empty for rows without a sparsity sweep (Content).
struct EngineSummary {
    std::string name;
    double best = 0.0;
    double median = 0.0;
    double average = 0.0;
    std::vector<double> level_means;
    std::vector<std::pair<std::string, double>> setting_means;
};

struct OracleSection {
    std::vector<std::pair<std::string, double>> per_algorithm;
    double default_mean = 0.0;
    double all_mean = 0.0;
};

struct EvaluationReport {
    std::vector<double> retained_levels;
    std::vector<EngineSummary> engines;
    std::optional<OracleSection> oracle;
};

inline double median_of(std::vector<double> v) {
    if (v.empty()) throw EvaluationError("median of an empty set");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Best/Median/Average over per-setting scalars.
inline EngineSummary summarize(std::string name, std::vector<std::pair<std::string, double>> setting_means) {
    EngineSummary s;
    s.name = std::move(name);
    std::vector<double> v;
    for (const auto& [_, m] : setting_means) v.push_back(m);
    s.best = *std::max_element(v.begin(), v.end());
    s.median = median_of(v);
    double sum = 0.0;
    for (double x : v) sum += x;
    s.average = sum / static_cast<double>(v.size());
    s.setting_means = std::move(setting_means);
    return s;
}

inline std::string engine_display_name(std::string_view token) {
    if (token == "baseline") return "Baseline";
    std::string out(token);
    for (auto& ch : out) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    return out;
}

/// Per setting: mean of its records (datasets x repetitions x levels).
/// Best/Median/Average range over the settings of an engine; the per-level
/// column averages every record of the engine at that level.
inline EvaluationReport aggregate(const SweepResult& raw, const SweepPlan& plan) {
    const std::size_t n_set = plan.engine_settings.size();
    const std::size_t n_lvl = plan.retained_levels.size();
    std::vector<std::vector<double>> sum(n_set, std::vector<double>(n_lvl, 0.0));
    std::vector<std::vector<std::size_t>> count(n_set, std::vector<std::size_t>(n_lvl, 0));
    for (const auto& r : raw.records) {
        if (r.setting_index >= n_set || r.level_index >= n_lvl || r.repetition < 0 || r.repetition >= plan.repetitions)
            throw EvaluationError("record outside the plan: " + r.setting_id);
        sum[r.setting_index][r.level_index] += r.best_of_topk_accuracy;
        ++count[r.setting_index][r.level_index];
    }
    const std::size_t per_cell = count[0][0];
    if (per_cell == 0 || per_cell % static_cast<std::size_t>(plan.repetitions) != 0)
        throw EvaluationError("raw records do not match the plan");
    for (const auto& row : count)
        for (auto c : row)
            if (c != per_cell) throw EvaluationError("raw records do not match the plan (unbalanced cells)");

    EvaluationReport report;
    report.retained_levels = plan.retained_levels;
    std::vector<std::string> order;
    std::map<std::string, std::vector<std::size_t>> by_engine;
    for (std::size_t s = 0; s < n_set; ++s) {
        const std::string e(engine_name(plan.engine_settings[s].engine));
        if (!by_engine.contains(e)) order.push_back(e);
        by_engine[e].push_back(s);
    }
    for (const auto& e : order) {
        std::vector<std::pair<std::string, double>> means;
        for (auto s : by_engine[e]) {
            double total = 0.0;
            for (std::size_t l = 0; l < n_lvl; ++l) total += sum[s][l];
            means.emplace_back(setting_id(plan.engine_settings[s]), total / static_cast<double>(per_cell * n_lvl));
        }
        auto summary = summarize(engine_display_name(e), std::move(means));
        for (std::size_t l = 0; l < n_lvl; ++l) {
            double total = 0.0;
            for (auto s : by_engine[e]) total += sum[s][l];
            summary.level_means.push_back(total / static_cast<double>(per_cell * by_engine[e].size()));
        }
        report.engines.push_back(std::move(summary));
    }
    return report;
}

/// Per-algorithm, Default and ALL oracle means over the datasets of `full`.
inline OracleSection oracle_table(const PerformanceMatrix& full, std::span<const Configuration> registry) {
    std::vector<std::string> algorithms;
    std::map<std::string, std::vector<std::string>> by_algorithm;
    std::vector<std::string> defaults;
    std::vector<std::string> all;
    for (const auto& c : registry) {
        if (!by_algorithm.contains(c.algorithm)) algorithms.push_back(c.algorithm);
        by_algorithm[c.algorithm].push_back(c.config_id);
        if (c.is_default) defaults.push_back(c.config_id);
        all.push_back(c.config_id);
    }
    for (const auto& id : full.col_ids())
        if (std::find(all.begin(), all.end(), id) == all.end())
            throw ConfigurationError("config " + id + " is not in the registry");
    if (defaults.empty()) throw ConfigurationError("registry has no default-flagged configurations");
    if (full.rows() == 0) throw ArgumentError("oracle table needs at least one dataset");

    OracleSection out;
    const auto n = static_cast<double>(full.rows());
    std::vector<TruthRow> truth;
    for (std::size_t r = 0; r < full.rows(); ++r) truth.push_back(truth_row(full, r));
    for (const auto& a : algorithms) {
        double s = 0.0;
        for (const auto& t : truth) s += oracle_best(t, by_algorithm[a]);
        out.per_algorithm.emplace_back(a, s / n);
    }
    for (const auto& t : truth) {
        out.default_mean += oracle_best(t, defaults) / n;
        out.all_mean += oracle_best(t, all) / n;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

enum class ReportFormat { csv, markdown };

inline ReportFormat parse_report_format(std::string_view token) {
    if (token == "csv") return ReportFormat::csv;
    if (token == "markdown") return ReportFormat::markdown;
    throw ArgumentError("unknown report format " + std::string(token) + " (valid: csv, markdown)");
}

/// Numbers are rounded half-up to two decimals; rows without level means
/// print "-" in the level columns.
inline std::string render_report(const EvaluationReport& report, ReportFormat format) {
    auto num = [](double v) { return text::round_half_up(v, 2); };
    std::vector<std::string> header{"Best", "Med", "Ave"};
    for (double l : report.retained_levels) header.push_back(text::format_decimal(l, 4));

    auto row_cells = [&](const EngineSummary& e) {
        std::vector<std::string> cells{num(e.best), num(e.median), num(e.average)};
        for (std::size_t l = 0; l < report.retained_levels.size(); ++l)
            cells.push_back(l < e.level_means.size() ? num(e.level_means[l]) : "-");
        return cells;
    };

    std::ostringstream out;
    if (format == ReportFormat::markdown) {
        out << "| |";
        for (const auto& h : header) out << " " << h << " |";
        out << "\n|---|";
        for (std::size_t i = 0; i < header.size(); ++i) out << "---:|";
        out << "\n";
        for (const auto& e : report.engines) {
            out << "| " << e.name << " |";
            for (const auto& c : row_cells(e)) out << " " << c << " |";
            out << "\n";
        }
        if (report.oracle) {
            out << "\n|";
            for (const auto& [a, _] : report.oracle->per_algorithm) out << " " << a << " |";
            out << " Default | ALL |\n|";
            for (std::size_t i = 0; i < report.oracle->per_algorithm.size() + 2; ++i) out << "---:|";
            out << "\n|";
            for (const auto& [_, v] : report.oracle->per_algorithm) out << " " << num(v) << " |";
            out << " " << num(report.oracle->default_mean) << " | " << num(report.oracle->all_mean) << " |\n";
        }
    } else {
        out << "engine,best,median,average";
        for (std::size_t i = 3; i < header.size(); ++i) out << "," << header[i];
        out << "\n";
        for (const auto& e : report.engines) {
            out << e.name;
            for (const auto& c : row_cells(e)) out << "," << c;
            out << "\n";
        }
        if (report.oracle) {
            out << "\noracle";
            for (const auto& [a, _] : report.oracle->per_algorithm) out << "," << a;
            out << ",Default,ALL\naccuracy";
            for (const auto& [_, v] : report.oracle->per_algorithm) out << "," << num(v);
            out << "," << num(report.oracle->default_mean) << "," << num(report.oracle->all_mean) << "\n";
        }
    }
    return out.str();
}

}  // namespace metacf
