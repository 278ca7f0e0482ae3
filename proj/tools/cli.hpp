#pragma once

// Command-line front end. Kept in a header so the test suite can drive
// run() in-process.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <metacf/metacf.hpp>

namespace metacf::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kDataError = 1, kUsageError = 2 };

/// A flag value that is well-formed for the parser but unusable.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw InputError("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const fs::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + p.string());
    out << content;
    if (!out) throw InputError("write failed for " + p.string());
}

inline nlohmann::json read_json(const fs::path& p) {
    try {
        return nlohmann::json::parse(read_file(p));
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(p.string() + ": " + e.what());
    }
}

inline PerformanceMatrix read_matrix(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw InputError("cannot read " + p.string());
    try {
        return load_matrix(in);
    } catch (const FormatError& e) {
        throw FormatError(p.string() + ": " + e.what());
    }
}

inline std::vector<Configuration> read_registry(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw InputError("cannot read " + p.string());
    return load_registry(in);
}

inline void require_input_file(const std::string& flag, const std::string& path) {
    if (path.empty()) return;
    if (!fs::is_regular_file(path)) throw UsageError(flag + ": no such file: " + path);
}

inline void require_input_dir(const std::string& flag, const std::string& path) {
    if (path.empty()) return;
    if (!fs::is_directory(path)) throw UsageError(flag + ": no such directory: " + path);
}

inline void require_output_path(const std::string& flag, const std::string& path) {
    if (path.empty()) return;
    const auto parent = fs::path(path).parent_path();
    if (!parent.empty() && !fs::is_directory(parent)) throw UsageError(flag + ": directory does not exist: " + parent.string());
    if (fs::is_directory(path)) throw UsageError(flag + ": is a directory: " + path);
}

inline std::string engine_list() {
    std::string s;
    for (auto n : kEngineNames) s += (s.empty() ? "" : ", ") + std::string(n);
    return s;
}

inline Engine engine_flag(const std::string& token) {
    const auto e = parse_engine(token);
    if (!e) throw UsageError("--engine: unknown engine '" + token + "' (valid: " + engine_list() + ")");
    return *e;
}

/// Engine setting from --setting (JSON file) or --engine with defaults; an
/// explicit --seed overrides the setting's seed.
inline EngineSetting resolve_setting(const std::string& engine, const std::string& setting_path,
                                     std::optional<std::uint64_t> seed) {
    EngineSetting s;
    if (!setting_path.empty()) {
        try {
            s = setting_from_json(read_json(setting_path));
        } catch (const FormatError& e) {
            throw UsageError(std::string("--setting: ") + e.what());
        } catch (const ArgumentError& e) {
            throw UsageError(std::string("--setting: ") + e.what());
        }
    } else {
        switch (engine_flag(engine)) {
            case Engine::baseline: s = EngineSetting::baseline(); break;
            case Engine::fkm: s = EngineSetting::fkm({}); break;
            case Engine::mf: s = EngineSetting::mf({}); break;
            case Engine::nlpca: s = EngineSetting::nlpca({}); break;
            case Engine::ubp: s = EngineSetting::ubp({}); break;
        }
    }
    if (seed) s.seed = *seed;
    return s;
}

inline std::string recommendations_csv(const std::vector<Recommendation>& recs) {
    std::string out = "dataset_id,rank,config_id,predicted_accuracy\n";
    for (const auto& r : recs)
        for (std::size_t i = 0; i < r.ranked_configs.size(); ++i)
            out += r.dataset_id + "," + std::to_string(i + 1) + "," + r.ranked_configs[i].config_id + "," +
                   text::format_decimal(r.ranked_configs[i].predicted_accuracy, 4) + "\n";
    return out;
}

inline std::string heldout_csv(const PerformanceMatrix& full, const MaskPlan& plan) {
    std::string out = "dataset_id,config_id,accuracy\n";
    for (const auto& c : plan.heldout)
        out += full.row_ids()[c.row] + "," + full.col_ids()[c.col] + "," +
               text::format_decimal(*full.at(c.row, c.col), 4) + "\n";
    return out;
}

/// Meta-features of every matrix row, read from <dir>/<dataset_id>.csv.
inline std::vector<MetaFeatureVector> row_meta_features(const PerformanceMatrix& m, const fs::path& dir) {
    std::vector<MetaFeatureVector> out;
    for (const auto& id : m.row_ids()) {
        const auto p = dir / (id + ".csv");
        if (!fs::is_regular_file(p)) throw InputError("no dataset file for row " + id + " (expected " + p.string() + ")");
        out.push_back(meta_features(load_dataset_file(p)));
    }
    return out;
}

inline unsigned resolve_jobs(int jobs) {
    if (jobs > 0) return static_cast<unsigned>(jobs);
    return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace detail

/// Runs one command. Output files are written only at paths named by flags;
/// diagnostics and resolved seeds go to `err`.
inline int run(const std::vector<std::string>& argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    using namespace detail;
    CLI::App app{"Meta collaborative filtering: recommend learning algorithms and hyperparameters", "metacf"};
    app.set_version_flag("--version", std::string("metacf ") + kVersion);
    app.require_subcommand(1);

    // ingest
    std::string in_matrix, in_registry, out_path, heldout_path;
    std::optional<double> retain;
    std::uint64_t seed = 0;
    auto* ingest = app.add_subcommand("ingest", "Validate a matrix CSV, optionally mask it, write the canonical form");
    ingest->add_option("--matrix", in_matrix, "Input matrix CSV")->required();
    ingest->add_option("--registry", in_registry, "Config registry JSON checked against the columns");
    ingest->add_option("--out", out_path, "Output matrix CSV")->required();
    ingest->add_option("--retain", retain, "Keep this fraction of observed cells (0,1]");
    ingest->add_option("--seed", seed, "Mask seed");
    ingest->add_option("--heldout", heldout_path, "CSV of the removed cells");

    // synth
    std::size_t rows = 0, cols = 0, rank = 0;
    double noise = 0.0;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic low-rank matrix");
    synth->add_option("--rows", rows)->required();
    synth->add_option("--cols", cols)->required();
    synth->add_option("--rank", rank)->required();
    synth->add_option("--noise", noise)->default_val(0.0);
    synth->add_option("--seed", seed);
    synth->add_option("--out", out_path)->required();

    // bench-learners
    std::string data_dir, specs_path, out_matrix, out_registry;
    int n_per_learner = 32, folds = 10, jobs = 1;
    auto* bench = app.add_subcommand("bench-learners", "Evaluate sampled learner configurations on datasets");
    bench->add_option("--data-dir", data_dir, "Directory of dataset CSVs")->required();
    bench->add_option("--specs", specs_path, "Learner specs JSON (default: built-in spaces)");
    bench->add_option("--n", n_per_learner, "Sampled configurations per learner")->default_val(32);
    bench->add_option("--folds", folds, "Cross-validation folds")->default_val(10);
    bench->add_option("--seed", seed);
    bench->add_option("--out-matrix", out_matrix)->required();
    bench->add_option("--out-registry", out_registry)->required();
    bench->add_option("--jobs", jobs, "Worker threads (0 = all cores)")->default_val(1);

    // complete
    std::string engine, setting_path;
    std::optional<std::uint64_t> engine_seed_flag;
    auto* complete_cmd = app.add_subcommand("complete", "Fill the missing cells of a matrix");
    complete_cmd->add_option("--matrix", in_matrix)->required();
    auto* eng_opt = complete_cmd->add_option("--engine", engine, "baseline|fkm|mf|nlpca|ubp (default hyperparameters)");
    auto* set_opt = complete_cmd->add_option("--setting", setting_path, "Engine setting JSON");
    eng_opt->excludes(set_opt);
    complete_cmd->add_option("--seed", engine_seed_flag, "Engine seed");
    complete_cmd->add_option("--out", out_path)->required();

    // recommend
    std::string mode = "cf", target_path, dataset_id;
    std::size_t k = 4, neighbors = 3;
    auto* recommend = app.add_subcommand("recommend", "Rank configurations for each dataset");
    recommend->add_option("--matrix", in_matrix)->required();
    recommend->add_option("--mode", mode, "cf or content")->default_val("cf");
    auto* r_eng = recommend->add_option("--engine", engine, "CF engine (default mf)");
    auto* r_set = recommend->add_option("--setting", setting_path, "Engine setting JSON");
    r_eng->excludes(r_set);
    recommend->add_option("--seed", engine_seed_flag);
    recommend->add_option("--k", k)->default_val(4);
    recommend->add_option("--dataset", dataset_id, "Only this matrix row");
    recommend->add_option("--data-dir", data_dir, "Dataset CSVs named <dataset_id>.csv (content mode)");
    recommend->add_option("--target", target_path, "New dataset CSV to recommend for (content mode)");
    recommend->add_option("--neighbors", neighbors, "Neighbour count (content mode)")->default_val(3);
    recommend->add_option("--out", out_path)->required();

    // evaluate
    std::string plan_path, raw_path, format = "markdown";
    auto* evaluate = app.add_subcommand("evaluate", "Run the sparsity sweep and write the report");
    evaluate->add_option("--matrix", in_matrix)->required();
    evaluate->add_option("--plan", plan_path, "Sweep plan JSON")->required();
    evaluate->add_option("--out", out_path)->required();
    evaluate->add_option("--format", format, "csv or markdown")->default_val("markdown");
    evaluate->add_option("--raw", raw_path, "Also write the raw records CSV");
    evaluate->add_option("--registry", in_registry, "Registry JSON; adds the oracle table");
    evaluate->add_option("--data-dir", data_dir, "Dataset CSVs; adds the Content row");
    evaluate->add_option("--jobs", jobs, "Worker threads (0 = all cores)")->default_val(1);

    // report
    auto* report = app.add_subcommand("report", "Re-aggregate raw sweep records into a report");
    report->add_option("--raw", raw_path)->required();
    report->add_option("--plan", plan_path)->required();
    report->add_option("--out", out_path)->required();
    report->add_option("--format", format)->default_val("markdown");
    report->add_option("--matrix", in_matrix, "Full matrix, needed with --registry or --data-dir");
    report->add_option("--registry", in_registry);
    report->add_option("--data-dir", data_dir);

    std::vector<std::string> args(argv.rbegin(), argv.rend());
    try {
        app.parse(args);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::CallForVersion&) {
        out << "metacf " << kVersion << "\n";
        return kOk;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return kOk;
        }
        err << "usage error: " << e.what() << " (run with --help)\n";
        return kUsageError;
    }

    auto* cmd = app.get_subcommands().front();
    const std::string name = cmd->get_name();
    try {
        // Flag validation: nothing is read or written before this passes.
        std::optional<ReportFormat> report_format;
        std::optional<EngineSetting> setting;
        require_input_file("--matrix", in_matrix);
        require_input_file("--registry", in_registry);
        require_input_file("--specs", specs_path);
        require_input_file("--setting", setting_path);
        require_input_file("--plan", plan_path);
        require_input_file("--target", target_path);
        require_input_dir("--data-dir", data_dir);
        require_output_path("--out", out_path);
        require_output_path("--heldout", heldout_path);
        require_output_path("--out-matrix", out_matrix);
        require_output_path("--out-registry", out_registry);
        if (name == "evaluate") require_output_path("--raw", raw_path);
        if (name == "report") require_input_file("--raw", raw_path);
        if (name == "ingest") {
            if (!heldout_path.empty() && !retain) throw UsageError("--heldout needs --retain");
            if (retain && !(*retain > 0.0 && *retain <= 1.0)) throw UsageError("--retain must lie in (0, 1]");
        }
        if (name == "synth" && (rows == 0 || cols == 0 || rank == 0))
            throw UsageError("--rows, --cols and --rank must be positive");
        if (name == "bench-learners" && (n_per_learner < 1 || folds < 2))
            throw UsageError("--n must be >= 1 and --folds >= 2");
        if (name == "complete") {
            if (engine.empty() && setting_path.empty()) throw UsageError("complete needs --engine or --setting");
            setting = resolve_setting(engine, setting_path, engine_seed_flag);
        }
        if (name == "recommend") {
            if (k == 0) throw UsageError("--k must be >= 1");
            if (mode == "cf") {
                setting = resolve_setting(engine.empty() ? "mf" : engine, setting_path, engine_seed_flag);
            } else if (mode == "content") {
                if (data_dir.empty()) throw UsageError("--mode content needs --data-dir");
                if (neighbors == 0) throw UsageError("--neighbors must be >= 1");
            } else {
                throw UsageError("--mode: unknown mode '" + mode + "' (valid: cf, content)");
            }
        }
        if (name == "evaluate" || name == "report") {
            try {
                report_format = parse_report_format(format);
            } catch (const ArgumentError& e) {
                throw UsageError(std::string("--format: ") + e.what());
            }
        }
        if (name == "report" && (!in_registry.empty() || !data_dir.empty()) && in_matrix.empty())
            throw UsageError("--registry and --data-dir need --matrix");

        if (name == "ingest") {
            auto m = read_matrix(in_matrix);
            if (!in_registry.empty()) {
                const auto reg = read_registry(in_registry);
                for (const auto& id : m.col_ids()) {
                    if (std::none_of(reg.begin(), reg.end(), [&](const auto& c) { return c.config_id == id; }))
                        throw ConfigurationError("column " + id + " has no registry entry");
                }
            }
            if (retain) {
                err << "seed: mask=" << seed << "\n";
                auto mm = apply_mask(m, *retain, seed);
                write_file(out_path, save_matrix(mm.masked));
                if (!heldout_path.empty()) write_file(heldout_path, heldout_csv(m, mm.plan));
                err << "ingest: " << m.rows() << "x" << m.cols() << ", held out " << mm.plan.heldout.size() << " of "
                    << m.observed_count() << " observed cells\n";
            } else {
                write_file(out_path, save_matrix(m));
                err << "ingest: " << m.rows() << "x" << m.cols() << ", " << m.observed_count() << " observed cells\n";
            }
        } else if (name == "synth") {
            err << "seed: synth=" << seed << "\n";
            write_file(out_path, save_matrix(gen_synthetic(rows, cols, rank, noise, seed)));
        } else if (name == "bench-learners") {
            const auto specs = specs_path.empty()
                                   ? default_learner_specs()
                                   : learner_specs_from_json(nlohmann::ordered_json::parse(read_file(specs_path)));
            const auto datasets = load_dataset_dir(data_dir);
            if (datasets.empty()) throw InputError("no *.csv datasets in " + data_dir);
            err << "seed: bench=" << seed << "\n";
            const auto built = build_matrix(datasets, specs, n_per_learner, folds, seed, resolve_jobs(jobs));
            write_file(out_matrix, save_matrix(built.matrix));
            write_file(out_registry, save_registry(built.registry));
            err << "bench-learners: " << datasets.size() << " datasets x " << built.registry.size()
                << " configurations\n";
        } else if (name == "complete") {
            const auto m = read_matrix(in_matrix);
            err << "seed: " << setting_id(*setting) << " seed=" << setting->seed << "\n";
            const auto done = complete(m, *setting);
            write_file(out_path, save_matrix(done.to_matrix()));
            const auto& rep = done.fit_report();
            err << "complete: " << rep.iterations_run << " iterations, loss " << rep.initial_loss << " -> "
                << rep.final_loss << "\n";
        } else if (name == "recommend") {
            const auto m = read_matrix(in_matrix);
            std::vector<std::size_t> targets;
            if (!dataset_id.empty()) {
                const auto r = m.row_index(dataset_id);
                if (!r) throw ArgumentError("--dataset: no row " + dataset_id);
                targets.push_back(*r);
            } else {
                for (std::size_t r = 0; r < m.rows(); ++r) targets.push_back(r);
            }
            std::vector<Recommendation> recs;
            if (mode == "cf") {
                err << "seed: " << setting_id(*setting) << " seed=" << setting->seed << "\n";
                const auto done = complete(m, *setting);
                for (auto r : targets) recs.push_back(top_k(scored_row(done, r), k, m.row_ids()[r]));
            } else {
                if (m.observed_count() != m.rows() * m.cols())
                    throw InputError("content mode needs a fully observed matrix");
                const auto feats = row_meta_features(m, data_dir);
                auto example = [&](std::size_t r) {
                    ScoredRow row;
                    for (std::size_t c = 0; c < m.cols(); ++c) row.emplace_back(m.col_ids()[c], *m.at(r, c));
                    return ContentExample{feats[r], std::move(row)};
                };
                if (!target_path.empty()) {
                    const auto target = load_dataset_file(target_path);
                    std::vector<ContentExample> pool;
                    for (std::size_t r = 0; r < m.rows(); ++r) pool.push_back(example(r));
                    recs.push_back(content_recommend(meta_features(target), pool, std::min(neighbors, pool.size()), k,
                                                     target.name));
                } else {
                    if (m.rows() < 2) throw InputError("content mode needs at least two datasets");
                    for (auto t : targets) {
                        std::vector<ContentExample> pool;
                        for (std::size_t r = 0; r < m.rows(); ++r)
                            if (r != t) pool.push_back(example(r));
                        recs.push_back(content_recommend(feats[t], pool, std::min(neighbors, pool.size()), k,
                                                         m.row_ids()[t]));
                    }
                }
            }
            write_file(out_path, recommendations_csv(recs));
        } else if (name == "evaluate" || name == "report") {
            const auto plan = plan_from_json(read_json(plan_path));
            std::optional<PerformanceMatrix> m;
            if (!in_matrix.empty()) m = read_matrix(in_matrix);
            SweepResult raw;
            if (name == "evaluate") {
                err << "seed: master=" << plan.master_seed << "\n";
                raw = run_sweep(*m, plan, resolve_jobs(jobs));
                if (!raw_path.empty()) write_file(raw_path, raw_records_csv(raw));
            } else {
                std::ifstream in(raw_path, std::ios::binary);
                raw = load_raw_records(in, plan);
            }
            auto rep = aggregate(raw, plan);
            if (!data_dir.empty())
                rep.engines.push_back(evaluate_content(*m, row_meta_features(*m, data_dir), {1, 3, 5}, plan.k));
            if (!in_registry.empty()) rep.oracle = oracle_table(*m, read_registry(in_registry));
            write_file(out_path, render_report(rep, *report_format));
        }
        return kOk;
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return kUsageError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kDataError;
    }
}

}  // namespace metacf::cli
