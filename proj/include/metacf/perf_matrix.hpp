#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <variant>
#include <vector>

#include <json.hpp>

#include "error.hpp"
#include "random.hpp"
#include "text.hpp"

namespace metacf {

// ---------------------------------------------------------------------------
// Configurations
// ---------------------------------------------------------------------------

using ParamValue = std::variant<bool, long long, double, std::string>;

/// A learning algorithm together with one concrete hyperparameter assignment.
/// This is the "item" of the collaborative filter: one matrix column.
struct Configuration {
    std::string config_id;
    std::string algorithm;
    std::map<std::string, ParamValue> params;
    bool is_default = false;

    bool operator==(const Configuration&) const = default;

    template <typename T>
    T param(const std::string& name) const {
        const auto it = params.find(name);
        if (it == params.end()) throw ConfigurationError("configuration " + config_id + " has no parameter " + name);
        if constexpr (std::is_same_v<T, double>) {
            if (const auto* i = std::get_if<long long>(&it->second)) return static_cast<double>(*i);
        }
        if (const auto* v = std::get_if<T>(&it->second)) return *v;
        throw ConfigurationError("configuration " + config_id + ": parameter " + name + " has the wrong type");
    }
};

inline nlohmann::ordered_json to_json(const ParamValue& v) {
    return std::visit([](const auto& x) { return nlohmann::ordered_json(x); }, v);
}

inline ParamValue param_from_json(const nlohmann::ordered_json& j, const std::string& context) {
    if (j.is_boolean()) return j.get<bool>();
    if (j.is_number_integer()) return j.get<long long>();
    if (j.is_number_float()) return j.get<double>();
    if (j.is_string()) return j.get<std::string>();
    throw FormatError(context + ": parameter values must be numbers, booleans or strings");
}

/// Checks registry invariants: unique non-empty ids and at most one default
/// per algorithm.
inline void validate_registry(std::span<const Configuration> registry) {
    std::unordered_set<std::string> ids;
    std::unordered_set<std::string> defaults;
    for (const auto& c : registry) {
        if (c.config_id.empty()) throw ConfigurationError("empty config_id in registry");
        if (!ids.insert(c.config_id).second) throw ConfigurationError("duplicate config_id " + c.config_id);
        if (c.is_default && !defaults.insert(c.algorithm).second)
            throw ConfigurationError("algorithm " + c.algorithm + " has more than one default configuration");
    }
}

inline std::vector<Configuration> load_registry(std::istream& in) {
    nlohmann::ordered_json doc;
    try {
        doc = nlohmann::ordered_json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("registry JSON: ") + e.what());
    }
    if (!doc.is_array()) throw FormatError("registry JSON must be an array");
    std::vector<Configuration> out;
    for (const auto& item : doc) {
        if (!item.is_object() || !item.contains("config_id") || !item["config_id"].is_string())
            throw FormatError("registry entry without a string config_id");
        Configuration c;
        c.config_id = item["config_id"].get<std::string>();
        c.algorithm = item.value("algorithm", std::string{});
        c.is_default = item.value("is_default", false);
        if (item.contains("params")) {
            if (!item["params"].is_object()) throw FormatError("params of " + c.config_id + " must be an object");
            for (const auto& [k, v] : item["params"].items()) c.params.emplace(k, param_from_json(v, c.config_id));
        }
        out.push_back(std::move(c));
    }
    try {
        validate_registry(out);
    } catch (const ConfigurationError& e) {
        throw FormatError(e.what());
    }
    return out;
}

inline std::string save_registry(std::span<const Configuration> registry) {
    auto doc = nlohmann::ordered_json::array();
    for (const auto& c : registry) {
        nlohmann::ordered_json params = nlohmann::ordered_json::object();
        for (const auto& [k, v] : c.params) params[k] = to_json(v);
        doc.push_back({{"config_id", c.config_id}, {"algorithm", c.algorithm}, {"params", params}, {"is_default", c.is_default}});
    }
    return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Performance matrix
// ---------------------------------------------------------------------------

struct Cell {
    std::size_t row = 0;
    std::size_t col = 0;
    auto operator<=>(const Cell&) const = default;
};

/// Sparse dataset x configuration matrix of accuracies in percent.
/// Storage is dense row-major with NaN marking a missing cell.
class PerformanceMatrix {
public:
    PerformanceMatrix() = default;

    PerformanceMatrix(std::vector<std::string> row_ids, std::vector<std::string> col_ids)
        : row_ids_(std::move(row_ids)), col_ids_(std::move(col_ids)),
          values_(row_ids_.size() * col_ids_.size(), std::numeric_limits<double>::quiet_NaN()) {
        index_ids(row_ids_, row_index_, "dataset_id");
        index_ids(col_ids_, col_index_, "config_id");
    }

    std::size_t rows() const { return row_ids_.size(); }
    std::size_t cols() const { return col_ids_.size(); }
    const std::vector<std::string>& row_ids() const { return row_ids_; }
    const std::vector<std::string>& col_ids() const { return col_ids_; }

    std::optional<std::size_t> row_index(const std::string& id) const { return lookup(row_index_, id); }
    std::optional<std::size_t> col_index(const std::string& id) const { return lookup(col_index_, id); }

    bool observed(std::size_t r, std::size_t c) const { return !std::isnan(values_[r * cols() + c]); }

    std::optional<double> at(std::size_t r, std::size_t c) const {
        const double v = values_[r * cols() + c];
        if (std::isnan(v)) return std::nullopt;
        return v;
    }

    /// Row view; missing cells are NaN.
    std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols(), cols()}; }

    void set(std::size_t r, std::size_t c, double accuracy) {
        if (!(accuracy >= 0.0 && accuracy <= 100.0))
            throw ArgumentError("accuracy out of range at (" + row_ids_[r] + "," + col_ids_[c] + ")");
        values_[r * cols() + c] = accuracy;
    }

    void erase(std::size_t r, std::size_t c) { values_[r * cols() + c] = std::numeric_limits<double>::quiet_NaN(); }

    std::size_t observed_count() const {
        return static_cast<std::size_t>(std::count_if(values_.begin(), values_.end(), [](double v) { return !std::isnan(v); }));
    }

    std::size_t observed_in_row(std::size_t r) const {
        auto v = row(r);
        return static_cast<std::size_t>(std::count_if(v.begin(), v.end(), [](double x) { return !std::isnan(x); }));
    }

    /// Observed cells in canonical row-major order.
    std::vector<Cell> observed_cells() const {
        std::vector<Cell> out;
        for (std::size_t r = 0; r < rows(); ++r)
            for (std::size_t c = 0; c < cols(); ++c)
                if (observed(r, c)) out.push_back({r, c});
        return out;
    }

    friend bool operator==(const PerformanceMatrix& a, const PerformanceMatrix& b) {
        if (a.row_ids_ != b.row_ids_ || a.col_ids_ != b.col_ids_) return false;
        for (std::size_t i = 0; i < a.values_.size(); ++i) {
            const bool ma = std::isnan(a.values_[i]);
            const bool mb = std::isnan(b.values_[i]);
            if (ma != mb || (!ma && a.values_[i] != b.values_[i])) return false;
        }
        return true;
    }

private:
    static void index_ids(const std::vector<std::string>& ids, std::unordered_map<std::string, std::size_t>& index,
                          const char* what) {
        for (std::size_t i = 0; i < ids.size(); ++i) {
            if (ids[i].empty()) throw FormatError(std::string("empty ") + what);
            if (!index.emplace(ids[i], i).second) throw FormatError(std::string("duplicate ") + what + " " + ids[i]);
        }
    }

    static std::optional<std::size_t> lookup(const std::unordered_map<std::string, std::size_t>& index,
                                             const std::string& id) {
        if (auto it = index.find(id); it != index.end()) return it->second;
        return std::nullopt;
    }

    std::vector<std::string> row_ids_;
    std::vector<std::string> col_ids_;
    std::unordered_map<std::string, std::size_t> row_index_;
    std::unordered_map<std::string, std::size_t> col_index_;
    std::vector<double> values_;
};

/// Parses the matrix-CSV format: header `dataset_id,<config_id>...`, one row
/// per dataset, empty field = missing cell.
inline PerformanceMatrix load_matrix(std::istream& in) {
    const auto lines = text::read_lines(in);
    if (lines.empty() || text::trim(lines.front()).empty()) throw FormatError("empty header");
    auto header = text::split_csv(lines.front());
    if (text::trim(header.front()) != "dataset_id") throw FormatError("header must start with dataset_id");
    std::vector<std::string> col_ids;
    for (std::size_t i = 1; i < header.size(); ++i) col_ids.emplace_back(text::trim(header[i]));
    if (col_ids.empty()) throw FormatError("empty header");
    {
        std::unordered_set<std::string> seen;
        for (const auto& c : col_ids) {
            if (c.empty()) throw FormatError("empty config_id in header");
            if (!seen.insert(c).second) throw FormatError("duplicate config_id " + c);
        }
    }

    std::vector<std::vector<std::string>> records;
    std::vector<std::string> row_ids;
    std::unordered_set<std::string> seen_rows;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        auto fields = text::split_csv(lines[li]);
        std::string id(text::trim(fields.front()));
        if (id.empty()) throw FormatError("empty dataset_id on line " + std::to_string(li + 1));
        if (!seen_rows.insert(id).second) throw FormatError("duplicate dataset_id " + id);
        if (fields.size() != header.size())
            throw FormatError("row " + id + " has " + std::to_string(fields.size()) + " fields, expected " +
                              std::to_string(header.size()));
        row_ids.push_back(std::move(id));
        records.push_back(std::move(fields));
    }

    PerformanceMatrix m(std::move(row_ids), std::move(col_ids));
    for (std::size_t r = 0; r < records.size(); ++r) {
        for (std::size_t c = 0; c < m.cols(); ++c) {
            const auto field = text::trim(records[r][c + 1]);
            if (field.empty()) continue;
            const auto where = "(" + m.row_ids()[r] + "," + m.col_ids()[c] + ")";
            const auto v = text::parse_double(field);
            if (!v) throw FormatError("non-numeric accuracy at " + where);
            if (*v < 0.0 || *v > 100.0) throw FormatError("accuracy out of range at " + where);
            m.set(r, c, *v);
        }
    }
    return m;
}

inline PerformanceMatrix load_matrix(const std::string& csv_text) {
    std::istringstream in(csv_text);
    return load_matrix(in);
}

/// Serializes to matrix-CSV with `\n` line endings and up to 4 decimals.
inline std::string save_matrix(const PerformanceMatrix& m) {
    std::string out = "dataset_id";
    for (const auto& c : m.col_ids()) out += "," + c;
    out += "\n";
    for (std::size_t r = 0; r < m.rows(); ++r) {
        out += m.row_ids()[r];
        for (std::size_t c = 0; c < m.cols(); ++c) {
            out += ",";
            if (auto v = m.at(r, c)) out += text::format_decimal(*v, 4);
        }
        out += "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Masking
// ---------------------------------------------------------------------------

struct MaskPlan {
    double retained_fraction = 1.0;
    std::uint64_t seed = 0;
    std::vector<Cell> heldout;  // sorted row-major
};

struct MaskedMatrix {
    PerformanceMatrix masked;
    MaskPlan plan;
};

/// Number of cells removed when keeping `retained_fraction` of `observed`,
/// rounded half-up. The 1e-9 slack absorbs binary error in (1 - f) so that
/// e.g. f = 0.9, n = 5 rounds 0.5 up to 1.
inline std::size_t heldout_count(double retained_fraction, std::size_t observed) {
    const double removed = (1.0 - retained_fraction) * static_cast<double>(observed);
    return std::min(observed, static_cast<std::size_t>(std::floor(removed + 0.5 + 1e-9)));
}

/// Removes a seeded uniform sample of observed cells. The sample is the prefix
/// of a partial Fisher-Yates shuffle over the row-major observed-cell list,
/// so the same seed yields nested held-out sets across retained fractions.
inline MaskedMatrix apply_mask(const PerformanceMatrix& m, double retained_fraction, std::uint64_t seed) {
    if (!(retained_fraction > 0.0 && retained_fraction <= 1.0))
        throw ArgumentError("retained_fraction must lie in (0, 1], got " + std::to_string(retained_fraction));
    auto cells = m.observed_cells();
    if (cells.empty()) throw InputError("cannot mask a matrix with no observed cells");
    const std::size_t h = heldout_count(retained_fraction, cells.size());

    Rng rng(seed);
    for (std::size_t i = 0; i < h; ++i) {
        const std::size_t j = i + rng.below(cells.size() - i);
        std::swap(cells[i], cells[j]);
    }
    std::vector<Cell> heldout(cells.begin(), cells.begin() + static_cast<std::ptrdiff_t>(h));
    std::sort(heldout.begin(), heldout.end());

    MaskedMatrix out{m, MaskPlan{retained_fraction, seed, std::move(heldout)}};
    for (const auto& c : out.plan.heldout) out.masked.erase(c.row, c.col);
    return out;
}

// ---------------------------------------------------------------------------
// Column statistics
// ---------------------------------------------------------------------------

struct ColumnStats {
    std::vector<std::optional<double>> mean;  // nullopt when the column is empty
    std::vector<std::size_t> count;
    std::optional<double> global_mean;
};

inline ColumnStats column_stats(const PerformanceMatrix& m) {
    ColumnStats s;
    s.mean.assign(m.cols(), std::nullopt);
    s.count.assign(m.cols(), 0);
    std::vector<double> sum(m.cols(), 0.0);
    double total = 0.0;
    std::size_t n = 0;
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < m.cols(); ++c) {
            if (auto v = m.at(r, c)) {
                sum[c] += *v;
                ++s.count[c];
                total += *v;
                ++n;
            }
        }
    }
    for (std::size_t c = 0; c < m.cols(); ++c)
        if (s.count[c] > 0) s.mean[c] = sum[c] / static_cast<double>(s.count[c]);
    if (n > 0) s.global_mean = total / static_cast<double>(n);
    return s;
}

}  // namespace metacf
