#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "../error.hpp"
#include "../text.hpp"

namespace metacf {

enum class FeatureKind { numeric, categorical };

struct FeatureColumn {
    std::string name;
    FeatureKind kind = FeatureKind::numeric;
    std::vector<double> numeric;      // numeric kind
    std::vector<int> codes;           // categorical kind, index into levels
    std::vector<std::string> levels;  // categorical kind
};

/// Labeled tabular classification data.
struct Dataset {
    std::string name;
    std::vector<FeatureColumn> features;
    std::vector<int> labels;
    std::vector<std::string> class_names;

    std::size_t size() const { return labels.size(); }
    std::size_t n_classes() const { return class_names.size(); }

    std::vector<std::size_t> class_counts() const {
        std::vector<std::size_t> counts(n_classes(), 0);
        for (int y : labels) ++counts[static_cast<std::size_t>(y)];
        return counts;
    }

    void validate() const {
        if (size() < 2) throw FormatError("dataset " + name + " needs at least 2 instances");
        if (features.empty()) throw FormatError("dataset " + name + " needs at least 1 feature");
        if (class_names.empty()) throw FormatError("dataset " + name + " needs at least 1 class");
        for (const auto& f : features) {
            const std::size_t n = f.kind == FeatureKind::numeric ? f.numeric.size() : f.codes.size();
            if (n != size()) throw FormatError("dataset " + name + ": feature " + f.name + " has the wrong length");
        }
    }
};

inline bool is_missing_token(std::string_view s) { return s.empty() || s == "?" || s == "NA"; }

/// CSV with a header; the last column is the class label. A column whose
/// present values all parse as numbers is numeric (missing values take the
/// column mean); any other column is categorical with "?" as its own level.
/// Instances with a missing label are dropped.
inline Dataset load_dataset(std::istream& in, std::string name) {
    const auto lines = text::read_lines(in);
    if (lines.empty()) throw FormatError("dataset " + name + ": empty file");
    const auto header = text::split_csv(lines.front());
    if (header.size() < 2) throw FormatError("dataset " + name + ": need at least one feature and a label column");
    const std::size_t n_feat = header.size() - 1;

    std::vector<std::vector<std::string>> cells;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        if (text::trim(lines[li]).empty()) continue;
        auto f = text::split_csv(lines[li]);
        if (f.size() != header.size())
            throw FormatError("dataset " + name + ": line " + std::to_string(li + 1) + " has " +
                              std::to_string(f.size()) + " fields, expected " + std::to_string(header.size()));
        for (auto& s : f) s = std::string(text::trim(s));
        if (is_missing_token(f.back())) continue;
        cells.push_back(std::move(f));
    }

    Dataset d;
    d.name = std::move(name);
    std::map<std::string, int> class_index;
    std::vector<std::string> raw_labels;
    for (const auto& row : cells) raw_labels.push_back(row.back());
    {
        auto sorted = raw_labels;
        std::sort(sorted.begin(), sorted.end());
        sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
        for (const auto& s : sorted) {
            class_index.emplace(s, static_cast<int>(d.class_names.size()));
            d.class_names.push_back(s);
        }
    }
    for (const auto& s : raw_labels) d.labels.push_back(class_index.at(s));

    for (std::size_t j = 0; j < n_feat; ++j) {
        FeatureColumn col;
        col.name = std::string(text::trim(header[j]));
        bool numeric = true;
        for (const auto& row : cells)
            if (!is_missing_token(row[j]) && !text::parse_double(row[j])) {
                numeric = false;
                break;
            }
        if (numeric) {
            col.kind = FeatureKind::numeric;
            double sum = 0.0;
            std::size_t n = 0;
            for (const auto& row : cells)
                if (auto v = text::parse_double(row[j])) {
                    sum += *v;
                    ++n;
                }
            const double fill = n ? sum / static_cast<double>(n) : 0.0;
            for (const auto& row : cells) col.numeric.push_back(text::parse_double(row[j]).value_or(fill));
        } else {
            col.kind = FeatureKind::categorical;
            std::vector<std::string> values;
            for (const auto& row : cells) values.push_back(row[j].empty() ? "?" : row[j]);
            auto levels = values;
            std::sort(levels.begin(), levels.end());
            levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
            for (const auto& v : values)
                col.codes.push_back(static_cast<int>(std::lower_bound(levels.begin(), levels.end(), v) - levels.begin()));
            col.levels = std::move(levels);
        }
        d.features.push_back(std::move(col));
    }
    d.validate();
    return d;
}

inline Dataset load_dataset_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open dataset " + path.string());
    return load_dataset(in, path.stem().string());
}

/// Every *.csv in `dir`, sorted by file name.
inline std::vector<Dataset> load_dataset_dir(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::vector<Dataset> out;
    for (const auto& f : files) out.push_back(load_dataset_file(f));
    return out;
}

/// Dense encoding of a dataset fitted on a set of training rows: numeric
/// features are min-max scaled with training-row bounds, categorical
/// features are one-hot encoded.
class FeatureEncoder {
public:
    FeatureEncoder(const Dataset& d, std::span<const std::size_t> train_rows) : data_(&d) {
        for (const auto& f : d.features) {
            if (f.kind == FeatureKind::numeric) {
                double lo = std::numeric_limits<double>::infinity(), hi = -lo;
                for (auto r : train_rows) {
                    lo = std::min(lo, f.numeric[r]);
                    hi = std::max(hi, f.numeric[r]);
                }
                if (train_rows.empty()) lo = hi = 0.0;
                lo_.push_back(lo);
                range_.push_back(hi > lo ? hi - lo : 1.0);
                width_ += 1;
            } else {
                lo_.push_back(0.0);
                range_.push_back(1.0);
                width_ += f.levels.size();
            }
        }
    }

    std::size_t width() const { return width_; }

    void encode(std::size_t row, std::span<double> out) const {
        std::size_t k = 0;
        for (std::size_t j = 0; j < data_->features.size(); ++j) {
            const auto& f = data_->features[j];
            if (f.kind == FeatureKind::numeric) {
                out[k++] = (f.numeric[row] - lo_[j]) / range_[j];
            } else {
                for (std::size_t l = 0; l < f.levels.size(); ++l) out[k + l] = 0.0;
                out[k + static_cast<std::size_t>(f.codes[row])] = 1.0;
                k += f.levels.size();
            }
        }
    }

    /// Row-major rows.size() x width() matrix.
    std::vector<double> encode(std::span<const std::size_t> rows) const {
        std::vector<double> out(rows.size() * width_);
        for (std::size_t i = 0; i < rows.size(); ++i) encode(rows[i], {out.data() + i * width_, width_});
        return out;
    }

private:
    const Dataset* data_;
    std::vector<double> lo_, range_;
    std::size_t width_ = 0;
};

}  // namespace metacf
