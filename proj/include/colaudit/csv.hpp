#pragma once

#include "colaudit/types.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace colaudit {

/// Dataset schema: which column holds the label, which columns to one-hot
/// encode, which to drop entirely.
struct DatasetSchema {
    std::string label;
    std::vector<std::string> categorical;
    std::vector<std::string> drop;

    bool is_categorical(const std::string& name) const {
        return std::find(categorical.begin(), categorical.end(), name) != categorical.end();
    }
    bool is_dropped(const std::string& name) const {
        return std::find(drop.begin(), drop.end(), name) != drop.end();
    }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

inline bool parse_double(const std::string& s, double& out) {
    const char* begin = s.data();
    const char* end = begin + s.size();
    while (begin != end && (*begin == ' ' || *begin == '\t')) ++begin;
    while (end != begin && (*(end - 1) == ' ' || *(end - 1) == '\t')) --end;
    if (begin == end) return false;
    auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc() && ptr == end;
}

struct RawCsv {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

inline RawCsv read_raw_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open file: " + path);
    RawCsv raw;
    std::string line;
    if (!std::getline(in, line)) throw io_error("empty file: " + path);
    raw.header = split_csv_line(line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != raw.header.size()) {
            throw io_error("row " + std::to_string(raw.rows.size() + 2) + " has " +
                           std::to_string(fields.size()) + " fields, expected " +
                           std::to_string(raw.header.size()) + " in " + path);
        }
        raw.rows.push_back(std::move(fields));
    }
    if (raw.rows.empty()) throw io_error("no data rows in " + path);
    return raw;
}

}  // namespace detail

/// Loads a labelled CSV. Numeric columns pass through, categorical columns are
/// one-hot encoded as `<col>_<value>` (categories in lexicographic order),
/// dropped columns are removed. Missing values are a hard error.
inline std::pair<FeatureMatrix, LabelVector> load_csv(const std::string& path, const DatasetSchema& schema) {
    detail::RawCsv raw = detail::read_raw_csv(path);

    std::ptrdiff_t label_col = -1;
    for (std::size_t c = 0; c < raw.header.size(); ++c) {
        if (raw.header[c] == schema.label) label_col = static_cast<std::ptrdiff_t>(c);
    }
    if (label_col < 0) throw io_error("label column '" + schema.label + "' not found in " + path);

    const std::size_t n = raw.rows.size();

    LabelVector labels;
    labels.values.resize(static_cast<Eigen::Index>(n));
    for (std::size_t r = 0; r < n; ++r) {
        double v;
        if (!detail::parse_double(raw.rows[r][static_cast<std::size_t>(label_col)], v) || (v != 0.0 && v != 1.0)) {
            throw io_error("label at row " + std::to_string(r + 2) + " is not binary 0/1");
        }
        labels.values(static_cast<Eigen::Index>(r)) = static_cast<int>(v);
    }

    // Pass 1: output column layout. Categorical columns expand in place.
    struct OutCol {
        std::string name;
        ColumnKind kind;
        std::size_t src;
        std::string match_value;  // one_hot only
    };
    std::vector<OutCol> out_cols;
    for (std::size_t c = 0; c < raw.header.size(); ++c) {
        const std::string& name = raw.header[c];
        if (static_cast<std::ptrdiff_t>(c) == label_col || schema.is_dropped(name)) continue;
        if (schema.is_categorical(name)) {
            std::set<std::string> cats;
            for (const auto& row : raw.rows) cats.insert(row[c]);
            for (const auto& cat : cats) {
                out_cols.push_back({name + "_" + cat, {ColumnKind::one_hot, name}, c, cat});
            }
        } else {
            out_cols.push_back({name, {ColumnKind::numeric, ""}, c, ""});
        }
    }
    if (out_cols.empty()) throw io_error("no feature columns remain after applying schema");

    FeatureMatrix X;
    X.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(out_cols.size()));
    for (const auto& oc : out_cols) {
        X.column_names.push_back(oc.name);
        X.column_kinds.push_back(oc.kind);
    }
    X.constant_columns.assign(out_cols.size(), 0);

    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t j = 0; j < out_cols.size(); ++j) {
            const auto& oc = out_cols[j];
            const std::string& cell = raw.rows[r][oc.src];
            double v;
            if (oc.kind.tag == ColumnKind::one_hot) {
                v = (cell == oc.match_value) ? 1.0 : 0.0;
            } else {
                if (!detail::parse_double(cell, v)) {
                    throw io_error("non-numeric value '" + cell + "' in numeric column '" + oc.name +
                                   "' at row " + std::to_string(r + 2));
                }
                if (!std::isfinite(v)) {
                    throw io_error("non-finite value in column '" + oc.name + "' at row " + std::to_string(r + 2));
                }
            }
            X.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = v;
        }
    }
    X.validate();
    return {std::move(X), std::move(labels)};
}

/// Loads a header+numeric CSV as a plain FeatureMatrix (no label column).
inline FeatureMatrix read_feature_csv(const std::string& path) {
    detail::RawCsv raw = detail::read_raw_csv(path);
    FeatureMatrix X;
    X.column_names = raw.header;
    X.column_kinds.assign(raw.header.size(), {ColumnKind::numeric, ""});
    X.constant_columns.assign(raw.header.size(), 0);
    X.values.resize(static_cast<Eigen::Index>(raw.rows.size()), static_cast<Eigen::Index>(raw.header.size()));
    for (std::size_t r = 0; r < raw.rows.size(); ++r) {
        for (std::size_t c = 0; c < raw.header.size(); ++c) {
            double v;
            if (!detail::parse_double(raw.rows[r][c], v)) {
                throw io_error("non-numeric value '" + raw.rows[r][c] + "' at row " + std::to_string(r + 2));
            }
            X.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
        }
    }
    X.validate();
    return X;
}

namespace detail {

inline std::string format_full_precision(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace detail

/// Writes a named matrix as CSV with full round-trip precision.
inline void write_matrix_csv(const std::string& path, const std::vector<std::string>& names,
                             const Eigen::MatrixXd& values) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot write file: " + path);
    for (std::size_t c = 0; c < names.size(); ++c) {
        out << names[c] << (c + 1 < names.size() ? "," : "\n");
    }
    for (Eigen::Index r = 0; r < values.rows(); ++r) {
        for (Eigen::Index c = 0; c < values.cols(); ++c) {
            out << detail::format_full_precision(values(r, c)) << (c + 1 < values.cols() ? "," : "\n");
        }
    }
}

inline void write_csv(const FeatureMatrix& X, const std::string& path) {
    write_matrix_csv(path, X.column_names, X.values);
}

/// Writes features plus a label column (used by the prune command).
inline void write_csv(const FeatureMatrix& X, const LabelVector& y, const std::string& label_name,
                      const std::string& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot write file: " + path);
    for (const auto& name : X.column_names) out << name << ",";
    out << label_name << "\n";
    for (Eigen::Index r = 0; r < X.n(); ++r) {
        for (Eigen::Index c = 0; c < X.p(); ++c) {
            out << detail::format_full_precision(X.values(r, c)) << ",";
        }
        out << y.values(r) << "\n";
    }
}

}  // namespace colaudit
