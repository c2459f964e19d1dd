#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

namespace colaudit {

/// Input/parsing failures (bad file, malformed CSV, schema mismatch).
struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Numerical failures (divergence, singular systems after retry).
struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ColumnKind {
    enum Tag { numeric, one_hot } tag = numeric;
    std::string origin_category;  // source column for one_hot, empty otherwise
};

/// n x p design matrix with column metadata. Immutable by convention after
/// construction; all operations return new instances.
struct FeatureMatrix {
    Eigen::MatrixXd values;
    std::vector<std::string> column_names;
    std::vector<ColumnKind> column_kinds;
    bool standardized = false;
    Eigen::VectorXd column_means;  // original units
    Eigen::VectorXd column_stds;   // sample (n-1) std, original units; 0 for constant columns
    std::vector<char> constant_columns;

    Eigen::Index n() const { return values.rows(); }
    Eigen::Index p() const { return values.cols(); }

    bool is_constant(Eigen::Index j) const {
        return j < static_cast<Eigen::Index>(constant_columns.size()) && constant_columns[j];
    }

    Eigen::Index column_index(const std::string& name) const {
        for (Eigen::Index j = 0; j < p(); ++j) {
            if (column_names[static_cast<std::size_t>(j)] == name) return j;
        }
        throw std::invalid_argument("unknown column: " + name);
    }

    /// Enforces the structural invariants; throws std::invalid_argument on violation.
    void validate() const {
        if (static_cast<Eigen::Index>(column_names.size()) != p()) {
            throw std::invalid_argument("column_names size does not match column count");
        }
        if (!values.allFinite()) {
            throw std::invalid_argument("feature matrix contains non-finite values");
        }
        std::unordered_set<std::string> seen;
        for (const auto& name : column_names) {
            if (!seen.insert(name).second) {
                throw std::invalid_argument("duplicate column name: " + name);
            }
        }
        if (column_means.size() != 0 && column_means.size() != p()) {
            throw std::invalid_argument("column_means length does not match column count");
        }
        if (column_stds.size() != 0 && column_stds.size() != p()) {
            throw std::invalid_argument("column_stds length does not match column count");
        }
        if (standardized && n() >= 2) {
            for (Eigen::Index j = 0; j < p(); ++j) {
                if (is_constant(j)) continue;
                const auto col = values.col(j);
                const double mean = col.mean();
                const double var = (col.array() - mean).square().sum() / static_cast<double>(n() - 1);
                if (std::abs(mean) > 1e-9 || std::abs(std::sqrt(var) - 1.0) > 1e-9) {
                    throw std::invalid_argument("standardized matrix violates unit-moment invariant in column " +
                                                column_names[static_cast<std::size_t>(j)]);
                }
            }
        }
    }

    /// New matrix restricted to the given column indices (order preserved as given).
    FeatureMatrix select_columns(const std::vector<Eigen::Index>& keep) const {
        FeatureMatrix out;
        out.values.resize(n(), static_cast<Eigen::Index>(keep.size()));
        out.standardized = standardized;
        if (column_means.size() == p()) out.column_means.resize(static_cast<Eigen::Index>(keep.size()));
        if (column_stds.size() == p()) out.column_stds.resize(static_cast<Eigen::Index>(keep.size()));
        Eigen::Index c = 0;
        for (Eigen::Index j : keep) {
            out.values.col(c) = values.col(j);
            out.column_names.push_back(column_names[static_cast<std::size_t>(j)]);
            if (!column_kinds.empty()) out.column_kinds.push_back(column_kinds[static_cast<std::size_t>(j)]);
            if (!constant_columns.empty()) out.constant_columns.push_back(constant_columns[static_cast<std::size_t>(j)]);
            if (out.column_means.size() > 0) out.column_means(c) = column_means(j);
            if (out.column_stds.size() > 0) out.column_stds(c) = column_stds(j);
            ++c;
        }
        return out;
    }

    /// New matrix restricted to the given row indices (repeats allowed).
    FeatureMatrix select_rows(const std::vector<Eigen::Index>& rows) const {
        FeatureMatrix out = *this;
        out.values.resize(static_cast<Eigen::Index>(rows.size()), p());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            out.values.row(static_cast<Eigen::Index>(i)) = values.row(rows[i]);
        }
        return out;
    }
};

/// Binary labels paired with a FeatureMatrix.
struct LabelVector {
    Eigen::VectorXi values;

    Eigen::Index n() const { return values.size(); }

    LabelVector select_rows(const std::vector<Eigen::Index>& rows) const {
        LabelVector out;
        out.values.resize(static_cast<Eigen::Index>(rows.size()));
        for (std::size_t i = 0; i < rows.size(); ++i) {
            out.values(static_cast<Eigen::Index>(i)) = values(rows[i]);
        }
        return out;
    }

    void validate_binary() const {
        for (Eigen::Index i = 0; i < n(); ++i) {
            if (values(i) != 0 && values(i) != 1) {
                throw std::invalid_argument("labels must be binary {0,1}");
            }
        }
    }

    bool both_classes_present() const {
        bool zero = false, one = false;
        for (Eigen::Index i = 0; i < n(); ++i) {
            (values(i) == 0 ? zero : one) = true;
        }
        return zero && one;
    }
};

struct BootstrapPlan {
    int num_resamples = 10;
    Eigen::Index sample_size = 0;
    std::uint64_t seed = 0;

    void validate() const {
        if (num_resamples < 2) throw std::invalid_argument("num_resamples must be >= 2");
        if (sample_size <= 0) throw std::invalid_argument("sample_size must be positive");
    }
};

}  // namespace colaudit
