#pragma once

#include "colaudit/rng.hpp"
#include "colaudit/types.hpp"

#include <cmath>
#include <utility>
#include <vector>

namespace colaudit {

/// Per-column location/scale learned on training data.
struct Scaler {
    Eigen::VectorXd means;
    Eigen::VectorXd stds;  // sample std (n-1); 1.0 for constant columns
    std::vector<char> constant;

    Eigen::MatrixXd transform(const Eigen::MatrixXd& values) const {
        Eigen::MatrixXd out = values;
        for (Eigen::Index c = 0; c < out.cols(); ++c) {
            out.col(c) = (out.col(c).array() - means(c)) / stds(c);
        }
        return out;
    }
};

inline Scaler fit_scaler(const FeatureMatrix& X) {
    if (X.n() < 2) throw numeric_error("standardize needs at least 2 rows");
    Scaler s;
    const Eigen::Index p = X.p();
    s.means.resize(p);
    s.stds.resize(p);
    s.constant.assign(static_cast<std::size_t>(p), 0);
    for (Eigen::Index c = 0; c < p; ++c) {
        const double mean = X.values.col(c).mean();
        const double ss = (X.values.col(c).array() - mean).square().sum();
        const double var = ss / static_cast<double>(X.n() - 1);
        s.means(c) = mean;
        if (var <= 0.0 || std::sqrt(var) < 1e-12) {
            s.stds(c) = 1.0;
            s.constant[static_cast<std::size_t>(c)] = 1;
        } else {
            s.stds(c) = std::sqrt(var);
        }
    }
    return s;
}

/// Standardizes each column to zero mean and unit sample (n-1) std.
/// Constant columns are centered only and flagged.
inline FeatureMatrix standardize(const FeatureMatrix& X, const Scaler& scaler) {
    if (X.standardized) throw numeric_error("matrix is already standardized");
    FeatureMatrix out = X;
    out.values = scaler.transform(X.values);
    out.standardized = true;
    out.column_means = scaler.means;
    out.column_stds = scaler.stds;
    out.constant_columns = scaler.constant;
    out.validate();
    return out;
}

inline FeatureMatrix standardize(const FeatureMatrix& X) { return standardize(X, fit_scaler(X)); }

/// Bootstrap row indices: `sample_size` draws with replacement per resample.
/// Resample r uses an independent stream derived from (seed, r) so results
/// do not depend on how many resamples precede it.
inline std::vector<std::vector<Eigen::Index>> bootstrap_indices(Eigen::Index n, const BootstrapPlan& plan) {
    plan.validate();
    if (n <= 0) throw numeric_error("bootstrap over empty dataset");
    const Eigen::Index m = plan.sample_size > 0 ? plan.sample_size : n;
    std::vector<std::vector<Eigen::Index>> out(static_cast<std::size_t>(plan.num_resamples));
    for (int r = 0; r < plan.num_resamples; ++r) {
        rng::Engine eng(rng::derive_seed(plan.seed, static_cast<std::uint64_t>(r)));
        auto& idx = out[static_cast<std::size_t>(r)];
        idx.resize(static_cast<std::size_t>(m));
        for (Eigen::Index i = 0; i < m; ++i) {
            idx[static_cast<std::size_t>(i)] = static_cast<Eigen::Index>(eng.uniform_index(static_cast<std::uint64_t>(n)));
        }
    }
    return out;
}

struct TrainTestSplit {
    std::vector<Eigen::Index> train;
    std::vector<Eigen::Index> test;
};

/// Stratified shuffle split on a binary label.
inline TrainTestSplit train_test_split(const LabelVector& y, double test_fraction, std::uint64_t seed) {
    if (test_fraction <= 0.0 || test_fraction >= 1.0) throw numeric_error("test_fraction must be in (0,1)");
    std::vector<Eigen::Index> pos, neg;
    for (Eigen::Index i = 0; i < y.values.size(); ++i) {
        (y.values(i) == 1 ? pos : neg).push_back(i);
    }
    rng::Engine eng(rng::derive_seed(seed, 0x73706c6974ULL));
    rng::shuffle(pos, eng);
    rng::shuffle(neg, eng);
    TrainTestSplit split;
    auto take = [&](std::vector<Eigen::Index>& group) {
        const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(group.size())));
        for (std::size_t i = 0; i < group.size(); ++i) {
            (i < n_test ? split.test : split.train).push_back(group[i]);
        }
    };
    take(pos);
    take(neg);
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    if (split.train.empty() || split.test.empty()) throw numeric_error("degenerate train/test split");
    return split;
}

}  // namespace colaudit
