#pragma once

#include "colaudit/model.hpp"
#include "colaudit/rng.hpp"
#include "colaudit/types.hpp"

#include <Eigen/Dense>

#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace colaudit {

/// Controlled-collinearity Gaussian generator for a homoscedastic linear
/// response y = X beta + noise.
struct SyntheticSpec {
    Eigen::Index n = 1000;
    Eigen::Index p = 2;
    std::vector<std::tuple<Eigen::Index, Eigen::Index, double>> correlation_targets;  // (i, j, rho)
    Eigen::MatrixXd target_correlation;  // full matrix; overrides pairs when set
    double noise_sigma = 1.0;
    Eigen::VectorXd beta_true;
    std::uint64_t seed = 0;

    Eigen::MatrixXd resolve_target() const {
        if (target_correlation.size() > 0) {
            if (target_correlation.rows() != p || target_correlation.cols() != p) {
                throw numeric_error("target correlation matrix shape mismatch");
            }
            return target_correlation;
        }
        Eigen::MatrixXd C = Eigen::MatrixXd::Identity(p, p);
        for (const auto& [i, j, rho] : correlation_targets) {
            if (i < 0 || j < 0 || i >= p || j >= p || i == j) throw numeric_error("bad correlation target indices");
            C(i, j) = rho;
            C(j, i) = rho;
        }
        return C;
    }

    void validate() const {
        if (n < 2 || p < 1) throw numeric_error("synthetic spec needs n >= 2, p >= 1");
        if (noise_sigma < 0.0) throw numeric_error("noise sigma must be nonnegative");
        if (beta_true.size() != p) throw numeric_error("beta_true length must equal p");
    }
};

/// Draws correlated Gaussian features via a factor of the target matrix
/// (Cholesky, falling back to an eigendecomposition for the PSD boundary).
inline std::pair<FeatureMatrix, Eigen::VectorXd> generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    Eigen::MatrixXd C = spec.resolve_target();

    Eigen::MatrixXd factor;
    Eigen::LLT<Eigen::MatrixXd> llt(C);
    if (llt.info() == Eigen::Success) {
        factor = llt.matrixL();
    } else {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
        if (es.eigenvalues().minCoeff() < -1e-10) throw numeric_error("target correlation matrix not PSD");
        Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
        factor = es.eigenvectors() * ev.asDiagonal();
    }

    rng::Engine eng(rng::derive_seed(spec.seed, 0x73796eULL));
    Eigen::MatrixXd Z(spec.n, spec.p);
    for (Eigen::Index r = 0; r < spec.n; ++r) {
        for (Eigen::Index c = 0; c < spec.p; ++c) Z(r, c) = eng.normal();
    }

    FeatureMatrix X;
    X.values = Z * factor.transpose();
    for (Eigen::Index c = 0; c < spec.p; ++c) X.column_names.push_back("x" + std::to_string(c));
    X.column_kinds.assign(static_cast<std::size_t>(spec.p), {ColumnKind::numeric, ""});
    X.constant_columns.assign(static_cast<std::size_t>(spec.p), 0);

    Eigen::VectorXd y = X.values * spec.beta_true;
    if (spec.noise_sigma > 0.0) {
        for (Eigen::Index r = 0; r < spec.n; ++r) y(r) += spec.noise_sigma * eng.normal();
    }
    X.validate();
    return {std::move(X), std::move(y)};
}

/// Binary classification task with latent-factor collinear clusters: each
/// cluster member is its factor plus small independent noise, so members are
/// mutually redundant carriers of the same signal.
struct CollinearTaskSpec {
    Eigen::Index n = 1000;
    std::vector<Eigen::Index> cluster_sizes;  // e.g. {4, 4, 4}
    Eigen::Index independent_features = 18;
    double within_cluster_noise = 0.05;
    std::uint64_t seed = 0;
};

struct CollinearTask {
    FeatureMatrix X;
    LabelVector y;
    std::vector<std::vector<Eigen::Index>> true_clusters;  // collinear groups only
    Eigen::VectorXd factor_weights;
    Eigen::VectorXd independent_weights;
};

inline CollinearTask make_collinear_classification(const CollinearTaskSpec& spec) {
    if (spec.n < 4) throw numeric_error("collinear task needs n >= 4");
    const auto num_factors = static_cast<Eigen::Index>(spec.cluster_sizes.size());
    Eigen::Index p = spec.independent_features;
    for (Eigen::Index sz : spec.cluster_sizes) {
        if (sz < 1) throw numeric_error("cluster sizes must be positive");
        p += sz;
    }
    if (p < 1) throw numeric_error("collinear task needs at least one feature");

    rng::Engine eng(rng::derive_seed(spec.seed, 0x636c7573ULL));

    Eigen::MatrixXd factors(spec.n, std::max<Eigen::Index>(num_factors, 1));
    for (Eigen::Index r = 0; r < spec.n; ++r) {
        for (Eigen::Index f = 0; f < num_factors; ++f) factors(r, f) = eng.normal();
    }

    CollinearTask task;
    task.X.values.resize(spec.n, p);
    Eigen::Index col = 0;
    for (Eigen::Index f = 0; f < num_factors; ++f) {
        std::vector<Eigen::Index> group;
        for (Eigen::Index k = 0; k < spec.cluster_sizes[static_cast<std::size_t>(f)]; ++k, ++col) {
            for (Eigen::Index r = 0; r < spec.n; ++r) {
                task.X.values(r, col) = factors(r, f) + spec.within_cluster_noise * eng.normal();
            }
            task.X.column_names.push_back("c" + std::to_string(f) + "_m" + std::to_string(k));
            group.push_back(col);
        }
        task.true_clusters.push_back(std::move(group));
    }
    for (Eigen::Index j = 0; j < spec.independent_features; ++j, ++col) {
        for (Eigen::Index r = 0; r < spec.n; ++r) task.X.values(r, col) = eng.normal();
        task.X.column_names.push_back("ind" + std::to_string(j));
    }
    task.X.column_kinds.assign(static_cast<std::size_t>(p), {ColumnKind::numeric, ""});
    task.X.constant_columns.assign(static_cast<std::size_t>(p), 0);

    task.factor_weights.resize(std::max<Eigen::Index>(num_factors, 0));
    for (Eigen::Index f = 0; f < num_factors; ++f) {
        const double mag = 1.0 + eng.uniform01();  // in [1, 2)
        task.factor_weights(f) = (f % 2 == 0 ? mag : -mag);
    }
    task.independent_weights.resize(spec.independent_features);
    for (Eigen::Index j = 0; j < spec.independent_features; ++j) {
        const double mag = 0.2 + 0.8 * eng.uniform01();
        task.independent_weights(j) = (j % 2 == 0 ? mag : -mag);
    }

    task.y.values.resize(spec.n);
    for (Eigen::Index r = 0; r < spec.n; ++r) {
        double logit = 0.0;
        for (Eigen::Index f = 0; f < num_factors; ++f) logit += task.factor_weights(f) * factors(r, f);
        Eigen::Index ind0 = p - spec.independent_features;
        for (Eigen::Index j = 0; j < spec.independent_features; ++j) {
            logit += task.independent_weights(j) * task.X.values(r, ind0 + j);
        }
        task.y.values(r) = eng.uniform01() < nn::sigmoid(logit) ? 1 : 0;
    }

    task.X.validate();
    return task;
}

/// Two linearly separable Gaussian blobs; sanity task for classifiers.
inline std::pair<FeatureMatrix, LabelVector> make_separable_blobs(Eigen::Index n, double gap, std::uint64_t seed) {
    if (n < 2) throw numeric_error("blobs need n >= 2");
    rng::Engine eng(rng::derive_seed(seed, 0x626c6f62ULL));
    FeatureMatrix X;
    X.values.resize(n, 2);
    X.column_names = {"u", "v"};
    X.column_kinds.assign(2, {ColumnKind::numeric, ""});
    X.constant_columns.assign(2, 0);
    LabelVector y;
    y.values.resize(n);
    for (Eigen::Index r = 0; r < n; ++r) {
        const int label = r % 2;
        const double cx = label == 1 ? gap : -gap;
        X.values(r, 0) = cx + 0.5 * eng.normal();
        X.values(r, 1) = (label == 1 ? gap : -gap) + 0.5 * eng.normal();
        y.values(r) = label;
    }
    return {std::move(X), std::move(y)};
}

}  // namespace colaudit
