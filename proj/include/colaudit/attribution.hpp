#pragma once

#include "colaudit/model.hpp"
#include "colaudit/rng.hpp"
#include "colaudit/types.hpp"

#include <Eigen/Dense>

#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace colaudit {

enum class AttributionMethod { linear_exact, taylor, kernel_shap, brute_force };

inline const char* to_string(AttributionMethod m) {
    switch (m) {
        case AttributionMethod::linear_exact: return "linear_exact";
        case AttributionMethod::taylor: return "taylor";
        case AttributionMethod::kernel_shap: return "kernel_shap";
        case AttributionMethod::brute_force: return "brute_force";
    }
    return "?";
}

struct AttributionMatrix {
    Eigen::MatrixXd values;    // n x p
    Eigen::VectorXd baseline;  // length p
    AttributionMethod method = AttributionMethod::linear_exact;
    std::string model_ref;
    std::vector<std::string> column_names;

    Eigen::Index n() const { return values.rows(); }
    Eigen::Index p() const { return values.cols(); }

    void validate() const {
        if (values.cols() != baseline.size()) throw numeric_error("attribution baseline length mismatch");
        if (!values.allFinite()) throw numeric_error("attribution values not finite");
    }
};

struct KernelConfig {
    int num_coalitions = 2048;
    int background_size = 100;
    std::uint64_t seed = 0;

    void validate(Eigen::Index p) const {
        if (num_coalitions < p + 2) throw numeric_error("num_coalitions must be >= p + 2");
        if (background_size < 1) throw numeric_error("background_size must be positive");
    }
};

/// Slope coefficients of a linear-scale model: beta for linear_ols, the
/// single weight row for logistic (logit scale). The intercept is excluded;
/// it cancels in baseline-relative attributions.
inline Eigen::VectorXd linear_coefficients(const ModelParams& m) {
    if (m.kind == ModelKind::linear_ols) {
        return Eigen::Map<const Eigen::VectorXd>(m.weights.data(), static_cast<Eigen::Index>(m.weights.size()));
    }
    if (m.kind == ModelKind::logistic) {
        nn::Net net = unpack_net(m);
        return net.W[0].row(0).transpose();
    }
    throw numeric_error("linear coefficients undefined for mlp");
}

/// phi_i = beta_i * (x_i - mu_i). Logistic models are attributed on the
/// logit scale.
inline AttributionMatrix linear_shap(const ModelParams& m, const Eigen::MatrixXd& X_eval,
                                     const Eigen::VectorXd& baseline) {
    if (baseline.size() != X_eval.cols()) throw numeric_error("baseline length mismatch");
    Eigen::VectorXd beta = linear_coefficients(m);
    if (beta.size() != X_eval.cols()) throw numeric_error("linear_shap: feature count mismatch");
    AttributionMatrix A;
    A.values = (X_eval.rowwise() - baseline.transpose()).array().rowwise() * beta.transpose().array();
    A.baseline = baseline;
    A.method = AttributionMethod::linear_exact;
    A.model_ref = to_string(m.kind);
    A.column_names = m.feature_names;
    A.validate();
    return A;
}

/// phi_i = (df/dx_i)|_x * (x_i - mu_i) with the analytic gradient; logit
/// scale by default, probability scale by flag.
inline AttributionMatrix taylor_attribution(const ModelParams& m, const Eigen::MatrixXd& X_eval,
                                            const Eigen::VectorXd& baseline, bool probability_scale = false) {
    if (baseline.size() != X_eval.cols()) throw numeric_error("baseline length mismatch");
    Eigen::MatrixXd grad = input_gradient(m, X_eval, probability_scale);
    AttributionMatrix A;
    A.values = grad.array() * (X_eval.rowwise() - baseline.transpose()).array();
    A.baseline = baseline;
    A.method = AttributionMethod::taylor;
    A.model_ref = to_string(m.kind);
    A.column_names = m.feature_names;
    A.validate();
    return A;
}

namespace detail {

inline double shapley_kernel_weight(Eigen::Index p, Eigen::Index s) {
    // (p-1) / (C(p,s) * s * (p-s))
    double binom = 1.0;
    for (Eigen::Index k = 1; k <= s; ++k) {
        binom *= static_cast<double>(p - s + k) / static_cast<double>(k);
    }
    return static_cast<double>(p - 1) / (binom * static_cast<double>(s) * static_cast<double>(p - s));
}

/// Solves the kernel-SHAP weighted least squares for one instance with the
/// efficiency constraint folded in by eliminating the last feature.
inline bool solve_kernel_system(const std::vector<std::vector<char>>& masks, const std::vector<double>& weights,
                                const std::vector<double>& values, double base, double delta, Eigen::Index p,
                                Eigen::VectorXd& phi_out) {
    const auto m_rows = static_cast<Eigen::Index>(masks.size());
    Eigen::MatrixXd B(m_rows, p - 1);
    Eigen::VectorXd r(m_rows);
    for (Eigen::Index k = 0; k < m_rows; ++k) {
        const auto& z = masks[static_cast<std::size_t>(k)];
        const double z_last = z[static_cast<std::size_t>(p - 1)] ? 1.0 : 0.0;
        for (Eigen::Index i = 0; i < p - 1; ++i) {
            B(k, i) = (z[static_cast<std::size_t>(i)] ? 1.0 : 0.0) - z_last;
        }
        r(k) = values[static_cast<std::size_t>(k)] - base - z_last * delta;
        const double sw = std::sqrt(weights[static_cast<std::size_t>(k)]);
        B.row(k) *= sw;
        r(k) *= sw;
    }
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(B);
    if (cod.rank() < p - 1) return false;
    Eigen::VectorXd head = cod.solve(r);
    phi_out.resize(p);
    phi_out.head(p - 1) = head;
    phi_out(p - 1) = delta - head.sum();
    return true;
}

}  // namespace detail

/// Kernel SHAP with marginal (background-mean) imputation. Full coalition
/// enumeration when the budget covers it; otherwise coalitions are sampled
/// from the Shapley-kernel distribution.
inline AttributionMatrix kernel_shap(const ModelParams& m, const Eigen::MatrixXd& X_eval,
                                     const Eigen::MatrixXd& background, const KernelConfig& cfg) {
    const Eigen::Index p = X_eval.cols();
    if (p < 1) throw numeric_error("kernel_shap needs at least one feature");
    if (background.rows() < 1) throw numeric_error("kernel_shap needs a nonempty background");
    if (background.cols() != p) throw numeric_error("background feature count mismatch");
    cfg.validate(p);

    Eigen::MatrixXd bg = background;
    if (bg.rows() > cfg.background_size) {
        rng::Engine eng(rng::derive_seed(cfg.seed, 0x6267ULL));
        Eigen::MatrixXd sub(cfg.background_size, p);
        std::vector<Eigen::Index> idx(static_cast<std::size_t>(bg.rows()));
        for (Eigen::Index i = 0; i < bg.rows(); ++i) idx[static_cast<std::size_t>(i)] = i;
        for (int i = 0; i < cfg.background_size; ++i) {
            const auto j = i + static_cast<Eigen::Index>(eng.uniform_index(static_cast<std::uint64_t>(bg.rows() - i)));
            std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
            sub.row(i) = bg.row(idx[static_cast<std::size_t>(i)]);
        }
        bg = std::move(sub);
    }
    const Eigen::VectorXd mu = bg.colwise().mean();

    auto f_point = [&](const Eigen::VectorXd& x) {
        Eigen::MatrixXd row(1, p);
        row.row(0) = x.transpose();
        return predict_proba(m, row)(0);
    };
    const double base = f_point(mu);

    const bool full_enum = p <= 24 && static_cast<double>(cfg.num_coalitions) >= std::ldexp(1.0, static_cast<int>(p)) - 2.0;

    AttributionMatrix A;
    A.values.resize(X_eval.rows(), p);
    A.baseline = mu;
    A.method = AttributionMethod::kernel_shap;
    A.model_ref = to_string(m.kind);
    A.column_names = m.feature_names;

    for (Eigen::Index e = 0; e < X_eval.rows(); ++e) {
        const Eigen::VectorXd x = X_eval.row(e).transpose();
        const double fx = f_point(x);
        const double delta = fx - base;
        if (p == 1) {
            A.values(e, 0) = delta;
            continue;
        }

        for (int attempt = 0;; ++attempt) {
            rng::Engine eng(rng::derive_seed(cfg.seed, 0x6b73ULL + 7919ULL * static_cast<std::uint64_t>(e) +
                                                           static_cast<std::uint64_t>(attempt)));
            std::vector<std::vector<char>> masks;
            std::vector<double> weights;
            if (full_enum) {
                const auto total = static_cast<std::uint64_t>(1) << p;
                for (std::uint64_t mask = 1; mask + 1 < total; ++mask) {
                    std::vector<char> z(static_cast<std::size_t>(p), 0);
                    for (Eigen::Index i = 0; i < p; ++i) z[static_cast<std::size_t>(i)] = (mask >> i) & 1u;
                    masks.push_back(std::move(z));
                    weights.push_back(detail::shapley_kernel_weight(p, std::popcount(mask)));
                }
            } else {
                std::vector<double> size_cdf(static_cast<std::size_t>(p - 1));
                double acc = 0.0;
                for (Eigen::Index s = 1; s <= p - 1; ++s) {
                    acc += 1.0 / (static_cast<double>(s) * static_cast<double>(p - s));
                    size_cdf[static_cast<std::size_t>(s - 1)] = acc;
                }
                std::vector<Eigen::Index> pool(static_cast<std::size_t>(p));
                for (int k = 0; k < cfg.num_coalitions; ++k) {
                    const double u = eng.uniform01() * acc;
                    Eigen::Index s = 1;
                    while (s < p - 1 && u > size_cdf[static_cast<std::size_t>(s - 1)]) ++s;
                    for (Eigen::Index i = 0; i < p; ++i) pool[static_cast<std::size_t>(i)] = i;
                    std::vector<char> z(static_cast<std::size_t>(p), 0);
                    for (Eigen::Index i = 0; i < s; ++i) {
                        const auto j = i + static_cast<Eigen::Index>(eng.uniform_index(static_cast<std::uint64_t>(p - i)));
                        std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
                        z[static_cast<std::size_t>(pool[static_cast<std::size_t>(i)])] = 1;
                    }
                    masks.push_back(std::move(z));
                    weights.push_back(1.0);
                }
            }

            std::vector<double> values(masks.size());
            Eigen::VectorXd synth = mu;
            for (std::size_t k = 0; k < masks.size(); ++k) {
                for (Eigen::Index i = 0; i < p; ++i) {
                    synth(i) = masks[k][static_cast<std::size_t>(i)] ? x(i) : mu(i);
                }
                values[k] = f_point(synth);
            }

            Eigen::VectorXd phi;
            if (detail::solve_kernel_system(masks, weights, values, base, delta, p, phi)) {
                A.values.row(e) = phi.transpose();
                break;
            }
            if (attempt >= 1) throw numeric_error("kernel_shap: singular coalition design after retry");
            if (full_enum) throw numeric_error("kernel_shap: singular coalition design under full enumeration");
        }
    }
    A.validate();
    return A;
}

/// Exact Shapley values by full coalition enumeration (p <= 12). Masked
/// features are set to the baseline.
inline Eigen::VectorXd brute_force_shapley(const std::function<double(const Eigen::VectorXd&)>& f,
                                           const Eigen::VectorXd& x, const Eigen::VectorXd& baseline) {
    const Eigen::Index p = x.size();
    if (p < 1) throw numeric_error("brute_force_shapley needs at least one feature");
    if (p > 12) throw numeric_error("brute_force_shapley limited to p <= 12");
    if (baseline.size() != p) throw numeric_error("baseline length mismatch");

    const std::uint64_t total = std::uint64_t{1} << p;
    std::vector<double> v(total);
    Eigen::VectorXd synth = baseline;
    for (std::uint64_t mask = 0; mask < total; ++mask) {
        for (Eigen::Index i = 0; i < p; ++i) {
            synth(i) = (mask >> i) & 1u ? x(i) : baseline(i);
        }
        v[mask] = f(synth);
    }

    std::vector<double> fact(static_cast<std::size_t>(p + 1), 1.0);
    for (std::size_t k = 1; k < fact.size(); ++k) fact[k] = fact[k - 1] * static_cast<double>(k);

    Eigen::VectorXd phi = Eigen::VectorXd::Zero(p);
    for (Eigen::Index i = 0; i < p; ++i) {
        const std::uint64_t bit = std::uint64_t{1} << i;
        for (std::uint64_t mask = 0; mask < total; ++mask) {
            if (mask & bit) continue;
            const int s = std::popcount(mask);
            const double w = fact[static_cast<std::size_t>(s)] * fact[static_cast<std::size_t>(p - s - 1)] /
                             fact[static_cast<std::size_t>(p)];
            phi(i) += w * (v[mask | bit] - v[mask]);
        }
    }
    return phi;
}

inline Eigen::VectorXd brute_force_shapley(const ModelParams& m, const Eigen::VectorXd& x,
                                           const Eigen::VectorXd& baseline) {
    if (x.size() != m.input_dim()) throw numeric_error("brute_force_shapley: feature count mismatch");
    auto f = [&](const Eigen::VectorXd& point) {
        Eigen::MatrixXd row(1, point.size());
        row.row(0) = point.transpose();
        return predict_proba(m, row)(0);
    };
    return brute_force_shapley(f, x, baseline);
}

}  // namespace colaudit
