#pragma once

#include "colaudit/attribution.hpp"
#include "colaudit/audit.hpp"
#include "colaudit/fragility.hpp"
#include "colaudit/model.hpp"
#include "colaudit/synthetic.hpp"
#include "colaudit/types.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace colaudit {

/// Spearman rank correlation with midranks for ties.
inline double spearman(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const Eigen::Index n = a.size();
    if (n != b.size() || n < 2) throw numeric_error("spearman needs two equal-length vectors, n >= 2");
    auto ranks = [n](const Eigen::VectorXd& v) {
        std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), Eigen::Index{0});
        std::sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) { return v(x) < v(y); });
        Eigen::VectorXd r(n);
        std::size_t i = 0;
        while (i < order.size()) {
            std::size_t j = i;
            while (j + 1 < order.size() && v(order[j + 1]) == v(order[i])) ++j;
            const double mid = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
            for (std::size_t k = i; k <= j; ++k) r(order[k]) = mid;
            i = j + 1;
        }
        return r;
    };
    Eigen::VectorXd ra = ranks(a), rb = ranks(b);
    const double ma = ra.mean(), mb = rb.mean();
    const double cov = ((ra.array() - ma) * (rb.array() - mb)).sum();
    const double sa = std::sqrt((ra.array() - ma).square().sum());
    const double sb = std::sqrt((rb.array() - mb).square().sum());
    if (sa == 0.0 || sb == 0.0) throw numeric_error("spearman undefined for constant input");
    return cov / (sa * sb);
}

/// Both sides of the Part-B style variance identity, evaluated on the
/// centered design: Gram-inverse diagonal vs regression VIF over the
/// centered sum of squares.
struct VarianceIdentityResult {
    Eigen::VectorXd gram_vif;        // (Xc^T Xc)^{-1}_{ii} * S_ii
    Eigen::VectorXd regression_vif;  // audit-module VIF
    Eigen::VectorXd gram_variance;   // sigma^2 * (Xc^T Xc)^{-1}_{ii}
    Eigen::VectorXd vif_variance;    // sigma^2 * VIF_i / S_ii
    double max_rel_error = 0.0;      // between the two VIF reconstructions
};

inline VarianceIdentityResult ols_variance_identity_check(const FeatureMatrix& X, double sigma) {
    const Eigen::Index p = X.p();
    if (p < 2) throw numeric_error("identity check needs at least 2 features");
    Eigen::MatrixXd Xc = X.values.rowwise() - X.values.colwise().mean();
    Eigen::MatrixXd gram = Xc.transpose() * Xc;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(gram);
    if (!lu.isInvertible()) throw numeric_error("singular design: variance identity undefined");
    Eigen::MatrixXd inv = lu.inverse();

    VifTable table = vif(X);

    VarianceIdentityResult res;
    res.gram_vif.resize(p);
    res.regression_vif.resize(p);
    res.gram_variance.resize(p);
    res.vif_variance.resize(p);
    for (Eigen::Index i = 0; i < p; ++i) {
        const double s_ii = Xc.col(i).squaredNorm();
        const auto& entry = table.entries[static_cast<std::size_t>(i)];
        if (entry.status == VifStatus::infinite) throw numeric_error("singular design: infinite VIF");
        res.gram_vif(i) = inv(i, i) * s_ii;
        res.regression_vif(i) = entry.vif;
        res.gram_variance(i) = sigma * sigma * inv(i, i);
        res.vif_variance(i) = sigma * sigma * entry.vif / s_ii;
        const double rel = std::abs(res.gram_vif(i) - res.regression_vif(i)) / res.regression_vif(i);
        res.max_rel_error = std::max(res.max_rel_error, rel);
    }
    return res;
}

struct TheoremPointRecord {
    double rho_target = 0.0;
    Eigen::Index feature = 0;
    double vif = 1.0;
    double var_phi = 0.0;   // bootstrap variance of phi at x*
    double predicted = 0.0; // sigma^2 (x*_i - mu_i)^2 VIF_i / S_ii
};

struct TheoremCheckReport {
    std::vector<TheoremPointRecord> points;
    std::vector<double> rho_grid;
    Eigen::VectorXd tracked_vif;   // feature 0 across the grid
    Eigen::VectorXd tracked_var;
    double c_hat = 0.0;            // through-origin slope of var_phi on (VIF - 1)
    double spearman_vif_var = 0.0;
    int bound_violations = 0;      // var < 0.8 * c_hat * (VIF - 1)
    bool monotone_tracked = false; // tracked var strictly increases along the grid
    double max_ratio_to_predicted = 0.0;
};

/// Empirical variance-bound validation: for each grid rho, bootstrap OLS +
/// exact linear SHAP at a fixed x* and compare attribution variance against
/// both the analytic expression and the fitted lower bound.
inline TheoremCheckReport variance_bound_experiment(const std::vector<double>& rho_grid, SyntheticSpec tmpl,
                                                    const BootstrapPlan& plan) {
    if (rho_grid.empty()) throw numeric_error("rho grid must be nonempty");
    for (double rho : rho_grid) {
        if (rho < 0.0 || rho >= 1.0) throw numeric_error("each grid rho must lie in [0,1)");
    }
    tmpl.validate();
    if (tmpl.p < 2) throw numeric_error("variance bound experiment needs p >= 2");

    TheoremCheckReport report;
    report.rho_grid = rho_grid;
    report.tracked_vif.resize(static_cast<Eigen::Index>(rho_grid.size()));
    report.tracked_var.resize(static_cast<Eigen::Index>(rho_grid.size()));

    for (std::size_t g = 0; g < rho_grid.size(); ++g) {
        SyntheticSpec spec = tmpl;
        spec.correlation_targets = {{0, 1, rho_grid[g]}};
        spec.target_correlation.resize(0, 0);
        spec.seed = rng::derive_seed(tmpl.seed, 0x67726964ULL + g);
        auto [X, y] = generate_synthetic(spec);

        VifTable table = vif(X);
        const Eigen::VectorXd mu = X.values.colwise().mean();
        Eigen::MatrixXd x_star(1, spec.p);
        x_star.row(0) = (mu.array() + 1.0).matrix().transpose();

        BootstrapSpec bspec;
        bspec.retrain = [&X, &y](const std::vector<Eigen::Index>& rows, std::uint64_t) {
            Eigen::MatrixXd Xr(static_cast<Eigen::Index>(rows.size()), X.p());
            Eigen::VectorXd yr(static_cast<Eigen::Index>(rows.size()));
            for (std::size_t i = 0; i < rows.size(); ++i) {
                Xr.row(static_cast<Eigen::Index>(i)) = X.values.row(rows[i]);
                yr(static_cast<Eigen::Index>(i)) = y(rows[i]);
            }
            return fit_ols(Xr, yr, X.column_names);
        };
        bspec.attribute = [&x_star, &mu](const ModelParams& m) { return linear_shap(m, x_star, mu); };

        BootstrapPlan grid_plan = plan;
        grid_plan.seed = rng::derive_seed(plan.seed, 0x626f6f74ULL + g);
        if (grid_plan.sample_size <= 0) grid_plan.sample_size = X.n();
        auto samples = bootstrap_attributions(X.n(), bspec, grid_plan);
        FragilityReport frag = fragility_scores(samples);

        for (Eigen::Index i = 0; i < spec.p; ++i) {
            TheoremPointRecord rec;
            rec.rho_target = rho_grid[g];
            rec.feature = i;
            rec.vif = table.entries[static_cast<std::size_t>(i)].vif;
            rec.var_phi = frag.var_phi(i);
            const double s_ii = (X.values.col(i).array() - mu(i)).square().sum();
            const double dx = x_star(0, i) - mu(i);
            rec.predicted = spec.noise_sigma * spec.noise_sigma * dx * dx * rec.vif / s_ii;
            report.points.push_back(rec);
            if (i == 0) {
                report.tracked_vif(static_cast<Eigen::Index>(g)) = rec.vif;
                report.tracked_var(static_cast<Eigen::Index>(g)) = rec.var_phi;
            }
        }
    }

    double num = 0.0, den = 0.0;
    for (const auto& rec : report.points) {
        if (rec.vif > 1.05) {
            num += rec.var_phi * (rec.vif - 1.0);
            den += (rec.vif - 1.0) * (rec.vif - 1.0);
        }
    }
    report.c_hat = den > 0.0 ? num / den : 0.0;

    for (const auto& rec : report.points) {
        if (rec.vif > 1.05 && rec.var_phi < 0.8 * report.c_hat * (rec.vif - 1.0)) ++report.bound_violations;
        const double ratio = std::max(rec.var_phi / rec.predicted, rec.predicted / rec.var_phi);
        report.max_ratio_to_predicted = std::max(report.max_ratio_to_predicted, ratio);
    }

    report.monotone_tracked = true;
    for (Eigen::Index g = 0; g + 1 < report.tracked_var.size(); ++g) {
        if (report.tracked_var(g + 1) <= report.tracked_var(g)) report.monotone_tracked = false;
    }
    if (report.tracked_vif.size() >= 2) {
        report.spearman_vif_var = spearman(report.tracked_vif, report.tracked_var);
    }
    return report;
}

/// Exactly collinear 3-column design (c = a + b) over dyadic values so the
/// dependence holds bit-exactly in floating point.
inline FeatureMatrix build_exact_collinear(Eigen::Index n, std::uint64_t seed) {
    if (n < 4) throw numeric_error("exact collinear design needs n >= 4");
    rng::Engine eng(rng::derive_seed(seed, 0x657861ULL));
    FeatureMatrix X;
    X.values.resize(n, 3);
    X.column_names = {"a", "b", "c"};
    X.column_kinds.assign(3, {ColumnKind::numeric, ""});
    X.constant_columns.assign(3, 0);
    for (Eigen::Index r = 0; r < n; ++r) {
        const double a = (static_cast<double>(eng.uniform_index(33)) - 16.0) / 8.0;
        const double b = (static_cast<double>(eng.uniform_index(33)) - 16.0) / 8.0;
        X.values(r, 0) = a;
        X.values(r, 1) = b;
        X.values(r, 2) = a + b;
    }
    return X;
}

struct NonIdentifiabilityResult {
    double gamma_residual = 0.0;        // ||X gamma|| / ||X||_F
    double max_prediction_delta = 0.0;  // over t in {-1, 1, 10}
    double max_attribution_delta = 0.0;
    double max_attribution_error = 0.0; // |observed delta - t*gamma_i*(x*_i - mu_i)|
};

/// Part-A style construction: beta and beta + t*gamma predict identically
/// while their baseline-relative attributions differ by t*gamma_i*(x*_i-mu_i).
inline NonIdentifiabilityResult non_identifiability_check(Eigen::Index n = 64, std::uint64_t seed = 0) {
    FeatureMatrix X = build_exact_collinear(n, seed);
    Eigen::Vector3d gamma(-1.0, -1.0, 1.0);  // X*gamma = c - a - b = 0
    Eigen::Vector3d beta(1.0, 0.5, 0.25);

    NonIdentifiabilityResult res;
    res.gamma_residual = (X.values * gamma).norm() / X.values.norm();

    const Eigen::VectorXd mu = X.values.colwise().mean();
    Eigen::MatrixXd x_star(1, 3);
    x_star.row(0) = (mu + Eigen::Vector3d(1.0, 1.0, 2.0)).transpose();

    ModelParams base;
    base.kind = ModelKind::linear_ols;
    base.weights = {beta(0), beta(1), beta(2)};
    base.feature_names = X.column_names;
    AttributionMatrix phi_base = linear_shap(base, x_star, mu);
    Eigen::VectorXd pred_base = X.values * beta;

    for (double t : {-1.0, 1.0, 10.0}) {
        Eigen::Vector3d shifted = beta + t * gamma;
        ModelParams m;
        m.kind = ModelKind::linear_ols;
        m.weights = {shifted(0), shifted(1), shifted(2)};
        m.feature_names = X.column_names;

        const double pred_delta = (X.values * shifted - pred_base).cwiseAbs().maxCoeff();
        res.max_prediction_delta = std::max(res.max_prediction_delta, pred_delta);

        AttributionMatrix phi = linear_shap(m, x_star, mu);
        for (Eigen::Index i = 0; i < 3; ++i) {
            const double observed = phi.values(0, i) - phi_base.values(0, i);
            const double expected = t * gamma(i) * (x_star(0, i) - mu(i));
            res.max_attribution_delta = std::max(res.max_attribution_delta, std::abs(observed));
            res.max_attribution_error = std::max(res.max_attribution_error, std::abs(observed - expected));
        }
    }
    return res;
}

}  // namespace colaudit
