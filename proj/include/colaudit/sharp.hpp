#pragma once

#include "colaudit/fragility.hpp"
#include "colaudit/model.hpp"
#include "colaudit/rng.hpp"
#include "colaudit/types.hpp"

#include <chrono>
#include <cmath>
#include <string>
#include <vector>

namespace colaudit {

struct SharpConfig {
    double lambda = 0.0;
    int fragility_interval = 1;  // k: penalty active on epochs with (epoch+1) % k == 0
    int penalty_resamples = 2;   // counts the theta sample plus the temporary refits
    int inner_steps = 1;         // gradient steps for each temporary refit
    TrainConfig base;
    double epsilon = 1e-8;
    bool once_per_epoch = false;  // evaluate the penalty on the first batch of a gated epoch only

    void validate() const {
        base.validate();
        if (lambda < 0.0) throw numeric_error("lambda must be nonnegative");
        if (fragility_interval < 1) throw numeric_error("fragility_interval must be positive");
        if (penalty_resamples < 2) throw numeric_error("penalty_resamples must be >= 2");
        if (inner_steps < 1) throw numeric_error("inner_steps must be positive");
    }
};

namespace detail {

constexpr std::uint64_t kSharpStream = 0x7368617270ULL;

/// Gradient of the batch fragility penalty with respect to theta, flowing
/// only through the theta-branch attributions. `phi` holds the attribution
/// samples (phi[0] under theta), `T` receives the per-entry input tangents
/// a(e,i)*(x_ei - mu_i) so the caller can run the forward-over-reverse pass.
inline double penalty_value_and_tangent(const std::vector<Eigen::MatrixXd>& phi, const Eigen::MatrixXd& Xb,
                                        const Eigen::VectorXd& mu, double epsilon, Eigen::MatrixXd& T) {
    const auto R = static_cast<double>(phi.size());
    const Eigen::Index m = phi[0].rows();
    const Eigen::Index p = phi[0].cols();

    Eigen::MatrixXd mean_phi = Eigen::MatrixXd::Zero(m, p);
    for (const auto& s : phi) mean_phi += s;
    mean_phi /= R;

    double penalty = 0.0;
    T.setZero(m, p);
    for (Eigen::Index i = 0; i < p; ++i) {
        double var_sum = 0.0;
        double abs_sum = 0.0;
        for (Eigen::Index e = 0; e < m; ++e) {
            for (const auto& s : phi) {
                const double d = s(e, i) - mean_phi(e, i);
                var_sum += d * d;
                abs_sum += std::abs(s(e, i));
            }
        }
        const double var_i = var_sum / (R - 1.0) / static_cast<double>(m);
        const double mean_abs_i = abs_sum / (R * static_cast<double>(m));
        const double denom = mean_abs_i + epsilon;
        const double score_i = var_i / denom;
        penalty += score_i;

        for (Eigen::Index e = 0; e < m; ++e) {
            const double dvar = 2.0 * (phi[0](e, i) - mean_phi(e, i)) / (R - 1.0) / static_cast<double>(m);
            const double sign = phi[0](e, i) > 0.0 ? 1.0 : (phi[0](e, i) < 0.0 ? -1.0 : 0.0);
            const double dmean_abs = sign / (R * static_cast<double>(m));
            const double dscore = dvar / denom - var_i * dmean_abs / (denom * denom);
            T(e, i) = dscore / static_cast<double>(p) * (Xb(e, i) - mu(i));
        }
    }
    return penalty / static_cast<double>(p);
}

/// Reverse pass of J(theta) = sum_e <grad_x logit(x_e), t_e>, computed via
/// the input-tangent forward pass then backpropagating into the weights.
inline nn::Grads tangent_dot_grads(const nn::Net& net, const Eigen::MatrixXd& X, const Eigen::MatrixXd& T) {
    const std::size_t L = net.layers() - 1;
    std::vector<Eigen::MatrixXd> A{X};
    std::vector<Eigen::MatrixXd> Adot{T};
    std::vector<Eigen::MatrixXd> Zdot;
    for (std::size_t l = 0; l < L; ++l) {
        Eigen::MatrixXd Z = (A.back() * net.W[l].transpose()).rowwise() + net.b[l].transpose();
        Eigen::MatrixXd Zd = Adot.back() * net.W[l].transpose();
        Eigen::MatrixXd Al = Z.array().tanh().matrix();
        Adot.push_back(((1.0 - Al.array().square()) * Zd.array()).matrix());
        Zdot.push_back(std::move(Zd));
        A.push_back(std::move(Al));
    }

    nn::Grads g = nn::Grads::zeros_like(net);
    const Eigen::Index m = X.rows();
    // J = sum(zdot) with zdot = Adot[L] * W[L]^T; adjoint of zdot is ones.
    Eigen::MatrixXd zdot_bar = Eigen::MatrixXd::Ones(m, 1);
    g.W[L] = zdot_bar.transpose() * Adot[L];
    Eigen::MatrixXd Adot_bar = zdot_bar * net.W[L];
    Eigen::MatrixXd A_bar = Eigen::MatrixXd::Zero(m, net.W[L].cols());

    for (std::size_t l = L; l-- > 0;) {
        const Eigen::MatrixXd& Al = A[l + 1];
        const Eigen::ArrayXXd sech2 = 1.0 - Al.array().square();
        // Adot[l+1] = sech2 .* Zdot[l]
        Eigen::MatrixXd Zdot_bar = (Adot_bar.array() * sech2).matrix();
        A_bar += (Adot_bar.array() * Zdot[l].array() * (-2.0 * Al.array())).matrix();
        // A[l+1] = tanh(Z[l])
        Eigen::MatrixXd Z_bar = (A_bar.array() * sech2).matrix();
        // Z[l] = A[l] W[l]^T + b[l];  Zdot[l] = Adot[l] W[l]^T
        g.W[l] += Z_bar.transpose() * A[l] + Zdot_bar.transpose() * Adot[l];
        g.b[l] += Z_bar.colwise().sum().transpose();
        if (l == 0) break;
        Adot_bar = Zdot_bar * net.W[l];
        A_bar = Z_bar * net.W[l];
    }
    return g;
}

}  // namespace detail

struct SharpLog {
    TrainLog train;
    std::vector<double> penalty_values;  // one per penalty evaluation
    int penalty_evaluations = 0;
};

/// Algorithm-2-style trainer: on gated epochs each batch pays a fragility
/// penalty comparing Taylor attributions under theta against attributions
/// under temporary parameters refit on a bootstrap of the batch.
inline ModelParams train_sharp(const Eigen::MatrixXd& X, const Eigen::VectorXi& y,
                               const std::vector<Eigen::Index>& hidden, const SharpConfig& cfg,
                               const std::vector<std::string>& feature_names = {}, SharpLog* log = nullptr) {
    cfg.validate();
    const Eigen::VectorXd mu = X.colwise().mean();

    BatchHook hook = nullptr;
    if (cfg.lambda > 0.0) {
        hook = [&cfg, &mu, log](BatchEvent& ev) {
            if ((ev.epoch + 1) % cfg.fragility_interval != 0) return;
            if (cfg.once_per_epoch && ev.batch != 0) return;

            const Eigen::MatrixXd& Xb = *ev.Xb;
            const Eigen::VectorXi& yb = *ev.yb;
            const Eigen::Index m = Xb.rows();
            nn::Net& net = *ev.net;

            std::vector<Eigen::MatrixXd> phi;
            {
                nn::Forward f = nn::forward(net, Xb);
                Eigen::MatrixXd grad = nn::input_gradient(net, f);
                phi.push_back((grad.array() * (Xb.rowwise() - mu.transpose()).array()).matrix());
            }

            rng::Engine eng(rng::derive_seed(
                rng::derive_seed(cfg.base.seed, detail::kSharpStream + static_cast<std::uint64_t>(ev.epoch)),
                static_cast<std::uint64_t>(ev.batch)));
            for (int r = 1; r < cfg.penalty_resamples; ++r) {
                Eigen::MatrixXd Xr(m, Xb.cols());
                Eigen::VectorXi yr(m);
                for (Eigen::Index i = 0; i < m; ++i) {
                    const auto pick = static_cast<Eigen::Index>(eng.uniform_index(static_cast<std::uint64_t>(m)));
                    Xr.row(i) = Xb.row(pick);
                    yr(i) = yb(pick);
                }
                nn::Net temp = net;
                for (int step = 0; step < cfg.inner_steps; ++step) {
                    nn::Forward ft = nn::forward(temp, Xr);
                    nn::Grads gt = nn::backward(temp, ft, yr);
                    for (std::size_t l = 0; l < temp.layers(); ++l) {
                        temp.W[l] -= cfg.base.learning_rate * (gt.W[l] + cfg.base.l2 * temp.W[l]);
                        temp.b[l] -= cfg.base.learning_rate * gt.b[l];
                    }
                }
                nn::Forward ftemp = nn::forward(temp, Xb);
                Eigen::MatrixXd grad = nn::input_gradient(temp, ftemp);
                phi.push_back((grad.array() * (Xb.rowwise() - mu.transpose()).array()).matrix());
            }

            Eigen::MatrixXd T;
            const double penalty = detail::penalty_value_and_tangent(phi, Xb, mu, cfg.epsilon, T);
            nn::Grads pen = detail::tangent_dot_grads(net, Xb, T);
            ev.grads->add_scaled(pen, cfg.lambda);
            ev.extra_loss = cfg.lambda * penalty;
            if (log) {
                log->penalty_values.push_back(penalty);
                ++log->penalty_evaluations;
            }
        };
    }

    std::vector<Eigen::Index> widths{X.cols()};
    widths.insert(widths.end(), hidden.begin(), hidden.end());
    widths.push_back(1);
    nn::Net net = train_net(X, y, widths, cfg.base, hook, log ? &log->train : nullptr);
    auto names = feature_names.empty() ? std::vector<std::string>(static_cast<std::size_t>(X.cols())) : feature_names;
    return pack_net(net, hidden.empty() ? ModelKind::logistic : ModelKind::mlp, names, cfg.base);
}

inline ModelParams train_sharp(const FeatureMatrix& X, const LabelVector& y, const std::vector<Eigen::Index>& hidden,
                               const SharpConfig& cfg, SharpLog* log = nullptr) {
    return train_sharp(X.values, y.values, hidden, cfg, X.column_names, log);
}

struct AblationRow {
    double lambda = 0.0;
    MetricSet metrics;
    double mean_fragility = 0.0;
    double tau_top50 = 0.0;
    double wall_seconds = 0.0;
};

struct AblationResult {
    std::vector<AblationRow> rows;
};

/// Post-training fragility of a (possibly SHARP-regularised) trainer:
/// bootstrap retrain on the training set, Taylor-attribute a fixed eval
/// slice, then score.
inline FragilityReport sharp_fragility(const Eigen::MatrixXd& X_train, const Eigen::VectorXi& y_train,
                                       const Eigen::MatrixXd& X_eval, const std::vector<Eigen::Index>& hidden,
                                       const SharpConfig& cfg, const BootstrapPlan& plan,
                                       std::vector<AttributionMatrix>* samples_out = nullptr) {
    const Eigen::VectorXd mu = X_train.colwise().mean();
    BootstrapSpec spec;
    spec.retrain = [&](const std::vector<Eigen::Index>& rows, std::uint64_t seed) {
        Eigen::MatrixXd Xr(static_cast<Eigen::Index>(rows.size()), X_train.cols());
        Eigen::VectorXi yr(static_cast<Eigen::Index>(rows.size()));
        for (std::size_t i = 0; i < rows.size(); ++i) {
            Xr.row(static_cast<Eigen::Index>(i)) = X_train.row(rows[i]);
            yr(static_cast<Eigen::Index>(i)) = y_train(rows[i]);
        }
        SharpConfig c = cfg;
        c.base.seed = seed;
        return train_sharp(Xr, yr, hidden, c);
    };
    spec.attribute = [&](const ModelParams& m) { return taylor_attribution(m, X_eval, mu); };

    auto samples = bootstrap_attributions(X_train.rows(), spec, plan);
    FragilityReport rep = fragility_scores(samples, cfg.epsilon);
    if (samples_out) *samples_out = std::move(samples);
    return rep;
}

/// Trains one model per lambda with shared seeds and reports test metrics,
/// post-training fragility, and top-50 rank stability.
inline AblationResult lambda_ablation(const Eigen::MatrixXd& X_train, const Eigen::VectorXi& y_train,
                                      const Eigen::MatrixXd& X_test, const Eigen::VectorXi& y_test,
                                      const std::vector<Eigen::Index>& hidden, const std::vector<double>& grid,
                                      const SharpConfig& base_cfg, const BootstrapPlan& plan,
                                      Eigen::Index max_eval_rows = 200) {
    if (grid.empty()) throw numeric_error("lambda grid must be nonempty");
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        if (grid[i] >= grid[i + 1]) throw numeric_error("lambda grid must be strictly increasing");
    }
    if (grid.front() != 0.0) throw numeric_error("lambda grid must contain 0");

    const Eigen::Index eval_rows = std::min<Eigen::Index>(max_eval_rows, X_test.rows());
    Eigen::MatrixXd X_eval = X_test.topRows(eval_rows);

    AblationResult result;
    for (double lambda : grid) {
        const auto t0 = std::chrono::steady_clock::now();
        SharpConfig cfg = base_cfg;
        cfg.lambda = lambda;

        AblationRow row;
        row.lambda = lambda;
        try {
            ModelParams m = train_sharp(X_train, y_train, hidden, cfg);
            row.metrics = evaluate(m, X_test, y_test);
            std::vector<AttributionMatrix> samples;
            row.mean_fragility = sharp_fragility(X_train, y_train, X_eval, hidden, cfg, plan, &samples).mean_fragility();
            row.tau_top50 = stability_report(samples, {50}).at_k(50).tau_mean;
        } catch (const std::exception& e) {
            throw numeric_error("lambda=" + std::to_string(lambda) + ": " + e.what());
        }
        row.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.rows.push_back(row);
    }
    return result;
}

}  // namespace colaudit
