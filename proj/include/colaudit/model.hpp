#pragma once

#include "colaudit/rng.hpp"
#include "colaudit/types.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace colaudit {

struct TrainConfig {
    double learning_rate = 0.1;
    int epochs = 10;
    int batch_size = 64;
    std::uint64_t seed = 0;
    double l2 = 0.0;

    void validate() const {
        if (learning_rate <= 0.0) throw numeric_error("learning_rate must be positive");
        if (epochs <= 0) throw numeric_error("epochs must be positive");
        if (batch_size <= 0) throw numeric_error("batch_size must be positive");
        if (l2 < 0.0) throw numeric_error("l2 must be nonnegative");
    }
};

enum class ModelKind { linear_ols, logistic, mlp };

inline const char* to_string(ModelKind k) {
    switch (k) {
        case ModelKind::linear_ols: return "linear_ols";
        case ModelKind::logistic: return "logistic";
        case ModelKind::mlp: return "mlp";
    }
    return "?";
}

/// Flat, serialisable model parameters. layer_shapes holds the full width
/// sequence [p, hidden..., 1] for logistic/mlp and is empty for linear_ols.
struct ModelParams {
    ModelKind kind = ModelKind::linear_ols;
    std::vector<double> weights;
    std::vector<Eigen::Index> layer_shapes;
    std::vector<std::string> feature_names;
    TrainConfig training_config;
    bool rank_deficient = false;

    Eigen::Index input_dim() const {
        if (kind == ModelKind::linear_ols) return static_cast<Eigen::Index>(weights.size());
        if (layer_shapes.empty()) throw numeric_error("model has no layer shapes");
        return layer_shapes.front();
    }
};

namespace nn {

inline double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

struct Net {
    std::vector<Eigen::MatrixXd> W;  // W[l]: out_width x in_width
    std::vector<Eigen::VectorXd> b;

    std::size_t layers() const { return W.size(); }
};

/// Fan-in scaled uniform init for weights, zero biases. Deterministic.
inline Net init_net(const std::vector<Eigen::Index>& widths, std::uint64_t seed) {
    if (widths.size() < 2) throw numeric_error("network needs at least input and output widths");
    rng::Engine eng(seed);
    Net net;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        const Eigen::Index in = widths[l];
        const Eigen::Index out = widths[l + 1];
        if (in <= 0 || out <= 0) throw numeric_error("layer width must be positive");
        const double scale = 1.0 / std::sqrt(static_cast<double>(in));
        Eigen::MatrixXd W(out, in);
        for (Eigen::Index r = 0; r < out; ++r) {
            for (Eigen::Index c = 0; c < in; ++c) {
                W(r, c) = (2.0 * eng.uniform01() - 1.0) * scale;
            }
        }
        net.W.push_back(std::move(W));
        net.b.push_back(Eigen::VectorXd::Zero(out));
    }
    return net;
}

struct Forward {
    std::vector<Eigen::MatrixXd> A;  // A[0] = input batch; A[l] = tanh activations
    Eigen::VectorXd z;               // output logits, one per row
    Eigen::VectorXd prob;
};

inline Forward forward(const Net& net, const Eigen::MatrixXd& X) {
    Forward f;
    f.A.reserve(net.layers());
    f.A.push_back(X);
    for (std::size_t l = 0; l + 1 < net.layers(); ++l) {
        Eigen::MatrixXd Z = (f.A.back() * net.W[l].transpose()).rowwise() + net.b[l].transpose();
        f.A.push_back(Z.array().tanh().matrix());
    }
    const std::size_t L = net.layers() - 1;
    f.z = (f.A.back() * net.W[L].transpose()).col(0) + Eigen::VectorXd::Constant(X.rows(), net.b[L](0));
    f.prob.resize(f.z.size());
    for (Eigen::Index i = 0; i < f.z.size(); ++i) f.prob(i) = sigmoid(f.z(i));
    return f;
}

inline double bce_loss(const Eigen::VectorXd& prob, const Eigen::VectorXi& y) {
    double loss = 0.0;
    for (Eigen::Index i = 0; i < prob.size(); ++i) {
        const double p = std::clamp(prob(i), 1e-12, 1.0 - 1e-12);
        loss += y(i) == 1 ? -std::log(p) : -std::log(1.0 - p);
    }
    return loss / static_cast<double>(prob.size());
}

struct Grads {
    std::vector<Eigen::MatrixXd> W;
    std::vector<Eigen::VectorXd> b;

    static Grads zeros_like(const Net& net) {
        Grads g;
        for (std::size_t l = 0; l < net.layers(); ++l) {
            g.W.push_back(Eigen::MatrixXd::Zero(net.W[l].rows(), net.W[l].cols()));
            g.b.push_back(Eigen::VectorXd::Zero(net.b[l].size()));
        }
        return g;
    }

    void add_scaled(const Grads& other, double s) {
        for (std::size_t l = 0; l < W.size(); ++l) {
            W[l] += s * other.W[l];
            b[l] += s * other.b[l];
        }
    }
};

/// Mean BCE gradient over the batch captured in `f`.
inline Grads backward(const Net& net, const Forward& f, const Eigen::VectorXi& y) {
    const auto B = static_cast<double>(f.z.size());
    Grads g = Grads::zeros_like(net);
    Eigen::MatrixXd dZ(f.z.size(), 1);
    for (Eigen::Index i = 0; i < f.z.size(); ++i) {
        dZ(i, 0) = (f.prob(i) - static_cast<double>(y(i))) / B;
    }
    for (std::size_t l = net.layers(); l-- > 0;) {
        g.W[l] = dZ.transpose() * f.A[l];
        g.b[l] = dZ.colwise().sum().transpose();
        if (l == 0) break;
        Eigen::MatrixXd dA = dZ * net.W[l];
        dZ = dA.array() * (1.0 - f.A[l].array().square());
    }
    return g;
}

/// d(logit)/dx for every row of the batch captured in `f`.
inline Eigen::MatrixXd input_gradient(const Net& net, const Forward& f) {
    const Eigen::Index B = f.z.size();
    const std::size_t L = net.layers() - 1;
    Eigen::MatrixXd D = Eigen::MatrixXd::Ones(B, 1) * net.W[L];
    for (std::size_t l = L; l-- > 0;) {
        D = (D.array() * (1.0 - f.A[l + 1].array().square())).matrix() * net.W[l];
    }
    return D;
}

}  // namespace nn

namespace detail {

constexpr std::uint64_t kInitStream = 0x696e6974ULL;
constexpr std::uint64_t kShuffleStreamBase = 0x73687566'00000000ULL;

inline void pack_layer(std::vector<double>& out, const Eigen::MatrixXd& W, const Eigen::VectorXd& b) {
    for (Eigen::Index r = 0; r < W.rows(); ++r) {
        for (Eigen::Index c = 0; c < W.cols(); ++c) out.push_back(W(r, c));
    }
    for (Eigen::Index i = 0; i < b.size(); ++i) out.push_back(b(i));
}

}  // namespace detail

inline ModelParams pack_net(const nn::Net& net, ModelKind kind, const std::vector<std::string>& feature_names,
                            const TrainConfig& cfg) {
    ModelParams m;
    m.kind = kind;
    m.feature_names = feature_names;
    m.training_config = cfg;
    m.layer_shapes.push_back(net.W.front().cols());
    for (const auto& W : net.W) m.layer_shapes.push_back(W.rows());
    for (std::size_t l = 0; l < net.layers(); ++l) detail::pack_layer(m.weights, net.W[l], net.b[l]);
    return m;
}

inline nn::Net unpack_net(const ModelParams& m) {
    if (m.kind == ModelKind::linear_ols) throw numeric_error("linear_ols has no network form");
    nn::Net net;
    std::size_t pos = 0;
    for (std::size_t l = 0; l + 1 < m.layer_shapes.size(); ++l) {
        const Eigen::Index in = m.layer_shapes[l];
        const Eigen::Index out = m.layer_shapes[l + 1];
        Eigen::MatrixXd W(out, in);
        for (Eigen::Index r = 0; r < out; ++r) {
            for (Eigen::Index c = 0; c < in; ++c) W(r, c) = m.weights.at(pos++);
        }
        Eigen::VectorXd b(out);
        for (Eigen::Index i = 0; i < out; ++i) b(i) = m.weights.at(pos++);
        net.W.push_back(std::move(W));
        net.b.push_back(std::move(b));
    }
    if (pos != m.weights.size()) throw numeric_error("weight vector inconsistent with layer shapes");
    return net;
}

/// Minimum-norm least squares (no intercept). Rank deficiency is flagged,
/// not an error.
inline ModelParams fit_ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                           const std::vector<std::string>& feature_names = {}) {
    if (X.rows() < 1) throw numeric_error("fit_ols needs at least one row");
    if (X.rows() != y.size()) throw numeric_error("fit_ols dimension mismatch");
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(X);
    Eigen::VectorXd beta = cod.solve(y);
    ModelParams m;
    m.kind = ModelKind::linear_ols;
    m.weights.assign(beta.data(), beta.data() + beta.size());
    m.feature_names = feature_names.empty() ? std::vector<std::string>(static_cast<std::size_t>(X.cols())) : feature_names;
    m.rank_deficient = cod.rank() < X.cols();
    return m;
}

inline ModelParams fit_ols(const FeatureMatrix& X, const Eigen::VectorXd& y) {
    return fit_ols(X.values, y, X.column_names);
}

struct BatchEvent {
    int epoch;
    int batch;
    const std::vector<Eigen::Index>* rows;
    const Eigen::MatrixXd* Xb;
    const Eigen::VectorXi* yb;
    nn::Net* net;       // parameters before the update
    nn::Grads* grads;   // hook may add penalty gradients
    double base_loss;
    double extra_loss;  // hook-reported penalty value, for logging
};

using BatchHook = std::function<void(BatchEvent&)>;

struct TrainLog {
    std::vector<double> epoch_loss;       // full-set BCE after each epoch
    std::vector<double> step_base_loss;   // per batch
    std::vector<double> step_total_loss;  // base + hook extra
};

/// Seeded mini-batch gradient descent on binary cross-entropy. Shared by
/// logistic (no hidden layers), MLP, and the regularised trainer via `hook`.
inline nn::Net train_net(const Eigen::MatrixXd& X, const Eigen::VectorXi& y,
                         const std::vector<Eigen::Index>& widths, const TrainConfig& cfg,
                         const BatchHook& hook = nullptr, TrainLog* log = nullptr) {
    cfg.validate();
    const Eigen::Index n = X.rows();
    if (n == 0 || n != y.size()) throw numeric_error("training data dimension mismatch");
    bool has0 = false, has1 = false;
    for (Eigen::Index i = 0; i < n; ++i) (y(i) == 1 ? has1 : has0) = true;
    if (!has0 || !has1) throw numeric_error("training labels must contain both classes");

    nn::Net net = nn::init_net(widths, rng::derive_seed(cfg.seed, detail::kInitStream));
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng::Engine shuffler(rng::derive_seed(cfg.seed, detail::kShuffleStreamBase + static_cast<std::uint64_t>(epoch)));
        rng::shuffle(order, shuffler);

        for (Eigen::Index start = 0, batch_idx = 0; start < n; start += cfg.batch_size, ++batch_idx) {
            const Eigen::Index sz = std::min<Eigen::Index>(cfg.batch_size, n - start);
            std::vector<Eigen::Index> rows(order.begin() + start, order.begin() + start + sz);
            Eigen::MatrixXd Xb(sz, X.cols());
            Eigen::VectorXi yb(sz);
            for (Eigen::Index i = 0; i < sz; ++i) {
                Xb.row(i) = X.row(rows[static_cast<std::size_t>(i)]);
                yb(i) = y(rows[static_cast<std::size_t>(i)]);
            }

            nn::Forward f = nn::forward(net, Xb);
            const double base_loss = nn::bce_loss(f.prob, yb);
            if (!std::isfinite(base_loss)) {
                throw numeric_error("training diverged (non-finite loss) at epoch " + std::to_string(epoch));
            }
            nn::Grads g = nn::backward(net, f, yb);

            double extra_loss = 0.0;
            if (hook) {
                BatchEvent ev{epoch, static_cast<int>(batch_idx), &rows, &Xb, &yb, &net, &g, base_loss, 0.0};
                hook(ev);
                extra_loss = ev.extra_loss;
            }
            if (log) {
                log->step_base_loss.push_back(base_loss);
                log->step_total_loss.push_back(base_loss + extra_loss);
            }

            for (std::size_t l = 0; l < net.layers(); ++l) {
                net.W[l] -= cfg.learning_rate * (g.W[l] + cfg.l2 * net.W[l]);
                net.b[l] -= cfg.learning_rate * g.b[l];
            }
        }

        if (log) {
            nn::Forward full = nn::forward(net, X);
            const double full_loss = nn::bce_loss(full.prob, y);
            if (!std::isfinite(full_loss)) {
                throw numeric_error("training diverged (non-finite loss) at epoch " + std::to_string(epoch));
            }
            log->epoch_loss.push_back(full_loss);
        }
    }
    return net;
}

inline ModelParams fit_logistic(const Eigen::MatrixXd& X, const Eigen::VectorXi& y, const TrainConfig& cfg,
                                const std::vector<std::string>& feature_names = {}, TrainLog* log = nullptr) {
    nn::Net net = train_net(X, y, {X.cols(), 1}, cfg, nullptr, log);
    auto names = feature_names.empty() ? std::vector<std::string>(static_cast<std::size_t>(X.cols())) : feature_names;
    return pack_net(net, ModelKind::logistic, names, cfg);
}

inline ModelParams fit_logistic(const FeatureMatrix& X, const LabelVector& y, const TrainConfig& cfg,
                                TrainLog* log = nullptr) {
    return fit_logistic(X.values, y.values, cfg, X.column_names, log);
}

inline ModelParams fit_mlp(const Eigen::MatrixXd& X, const Eigen::VectorXi& y, const TrainConfig& cfg,
                           const std::vector<Eigen::Index>& hidden,
                           const std::vector<std::string>& feature_names = {}, TrainLog* log = nullptr) {
    std::vector<Eigen::Index> widths{X.cols()};
    widths.insert(widths.end(), hidden.begin(), hidden.end());
    widths.push_back(1);
    nn::Net net = train_net(X, y, widths, cfg, nullptr, log);
    auto names = feature_names.empty() ? std::vector<std::string>(static_cast<std::size_t>(X.cols())) : feature_names;
    return pack_net(net, hidden.empty() ? ModelKind::logistic : ModelKind::mlp, names, cfg);
}

inline ModelParams fit_mlp(const FeatureMatrix& X, const LabelVector& y, const TrainConfig& cfg,
                           const std::vector<Eigen::Index>& hidden, TrainLog* log = nullptr) {
    return fit_mlp(X.values, y.values, cfg, hidden, X.column_names, log);
}

/// Raw model output before the sigmoid: X*beta for linear_ols, the logit for
/// logistic/mlp.
inline Eigen::VectorXd predict_logit(const ModelParams& m, const Eigen::MatrixXd& X) {
    if (X.cols() != m.input_dim()) throw numeric_error("predict: feature count mismatch");
    if (m.kind == ModelKind::linear_ols) {
        Eigen::Map<const Eigen::VectorXd> beta(m.weights.data(), static_cast<Eigen::Index>(m.weights.size()));
        return X * beta;
    }
    nn::Net net = unpack_net(m);
    return nn::forward(net, X).z;
}

/// Probabilities for logistic/mlp; raw scores for linear_ols.
inline Eigen::VectorXd predict_proba(const ModelParams& m, const Eigen::MatrixXd& X) {
    Eigen::VectorXd z = predict_logit(m, X);
    if (m.kind == ModelKind::linear_ols) return z;
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = nn::sigmoid(z(i));
    return z;
}

inline Eigen::VectorXd predict_proba(const ModelParams& m, const FeatureMatrix& X) {
    return predict_proba(m, X.values);
}

/// Analytic d(output)/dx per row; probability scale applies the sigmoid slope.
inline Eigen::MatrixXd input_gradient(const ModelParams& m, const Eigen::MatrixXd& X, bool probability_scale = false) {
    if (X.cols() != m.input_dim()) throw numeric_error("input_gradient: feature count mismatch");
    if (m.kind == ModelKind::linear_ols) {
        Eigen::Map<const Eigen::VectorXd> beta(m.weights.data(), static_cast<Eigen::Index>(m.weights.size()));
        return Eigen::MatrixXd::Ones(X.rows(), 1) * beta.transpose();
    }
    nn::Net net = unpack_net(m);
    nn::Forward f = nn::forward(net, X);
    Eigen::MatrixXd D = nn::input_gradient(net, f);
    if (probability_scale) {
        for (Eigen::Index i = 0; i < D.rows(); ++i) {
            D.row(i) *= f.prob(i) * (1.0 - f.prob(i));
        }
    }
    return D;
}

struct MetricSet {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::optional<double> roc_auc;
};

/// Midrank (tie-aware) ROC AUC; absent when y is single-class.
inline std::optional<double> roc_auc(const Eigen::VectorXd& scores, const Eigen::VectorXi& y) {
    const Eigen::Index n = scores.size();
    if (n != y.size()) throw numeric_error("roc_auc dimension mismatch");
    Eigen::Index n_pos = 0;
    for (Eigen::Index i = 0; i < n; ++i) n_pos += y(i) == 1 ? 1 : 0;
    const Eigen::Index n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) return std::nullopt;

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return scores(a) < scores(b); });

    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && scores(order[j + 1]) == scores(order[i])) ++j;
        const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t k = i; k <= j; ++k) {
            if (y(order[k]) == 1) rank_sum_pos += midrank;
        }
        i = j + 1;
    }
    const double np = static_cast<double>(n_pos);
    const double nn_ = static_cast<double>(n_neg);
    return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn_);
}

inline MetricSet evaluate(const ModelParams& m, const Eigen::MatrixXd& X, const Eigen::VectorXi& y) {
    Eigen::VectorXd scores = predict_proba(m, X);
    Eigen::Index tp = 0, tn = 0, fp = 0, fn = 0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const bool pred = scores(i) >= 0.5;
        if (pred && y(i) == 1) ++tp;
        else if (pred && y(i) == 0) ++fp;
        else if (!pred && y(i) == 1) ++fn;
        else ++tn;
    }
    MetricSet ms;
    const auto total = static_cast<double>(y.size());
    ms.accuracy = static_cast<double>(tp + tn) / total;
    ms.precision = (tp + fp) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    ms.recall = (tp + fn) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    ms.f1 = (ms.precision + ms.recall) > 0.0 ? 2.0 * ms.precision * ms.recall / (ms.precision + ms.recall) : 0.0;
    ms.roc_auc = roc_auc(scores, y);
    return ms;
}

inline MetricSet evaluate(const ModelParams& m, const FeatureMatrix& X, const LabelVector& y) {
    return evaluate(m, X.values, y.values);
}

}  // namespace colaudit
