#pragma once

#include "colaudit/attribution.hpp"
#include "colaudit/data.hpp"
#include "colaudit/model.hpp"
#include "colaudit/types.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

namespace colaudit {

/// Type-erased resample-and-explain recipe: `retrain` fits a model on the
/// given training rows, `attribute` explains the fixed eval set under it.
struct BootstrapSpec {
    std::function<ModelParams(const std::vector<Eigen::Index>& rows, std::uint64_t seed)> retrain;
    std::function<AttributionMatrix(const ModelParams& m)> attribute;
};

/// Retrains per resample and attributes a fixed eval set; the only source of
/// randomness across the returned samples is the resampled fit.
inline std::vector<AttributionMatrix> bootstrap_attributions(Eigen::Index n_train, const BootstrapSpec& spec,
                                                             const BootstrapPlan& plan) {
    if (plan.num_resamples < 2) throw numeric_error("bootstrap needs at least 2 resamples");
    auto index_sets = bootstrap_indices(n_train, plan);
    std::vector<AttributionMatrix> samples;
    samples.reserve(index_sets.size());
    for (std::size_t r = 0; r < index_sets.size(); ++r) {
        try {
            ModelParams m = spec.retrain(index_sets[r], rng::derive_seed(plan.seed, 0x7265ULL + r));
            samples.push_back(spec.attribute(m));
        } catch (const std::exception& e) {
            throw numeric_error("bootstrap resample " + std::to_string(r) + " failed: " + e.what());
        }
    }
    return samples;
}

struct FragilityReport {
    std::vector<std::string> feature_names;
    Eigen::VectorXd var_phi;
    Eigen::VectorXd mean_abs_phi;
    Eigen::VectorXd fragility;
    double epsilon = 1e-8;
    int num_resamples = 0;
    Eigen::Index eval_rows = 0;
    std::vector<Eigen::Index> ranked_by_fragility;  // descending, ties by index

    double mean_fragility() const { return fragility.size() ? fragility.mean() : 0.0; }
};

/// Score per feature: across-resample sample variance (n-1), computed per
/// eval instance and averaged, over pooled mean |phi| plus epsilon. Scores
/// do not depend on the order of `samples`, and identical samples score
/// exactly zero.
inline FragilityReport fragility_scores(const std::vector<AttributionMatrix>& samples, double epsilon = 1e-8) {
    if (samples.size() < 2) throw numeric_error("fragility needs at least 2 attribution samples");
    const Eigen::Index n = samples.front().n();
    const Eigen::Index p = samples.front().p();
    for (const auto& s : samples) {
        if (s.n() != n || s.p() != p) throw numeric_error("attribution samples have mismatched shapes");
    }
    const auto R = static_cast<double>(samples.size());

    FragilityReport rep;
    rep.feature_names = samples.front().column_names;
    rep.epsilon = epsilon;
    rep.num_resamples = static_cast<int>(samples.size());
    rep.eval_rows = n;
    rep.var_phi = Eigen::VectorXd::Zero(p);
    rep.mean_abs_phi = Eigen::VectorXd::Zero(p);

    std::vector<double> vals(samples.size());
    std::vector<double> abs_vals(samples.size());
    for (Eigen::Index i = 0; i < p; ++i) {
        double var_sum = 0.0;
        double abs_sum = 0.0;
        for (Eigen::Index e = 0; e < n; ++e) {
            for (std::size_t r = 0; r < samples.size(); ++r) {
                vals[r] = samples[r].values(e, i);
                abs_vals[r] = std::abs(vals[r]);
            }
            // summing in sorted order keeps the result independent of the
            // resample order
            std::sort(vals.begin(), vals.end());
            std::sort(abs_vals.begin(), abs_vals.end());
            for (double a : abs_vals) abs_sum += a;
            if (vals.front() != vals.back()) {
                double mean = 0.0;
                for (double v : vals) mean += v;
                mean /= R;
                double ss = 0.0;
                for (double v : vals) {
                    const double d = v - mean;
                    ss += d * d;
                }
                var_sum += ss / (R - 1.0);
            }
        }
        rep.var_phi(i) = var_sum / static_cast<double>(n);
        rep.mean_abs_phi(i) = abs_sum / (R * static_cast<double>(n));
    }
    rep.fragility = rep.var_phi.array() / (rep.mean_abs_phi.array() + epsilon);

    rep.ranked_by_fragility.resize(static_cast<std::size_t>(p));
    std::iota(rep.ranked_by_fragility.begin(), rep.ranked_by_fragility.end(), Eigen::Index{0});
    std::sort(rep.ranked_by_fragility.begin(), rep.ranked_by_fragility.end(), [&](Eigen::Index a, Eigen::Index b) {
        if (rep.fragility(a) != rep.fragility(b)) return rep.fragility(a) > rep.fragility(b);
        return a < b;
    });
    return rep;
}

namespace detail {

inline std::size_t count_inversions(std::vector<std::size_t>& seq, std::vector<std::size_t>& buf, std::size_t lo,
                                    std::size_t hi) {
    if (hi - lo < 2) return 0;
    const std::size_t mid = lo + (hi - lo) / 2;
    std::size_t inv = count_inversions(seq, buf, lo, mid) + count_inversions(seq, buf, mid, hi);
    std::size_t a = lo, b = mid, out = lo;
    while (a < mid && b < hi) {
        if (seq[a] <= seq[b]) {
            buf[out++] = seq[a++];
        } else {
            inv += mid - a;
            buf[out++] = seq[b++];
        }
    }
    while (a < mid) buf[out++] = seq[a++];
    while (b < hi) buf[out++] = seq[b++];
    std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo), buf.begin() + static_cast<std::ptrdiff_t>(hi),
              seq.begin() + static_cast<std::ptrdiff_t>(lo));
    return inv;
}

}  // namespace detail

/// Kendall tau-a between two orderings of the same element set, via
/// merge-sort inversion counting.
inline double kendall_tau(const std::vector<Eigen::Index>& rank_a, const std::vector<Eigen::Index>& rank_b) {
    const std::size_t n = rank_a.size();
    if (n < 2) throw numeric_error("kendall_tau needs at least 2 elements");
    if (rank_b.size() != n) throw numeric_error("kendall_tau rankings differ in length");

    std::vector<std::pair<Eigen::Index, std::size_t>> pos_b(n);
    for (std::size_t i = 0; i < n; ++i) pos_b[i] = {rank_b[i], i};
    std::sort(pos_b.begin(), pos_b.end());
    auto lookup = [&](Eigen::Index v) {
        auto it = std::lower_bound(pos_b.begin(), pos_b.end(), std::make_pair(v, std::size_t{0}));
        if (it == pos_b.end() || it->first != v) throw numeric_error("kendall_tau rankings have different elements");
        return it->second;
    };

    std::vector<std::size_t> seq(n);
    for (std::size_t i = 0; i < n; ++i) seq[i] = lookup(rank_a[i]);
    std::vector<std::size_t> sorted_check = seq;
    std::sort(sorted_check.begin(), sorted_check.end());
    for (std::size_t i = 0; i < n; ++i) {
        if (sorted_check[i] != i) throw numeric_error("kendall_tau rankings have different elements");
    }

    std::vector<std::size_t> buf(n);
    const auto inv = static_cast<double>(detail::count_inversions(seq, buf, 0, n));
    const double pairs = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
    return 1.0 - 2.0 * inv / pairs;
}

/// Features sorted by mean |phi| over eval rows, descending, ties by index.
inline std::vector<Eigen::Index> importance_ranking(const AttributionMatrix& S) {
    Eigen::VectorXd imp = S.values.array().abs().colwise().mean();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(S.p()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        if (imp(a) != imp(b)) return imp(a) > imp(b);
        return a < b;
    });
    return order;
}

struct StabilityEntry {
    int k_requested = 0;
    int k_used = 0;
    bool clamped = false;
    double tau_mean = 0.0;
    Eigen::MatrixXd pairwise;  // resamples x resamples, unit diagonal
};

struct StabilityReport {
    std::vector<StabilityEntry> entries;
    std::string ranking_basis = "mean_abs_shap_importance";

    const StabilityEntry& at_k(int k) const {
        for (const auto& e : entries) {
            if (e.k_requested == k) return e;
        }
        throw numeric_error("no stability entry for requested k");
    }
};

namespace detail {

/// Aligns two full rankings on the union of their top-k prefixes and
/// returns tau over the union orderings.
inline double top_k_tau(const std::vector<Eigen::Index>& full_a, const std::vector<Eigen::Index>& full_b, int k) {
    const auto p = full_a.size();
    std::vector<std::size_t> pos_a(p), pos_b(p);
    for (std::size_t i = 0; i < p; ++i) {
        pos_a[static_cast<std::size_t>(full_a[i])] = i;
        pos_b[static_cast<std::size_t>(full_b[i])] = i;
    }
    std::vector<char> in_union(p, 0);
    for (int i = 0; i < k; ++i) {
        in_union[static_cast<std::size_t>(full_a[static_cast<std::size_t>(i)])] = 1;
        in_union[static_cast<std::size_t>(full_b[static_cast<std::size_t>(i)])] = 1;
    }
    std::vector<Eigen::Index> members;
    for (std::size_t f = 0; f < p; ++f) {
        if (in_union[f]) members.push_back(static_cast<Eigen::Index>(f));
    }
    std::vector<Eigen::Index> list_a = members, list_b = members;
    std::sort(list_a.begin(), list_a.end(),
              [&](Eigen::Index x, Eigen::Index y) { return pos_a[static_cast<std::size_t>(x)] < pos_a[static_cast<std::size_t>(y)]; });
    std::sort(list_b.begin(), list_b.end(),
              [&](Eigen::Index x, Eigen::Index y) { return pos_b[static_cast<std::size_t>(x)] < pos_b[static_cast<std::size_t>(y)]; });
    return kendall_tau(list_a, list_b);
}

}  // namespace detail

/// Mean pairwise top-K rank stability across attribution resamples.
inline StabilityReport stability_report(const std::vector<AttributionMatrix>& samples,
                                        const std::vector<int>& k_values = {20, 50}) {
    if (samples.size() < 2) throw numeric_error("stability needs at least 2 attribution samples");
    const Eigen::Index p = samples.front().p();
    std::vector<std::vector<Eigen::Index>> rankings;
    rankings.reserve(samples.size());
    for (const auto& s : samples) {
        if (s.p() != p) throw numeric_error("attribution samples have mismatched shapes");
        rankings.push_back(importance_ranking(s));
    }

    StabilityReport rep;
    const auto R = samples.size();
    for (int k_req : k_values) {
        StabilityEntry entry;
        entry.k_requested = k_req;
        entry.k_used = std::min<int>(k_req, static_cast<int>(p));
        entry.clamped = entry.k_used != k_req;
        entry.pairwise = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(R), static_cast<Eigen::Index>(R));
        double sum = 0.0;
        std::size_t count = 0;
        for (std::size_t a = 0; a < R; ++a) {
            for (std::size_t b = a + 1; b < R; ++b) {
                const double tau = detail::top_k_tau(rankings[a], rankings[b], entry.k_used);
                entry.pairwise(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = tau;
                entry.pairwise(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = tau;
                sum += tau;
                ++count;
            }
        }
        entry.tau_mean = count ? sum / static_cast<double>(count) : 1.0;
        rep.entries.push_back(std::move(entry));
    }
    return rep;
}

}  // namespace colaudit
