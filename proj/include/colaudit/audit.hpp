#pragma once

#include "colaudit/rng.hpp"
#include "colaudit/types.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace colaudit {

struct CorrelationMatrix {
    Eigen::MatrixXd values;
    std::vector<std::string> column_names;

    void validate() const {
        const Eigen::Index p = values.rows();
        if (values.cols() != p) throw numeric_error("correlation matrix not square");
        for (Eigen::Index i = 0; i < p; ++i) {
            if (std::abs(values(i, i) - 1.0) > 1e-12) throw numeric_error("correlation diagonal not 1");
            for (Eigen::Index j = 0; j < p; ++j) {
                if (std::abs(values(i, j) - values(j, i)) > 1e-12) throw numeric_error("correlation matrix not symmetric");
                if (values(i, j) < -1.0 - 1e-12 || values(i, j) > 1.0 + 1e-12) {
                    throw numeric_error("correlation out of [-1,1]");
                }
            }
        }
    }
};

enum class VifStatus { ok, moderate, severe, infinite };

inline const char* to_string(VifStatus s) {
    switch (s) {
        case VifStatus::ok: return "ok";
        case VifStatus::moderate: return "moderate";
        case VifStatus::severe: return "severe";
        case VifStatus::infinite: return "infinite";
    }
    return "?";
}

struct VifEntry {
    std::string name;
    double vif = 1.0;  // +inf when status == infinite
    double r_squared = 0.0;
    VifStatus status = VifStatus::ok;
};

struct VifTable {
    std::vector<VifEntry> entries;
    bool under_determined = false;  // n < p + 1

    double max_finite_vif() const {
        double m = 0.0;
        for (const auto& e : entries) {
            if (e.status != VifStatus::infinite) m = std::max(m, e.vif);
        }
        return m;
    }
    bool any_infinite() const {
        return std::any_of(entries.begin(), entries.end(),
                           [](const VifEntry& e) { return e.status == VifStatus::infinite; });
    }
};

struct AuditReport {
    CorrelationMatrix correlation;
    std::vector<std::vector<Eigen::Index>> clusters;
    VifTable vif;
    std::vector<Eigen::Index> flagged_high_corr;
    std::vector<Eigen::Index> flagged_high_vif;
    double vif_thresh = 10.0;
    double rho_thresh = 0.85;
};

namespace detail {

constexpr double kVifDelta = 1e-10;  // R^2 >= 1 - delta counts as infinite

inline VifStatus classify_vif(double r_squared, double vif) {
    if (r_squared >= 1.0 - kVifDelta) return VifStatus::infinite;
    if (vif > 10.0) return VifStatus::severe;
    if (vif > 5.0) return VifStatus::moderate;
    return VifStatus::ok;
}

}  // namespace detail

inline CorrelationMatrix correlation_matrix(const FeatureMatrix& X) {
    if (X.n() < 2) throw numeric_error("correlation needs at least 2 rows");
    const Eigen::Index p = X.p();
    Eigen::MatrixXd centered = X.values.rowwise() - X.values.colwise().mean();
    Eigen::VectorXd norms(p);
    for (Eigen::Index c = 0; c < p; ++c) norms(c) = centered.col(c).norm();

    CorrelationMatrix R;
    R.column_names = X.column_names;
    R.values = Eigen::MatrixXd::Identity(p, p);
    for (Eigen::Index i = 0; i < p; ++i) {
        if (norms(i) < 1e-12) continue;  // constant column: rho = 0 off-diagonal
        for (Eigen::Index j = i + 1; j < p; ++j) {
            if (norms(j) < 1e-12) continue;
            double rho = centered.col(i).dot(centered.col(j)) / (norms(i) * norms(j));
            rho = std::clamp(rho, -1.0, 1.0);
            R.values(i, j) = rho;
            R.values(j, i) = rho;
        }
    }
    R.validate();
    return R;
}

/// Greedy single-pass clustering: seed with the lowest unassigned index i,
/// absorb every unassigned j > i with |R_ij| > rho_thresh, repeat.
inline std::vector<std::vector<Eigen::Index>> correlation_clusters(const CorrelationMatrix& R, double rho_thresh) {
    if (rho_thresh <= 0.0 || rho_thresh > 1.0) throw numeric_error("rho_thresh must be in (0,1]");
    const Eigen::Index p = R.values.rows();
    std::vector<char> assigned(static_cast<std::size_t>(p), 0);
    std::vector<std::vector<Eigen::Index>> clusters;
    for (Eigen::Index i = 0; i < p; ++i) {
        if (assigned[static_cast<std::size_t>(i)]) continue;
        std::vector<Eigen::Index> cluster{i};
        assigned[static_cast<std::size_t>(i)] = 1;
        for (Eigen::Index j = i + 1; j < p; ++j) {
            if (assigned[static_cast<std::size_t>(j)]) continue;
            if (std::abs(R.values(i, j)) > rho_thresh) {
                cluster.push_back(j);
                assigned[static_cast<std::size_t>(j)] = 1;
            }
        }
        clusters.push_back(std::move(cluster));
    }
    return clusters;
}

/// Per-feature VIF via least-squares regression of each column on the rest
/// plus an intercept. Rank-deficient designs use the minimum-norm solution.
inline VifTable vif(const FeatureMatrix& X) {
    const Eigen::Index n = X.n();
    const Eigen::Index p = X.p();
    if (p < 2) throw numeric_error("VIF undefined for fewer than 2 features");
    if (n < 2) throw numeric_error("VIF needs at least 2 rows");

    VifTable table;
    table.under_determined = n < p + 1;
    table.entries.resize(static_cast<std::size_t>(p));

    Eigen::MatrixXd design(n, p);  // column j replaced by intercept ones
    for (Eigen::Index j = 0; j < p; ++j) {
        Eigen::Index d = 0;
        for (Eigen::Index c = 0; c < p; ++c) {
            if (c == j) continue;
            design.col(d++) = X.values.col(c);
        }
        design.col(p - 1).setOnes();

        const Eigen::VectorXd& resp = X.values.col(j);
        const double mean = resp.mean();
        const double sst = (resp.array() - mean).square().sum();

        VifEntry& e = table.entries[static_cast<std::size_t>(j)];
        e.name = X.column_names[static_cast<std::size_t>(j)];
        if (sst < 1e-24) {  // constant column carries no variance to inflate
            e.r_squared = 0.0;
            e.vif = 1.0;
            e.status = VifStatus::ok;
            continue;
        }

        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(design);
        Eigen::VectorXd beta = cod.solve(resp);
        const double ssr = (resp - design * beta).squaredNorm();
        double r2 = 1.0 - ssr / sst;
        r2 = std::clamp(r2, 0.0, 1.0);
        e.r_squared = r2;
        if (r2 >= 1.0 - detail::kVifDelta) {
            e.vif = std::numeric_limits<double>::infinity();
        } else {
            e.vif = 1.0 / (1.0 - r2);
        }
        e.status = detail::classify_vif(r2, e.vif);
    }
    return table;
}

inline AuditReport make_audit_report(const FeatureMatrix& X, double vif_thresh = 10.0, double rho_thresh = 0.85) {
    AuditReport report;
    report.vif_thresh = vif_thresh;
    report.rho_thresh = rho_thresh;
    report.correlation = correlation_matrix(X);
    report.clusters = correlation_clusters(report.correlation, rho_thresh);
    report.vif = vif(X);

    const Eigen::Index p = X.p();
    std::vector<char> corr_hit(static_cast<std::size_t>(p), 0);
    for (Eigen::Index i = 0; i < p; ++i) {
        for (Eigen::Index j = i + 1; j < p; ++j) {
            if (std::abs(report.correlation.values(i, j)) > rho_thresh) {
                corr_hit[static_cast<std::size_t>(i)] = 1;
                corr_hit[static_cast<std::size_t>(j)] = 1;
            }
        }
    }
    for (Eigen::Index i = 0; i < p; ++i) {
        if (corr_hit[static_cast<std::size_t>(i)]) report.flagged_high_corr.push_back(i);
        const auto& e = report.vif.entries[static_cast<std::size_t>(i)];
        if (e.status == VifStatus::infinite || e.vif > vif_thresh) report.flagged_high_vif.push_back(i);
    }
    return report;
}

/// Removes the worst-VIF feature (ties resolved toward the higher index)
/// until max VIF <= vif_thresh, then removes the higher-index member of every
/// remaining |rho| > rho_thresh pair. Recomputes after each removal.
inline FeatureMatrix prune_by_audit(const FeatureMatrix& X, double vif_thresh = 10.0, double rho_thresh = 0.85) {
    FeatureMatrix cur = X;
    auto drop_column = [](FeatureMatrix& M, Eigen::Index col) {
        std::vector<Eigen::Index> keep;
        for (Eigen::Index c = 0; c < M.p(); ++c) {
            if (c != col) keep.push_back(c);
        }
        if (keep.empty()) throw numeric_error("pruning would remove all features");
        M = M.select_columns(keep);
    };

    while (cur.p() >= 2) {
        VifTable table = vif(cur);
        Eigen::Index worst = -1;
        double worst_vif = vif_thresh;
        bool worst_inf = false;
        for (Eigen::Index j = 0; j < cur.p(); ++j) {
            const auto& e = table.entries[static_cast<std::size_t>(j)];
            const bool inf = e.status == VifStatus::infinite;
            if (inf) {
                if (!worst_inf || j > worst) {
                    worst = j;
                    worst_inf = true;
                }
            } else if (!worst_inf && e.vif > worst_vif) {
                worst = j;
                worst_vif = e.vif;
            } else if (!worst_inf && worst >= 0 && e.vif == worst_vif && j > worst) {
                worst = j;
            }
        }
        if (worst < 0) break;
        drop_column(cur, worst);
    }

    while (cur.p() >= 2) {
        CorrelationMatrix R = correlation_matrix(cur);
        Eigen::Index remove = -1;
        for (Eigen::Index i = 0; i < cur.p() && remove < 0; ++i) {
            for (Eigen::Index j = i + 1; j < cur.p(); ++j) {
                if (std::abs(R.values(i, j)) > rho_thresh) {
                    remove = j;
                    break;
                }
            }
        }
        if (remove < 0) break;
        drop_column(cur, remove);
    }
    return cur;
}

inline FeatureMatrix prune_by_audit(const FeatureMatrix& X, const AuditReport& report) {
    return prune_by_audit(X, report.vif_thresh, report.rho_thresh);
}

/// Deterministic row subsample without replacement (used to cap VIF cost).
inline FeatureMatrix subsample_rows(const FeatureMatrix& X, Eigen::Index max_rows, std::uint64_t seed) {
    if (X.n() <= max_rows) return X;
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(X.n()));
    for (Eigen::Index i = 0; i < X.n(); ++i) idx[static_cast<std::size_t>(i)] = i;
    rng::Engine eng(rng::derive_seed(seed, 0x737562ULL));
    for (Eigen::Index i = 0; i < max_rows; ++i) {
        const auto j = i + static_cast<Eigen::Index>(eng.uniform_index(static_cast<std::uint64_t>(X.n() - i)));
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    idx.resize(static_cast<std::size_t>(max_rows));
    std::sort(idx.begin(), idx.end());
    return X.select_rows(idx);
}

}  // namespace colaudit
