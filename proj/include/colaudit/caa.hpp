#pragma once

#include "colaudit/attribution.hpp"
#include "colaudit/audit.hpp"
#include "colaudit/types.hpp"

#include <numeric>
#include <string>
#include <utility>
#include <vector>

namespace colaudit {

enum class Aggregation { mean, max, sum };

inline const char* to_string(Aggregation a) {
    switch (a) {
        case Aggregation::mean: return "mean";
        case Aggregation::max: return "max";
        case Aggregation::sum: return "sum";
    }
    return "?";
}

struct ClusterMapping {
    std::vector<std::vector<Eigen::Index>> clusters;
    std::vector<std::string> cluster_names;
    double rho_thresh = 0.85;
    Aggregation aggregation = Aggregation::mean;
};

struct FilteredAttributionMatrix {
    Eigen::MatrixXd values;  // n x |clusters|
    std::vector<std::string> cluster_names;
    AttributionMethod source_method = AttributionMethod::linear_exact;
};

/// Groups correlated features (greedy absolute-correlation clustering over X)
/// and aggregates their attributions per cluster. `max` keeps the signed
/// value of the largest-|phi| member, ties toward the lowest index.
inline std::pair<FilteredAttributionMatrix, ClusterMapping> caa_filter(const AttributionMatrix& S,
                                                                       const FeatureMatrix& X, double rho_thresh,
                                                                       Aggregation aggregation) {
    if (S.p() != X.p()) throw numeric_error("caa_filter: attribution and feature column counts differ");

    CorrelationMatrix R = correlation_matrix(X);
    ClusterMapping mapping;
    mapping.clusters = correlation_clusters(R, rho_thresh);
    mapping.rho_thresh = rho_thresh;
    mapping.aggregation = aggregation;
    for (const auto& cluster : mapping.clusters) {
        std::string name;
        for (std::size_t k = 0; k < cluster.size(); ++k) {
            if (k) name += "+";
            name += X.column_names[static_cast<std::size_t>(cluster[k])];
        }
        mapping.cluster_names.push_back(std::move(name));
    }

    FilteredAttributionMatrix F;
    F.cluster_names = mapping.cluster_names;
    F.source_method = S.method;
    F.values.resize(S.n(), static_cast<Eigen::Index>(mapping.clusters.size()));
    for (std::size_t c = 0; c < mapping.clusters.size(); ++c) {
        const auto& cluster = mapping.clusters[c];
        for (Eigen::Index row = 0; row < S.n(); ++row) {
            double agg = 0.0;
            switch (aggregation) {
                case Aggregation::mean:
                case Aggregation::sum: {
                    for (Eigen::Index f : cluster) agg += S.values(row, f);
                    if (aggregation == Aggregation::mean) agg /= static_cast<double>(cluster.size());
                    break;
                }
                case Aggregation::max: {
                    double best_abs = -1.0;
                    for (Eigen::Index f : cluster) {
                        const double v = S.values(row, f);
                        if (std::abs(v) > best_abs) {
                            best_abs = std::abs(v);
                            agg = v;
                        }
                    }
                    break;
                }
            }
            F.values(row, static_cast<Eigen::Index>(c)) = agg;
        }
    }
    return {std::move(F), std::move(mapping)};
}

/// Clusters sorted by mean |value| over rows, descending, ties by index.
inline std::vector<Eigen::Index> cluster_importance_ranking(const FilteredAttributionMatrix& F) {
    if (F.values.cols() < 1) throw numeric_error("cluster ranking of empty matrix");
    Eigen::VectorXd imp = F.values.array().abs().colwise().mean();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(F.values.cols()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        if (imp(a) != imp(b)) return imp(a) > imp(b);
        return a < b;
    });
    return order;
}

}  // namespace colaudit
