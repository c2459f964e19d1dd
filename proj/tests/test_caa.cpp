#include "colaudit/caa.hpp"

#include "helpers.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <vector>

using namespace colaudit;
using test_util::make_matrix;

namespace {

AttributionMatrix attrib(std::initializer_list<std::initializer_list<double>> rows,
                         std::vector<std::string> names = {}) {
    AttributionMatrix S;
    const auto n = static_cast<Eigen::Index>(rows.size());
    const auto p = static_cast<Eigen::Index>(rows.begin()->size());
    S.values.resize(n, p);
    Eigen::Index r = 0;
    for (const auto& row : rows) {
        Eigen::Index c = 0;
        for (double v : row) S.values(r, c++) = v;
        ++r;
    }
    S.baseline = Eigen::VectorXd::Zero(p);
    if (names.empty()) {
        for (Eigen::Index j = 0; j < p; ++j) names.push_back("f" + std::to_string(j));
    }
    S.column_names = std::move(names);
    return S;
}

// three mutually uncorrelated sign columns
FeatureMatrix orthogonal_design() {
    return make_matrix({{1, 1, 1}, {1, -1, -1}, {-1, 1, -1}, {-1, -1, 1}}, {"a", "b", "c"});
}

// b and c are scalar multiples of each other, a is uncorrelated with both
FeatureMatrix paired_design() {
    return make_matrix({{1, 1, 2}, {1, -1, -2}, {-1, 1, 2}, {-1, -1, -2}}, {"a", "b", "c"});
}

}  // namespace

TEST_CASE("caa_filter leaves uncorrelated features as singletons") {
    FeatureMatrix X = orthogonal_design();
    AttributionMatrix S = attrib({{0.4, -1.0, 2.5}, {0.0, 0.7, -0.1}}, {"a", "b", "c"});
    S.method = AttributionMethod::kernel_shap;

    for (Aggregation agg : {Aggregation::mean, Aggregation::max, Aggregation::sum}) {
        auto [F, mapping] = caa_filter(S, X, 0.85, agg);
        REQUIRE(mapping.clusters.size() == 3);
        CHECK(mapping.cluster_names == std::vector<std::string>{"a", "b", "c"});
        CHECK(F.values == S.values);
        CHECK(F.source_method == AttributionMethod::kernel_shap);
        CHECK(mapping.aggregation == agg);
        CHECK(mapping.rho_thresh == 0.85);
    }
}

TEST_CASE("caa_filter aggregates a correlated pair") {
    FeatureMatrix X = paired_design();
    AttributionMatrix S = attrib({{1.0, 0.3, -0.5}}, {"a", "b", "c"});

    SECTION("mean") {
        auto [F, mapping] = caa_filter(S, X, 0.85, Aggregation::mean);
        REQUIRE(mapping.clusters == std::vector<std::vector<Eigen::Index>>{{0}, {1, 2}});
        CHECK(mapping.cluster_names == std::vector<std::string>{"a", "b+c"});
        CHECK(F.values(0, 0) == 1.0);
        CHECK(F.values(0, 1) == Catch::Approx(-0.1).margin(1e-15));
    }
    SECTION("sum") {
        auto [F, mapping] = caa_filter(S, X, 0.85, Aggregation::sum);
        CHECK(F.values(0, 1) == Catch::Approx(-0.2).margin(1e-15));
    }
    SECTION("max keeps the signed value of the dominant member") {
        auto [F, mapping] = caa_filter(S, X, 0.85, Aggregation::max);
        CHECK(F.values(0, 1) == -0.5);
    }
}

TEST_CASE("caa_filter max breaks absolute ties toward the lower index") {
    FeatureMatrix X = paired_design();
    AttributionMatrix S = attrib({{0.0, 0.5, -0.5}}, {"a", "b", "c"});
    auto [F, mapping] = caa_filter(S, X, 0.85, Aggregation::max);
    CHECK(F.values(0, 1) == 0.5);
}

TEST_CASE("caa_filter clusters partition the feature set") {
    rng::Engine eng(31);
    const Eigen::Index n = 200, p = 12;
    Eigen::MatrixXd V(n, p);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) V(i, j) = eng.normal();
    }
    V.col(3) = V.col(1) + 0.01 * V.col(0);
    V.col(7) = 2.0 * V.col(5);
    FeatureMatrix X = test_util::wrap_matrix(V);

    Eigen::MatrixXd phi(5, p);
    for (Eigen::Index i = 0; i < 5; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) phi(i, j) = eng.normal();
    }
    AttributionMatrix S;
    S.values = phi;
    S.baseline = Eigen::VectorXd::Zero(p);
    S.column_names = X.column_names;

    auto [F, mapping] = caa_filter(S, X, 0.9, Aggregation::sum);

    std::vector<int> seen(static_cast<std::size_t>(p), 0);
    for (const auto& cluster : mapping.clusters) {
        REQUIRE_FALSE(cluster.empty());
        CHECK(std::is_sorted(cluster.begin(), cluster.end()));
        for (Eigen::Index f : cluster) seen[static_cast<std::size_t>(f)] += 1;
    }
    CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));

    // sum aggregation preserves each row's attribution total
    Eigen::VectorXd before = S.values.rowwise().sum();
    Eigen::VectorXd after = F.values.rowwise().sum();
    CHECK((before - after).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("caa_filter near-unit threshold only merges exact duplicates") {
    rng::Engine eng(37);
    const Eigen::Index n = 64;
    Eigen::MatrixXd V(n, 3);
    for (Eigen::Index i = 0; i < n; ++i) {
        V(i, 0) = eng.normal();
        V(i, 2) = V(i, 0) + 0.5 * eng.normal();
    }
    V.col(1) = V.col(0);
    FeatureMatrix X = test_util::wrap_matrix(V, {"x", "x_copy", "x_noisy"});

    AttributionMatrix S = attrib({{1.0, 2.0, 3.0}}, {"x", "x_copy", "x_noisy"});
    auto [F, mapping] = caa_filter(S, X, 1.0 - 1e-9, Aggregation::mean);
    REQUIRE(mapping.clusters == std::vector<std::vector<Eigen::Index>>{{0, 1}, {2}});
    CHECK(mapping.cluster_names == std::vector<std::string>{"x+x_copy", "x_noisy"});
    CHECK(F.values(0, 0) == Catch::Approx(1.5).margin(1e-15));
    CHECK(F.values(0, 1) == 3.0);
}

TEST_CASE("caa_filter rejects mismatched column counts") {
    FeatureMatrix X = orthogonal_design();
    AttributionMatrix S = attrib({{1.0, 2.0}}, {"a", "b"});
    CHECK_THROWS_AS(caa_filter(S, X, 0.85, Aggregation::mean), numeric_error);
}

TEST_CASE("cluster_importance_ranking orders by mean absolute value") {
    FilteredAttributionMatrix F;
    F.values.resize(2, 3);
    F.values << 0.1, -0.5, 0.2, -0.1, 0.3, 0.2;
    F.cluster_names = {"c0", "c1", "c2"};
    CHECK(cluster_importance_ranking(F) == std::vector<Eigen::Index>{1, 2, 0});

    FilteredAttributionMatrix tie;
    tie.values.resize(1, 2);
    tie.values << -0.4, 0.4;
    tie.cluster_names = {"c0", "c1"};
    CHECK(cluster_importance_ranking(tie) == std::vector<Eigen::Index>{0, 1});

    FilteredAttributionMatrix empty;
    empty.values.resize(1, 0);
    CHECK_THROWS_AS(cluster_importance_ranking(empty), numeric_error);
}
