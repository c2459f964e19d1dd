#include "colaudit/audit.hpp"
#include "colaudit/synthetic.hpp"
#include "colaudit/theorem.hpp"

#include "helpers.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

using namespace colaudit;
using test_util::make_matrix;
using test_util::wrap_matrix;

namespace {

CorrelationMatrix manual_correlation(std::initializer_list<std::initializer_list<double>> rows) {
    CorrelationMatrix R;
    const auto p = static_cast<Eigen::Index>(rows.size());
    R.values.resize(p, p);
    Eigen::Index r = 0;
    for (const auto& row : rows) {
        Eigen::Index c = 0;
        for (double v : row) R.values(r, c++) = v;
        ++r;
    }
    for (Eigen::Index i = 0; i < p; ++i) R.column_names.push_back("f" + std::to_string(i));
    return R;
}

}  // namespace

TEST_CASE("correlation_matrix recovers exact linear dependence") {
    FeatureMatrix X = make_matrix({{1.0, 2.0}, {2.0, 4.0}, {3.0, 6.0}, {4.0, 8.0}}, {"a", "b"});
    CorrelationMatrix R = correlation_matrix(X);
    CHECK(R.values(0, 1) == Catch::Approx(1.0).margin(1e-12));

    FeatureMatrix Y = make_matrix({{1.0, -1.0}, {2.0, -2.0}, {3.0, -3.0}});
    CHECK(correlation_matrix(Y).values(0, 1) == Catch::Approx(-1.0).margin(1e-12));
}

TEST_CASE("correlation_matrix matches the hand Pearson value 0.8") {
    FeatureMatrix X = make_matrix({{1.0, 1.0}, {2.0, 3.0}, {3.0, 2.0}, {4.0, 4.0}}, {"a", "b"});
    CorrelationMatrix R = correlation_matrix(X);
    CHECK(R.values(0, 1) == Catch::Approx(0.8).margin(1e-12));
    CHECK(R.values(1, 0) == Catch::Approx(0.8).margin(1e-12));
    CHECK(R.values(0, 0) == 1.0);
    R.validate();
}

TEST_CASE("correlation_matrix zeroes constant columns off-diagonal") {
    FeatureMatrix X = make_matrix({{5.0, 1.0}, {5.0, 2.0}, {5.0, 3.0}}, {"c", "v"});
    CorrelationMatrix R = correlation_matrix(X);
    CHECK(R.values(0, 1) == 0.0);
    CHECK(R.values(0, 0) == 1.0);
    CHECK_THROWS_AS(correlation_matrix(make_matrix({{1.0, 2.0}})), numeric_error);
}

TEST_CASE("correlation_clusters traces the greedy grouping") {
    SECTION("one strong pair") {
        CorrelationMatrix R = manual_correlation({{1.0, 0.9, 0.1}, {0.9, 1.0, 0.1}, {0.1, 0.1, 1.0}});
        auto clusters = correlation_clusters(R, 0.85);
        REQUIRE(clusters.size() == 2);
        CHECK(clusters[0] == std::vector<Eigen::Index>{0, 1});
        CHECK(clusters[1] == std::vector<Eigen::Index>{2});
    }
    SECTION("all weak") {
        CorrelationMatrix R = manual_correlation({{1.0, 0.2, 0.2}, {0.2, 1.0, 0.2}, {0.2, 0.2, 1.0}});
        auto clusters = correlation_clusters(R, 0.85);
        REQUIRE(clusters.size() == 3);
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK(clusters[i] == std::vector<Eigen::Index>{static_cast<Eigen::Index>(i)});
        }
    }
    SECTION("all perfectly correlated") {
        CorrelationMatrix R = manual_correlation({{1.0, 1.0, -1.0}, {1.0, 1.0, -1.0}, {-1.0, -1.0, 1.0}});
        auto clusters = correlation_clusters(R, 0.85);
        REQUIRE(clusters.size() == 1);
        CHECK(clusters[0] == std::vector<Eigen::Index>{0, 1, 2});
    }
    SECTION("greedy seeding is not transitive closure") {
        // 0-1 and 1-2 strong but 0-2 weak: 1 joins 0's cluster, 2 is left to seed its own
        CorrelationMatrix R = manual_correlation({{1.0, 0.9, 0.1}, {0.9, 1.0, 0.9}, {0.1, 0.9, 1.0}});
        auto clusters = correlation_clusters(R, 0.85);
        REQUIRE(clusters.size() == 2);
        CHECK(clusters[0] == std::vector<Eigen::Index>{0, 1});
        CHECK(clusters[1] == std::vector<Eigen::Index>{2});
    }
    SECTION("threshold bounds") {
        CorrelationMatrix R = manual_correlation({{1.0, 0.5}, {0.5, 1.0}});
        CHECK_THROWS_AS(correlation_clusters(R, 0.0), numeric_error);
        CHECK_THROWS_AS(correlation_clusters(R, 1.5), numeric_error);
    }
}

TEST_CASE("vif is 1 for mean-centered orthogonal columns") {
    FeatureMatrix X = make_matrix({{1.0, 1.0, 1.0},
                                   {1.0, -1.0, -1.0},
                                   {-1.0, 1.0, -1.0},
                                   {-1.0, -1.0, 1.0}});
    VifTable t = vif(X);
    for (const auto& e : t.entries) {
        CHECK(e.vif == Catch::Approx(1.0).margin(1e-9));
        CHECK(e.status == VifStatus::ok);
    }
    CHECK_FALSE(t.under_determined);
}

TEST_CASE("vif flags duplicate columns as infinite") {
    FeatureMatrix X = make_matrix({{1.0, 1.0, 0.3}, {2.0, 2.0, -1.0}, {3.0, 3.0, 0.7}, {4.0, 4.0, 2.0}},
                                  {"a", "a_copy", "b"});
    VifTable t = vif(X);
    CHECK(t.entries[0].status == VifStatus::infinite);
    CHECK(t.entries[1].status == VifStatus::infinite);
    CHECK(std::isinf(t.entries[0].vif));
    CHECK(t.entries[2].status == VifStatus::ok);
    CHECK(t.any_infinite());
}

TEST_CASE("vif matches the 2-feature closed form on sampled data") {
    SyntheticSpec spec;
    spec.n = 10000;
    spec.p = 2;
    spec.correlation_targets = {{0, 1, 0.95}};
    spec.beta_true = Eigen::VectorXd::Ones(2);
    spec.seed = 5;
    auto [X, y] = generate_synthetic(spec);

    VifTable t = vif(X);
    const double rho_hat = correlation_matrix(X).values(0, 1);
    const double closed_form = 1.0 / (1.0 - rho_hat * rho_hat);

    for (const auto& e : t.entries) {
        CHECK(std::abs(e.vif - closed_form) / closed_form <= 1e-6);
    }
    CHECK(std::abs(t.entries[0].vif - 10.256) / 10.256 <= 0.05);
    // the sampled VIF sits on the severe boundary, either side is consistent
    CHECK((t.entries[0].status == VifStatus::moderate || t.entries[0].status == VifStatus::severe));
}

TEST_CASE("vif status thresholds") {
    // rho about 0.9 gives VIF about 5.26: moderate but not severe
    SyntheticSpec spec;
    spec.n = 20000;
    spec.p = 2;
    spec.correlation_targets = {{0, 1, 0.9}};
    spec.beta_true = Eigen::VectorXd::Ones(2);
    spec.seed = 9;
    auto [X, y] = generate_synthetic(spec);
    VifTable t = vif(X);
    CHECK(t.entries[0].status == VifStatus::moderate);
    CHECK(t.entries[0].vif > 5.0);
    CHECK(t.entries[0].vif < 10.0);

    // rho 0.99 gives VIF about 50: severe with a wide margin
    spec.correlation_targets = {{0, 1, 0.99}};
    spec.seed = 10;
    auto [X2, y2] = generate_synthetic(spec);
    VifTable t2 = vif(X2);
    CHECK(t2.entries[0].status == VifStatus::severe);
    CHECK(t2.entries[0].vif > 10.0);
}

TEST_CASE("vif preconditions and constant columns") {
    CHECK_THROWS_AS(vif(make_matrix({{1.0}, {2.0}})), numeric_error);

    FeatureMatrix X = make_matrix({{5.0, 1.0, 0.4}, {5.0, 2.0, -0.3}, {5.0, 3.0, 1.9}}, {"c", "u", "v"});
    VifTable t = vif(X);
    CHECK(t.entries[0].vif == 1.0);
    CHECK(t.entries[0].status == VifStatus::ok);
}

TEST_CASE("vif is at least 1 on random designs") {
    rng::Engine eng(123);
    for (int trial = 0; trial < 5; ++trial) {
        Eigen::MatrixXd V(40, 6);
        for (Eigen::Index r = 0; r < V.rows(); ++r) {
            for (Eigen::Index c = 0; c < V.cols(); ++c) V(r, c) = eng.normal();
        }
        VifTable t = vif(wrap_matrix(V));
        for (const auto& e : t.entries) CHECK(e.vif >= 1.0 - 1e-9);
    }
}

TEST_CASE("under-determined designs are marked") {
    FeatureMatrix X = make_matrix({{1.0, 0.5, 0.25}, {0.3, 0.9, 1.1}});
    CHECK(vif(X).under_determined);
}

TEST_CASE("make_audit_report partitions features and flags offenders") {
    FeatureMatrix X = make_matrix({{1.0, 1.0, 0.3}, {2.0, 2.0, -1.0}, {3.0, 3.0, 0.7}, {4.0, 4.0, 2.0}},
                                  {"a", "a_copy", "b"});
    AuditReport rep = make_audit_report(X);

    std::vector<char> seen(static_cast<std::size_t>(X.p()), 0);
    for (const auto& cluster : rep.clusters) {
        for (Eigen::Index f : cluster) {
            CHECK_FALSE(seen[static_cast<std::size_t>(f)]);
            seen[static_cast<std::size_t>(f)] = 1;
        }
    }
    for (char s : seen) CHECK(s == 1);

    CHECK(rep.flagged_high_vif == std::vector<Eigen::Index>{0, 1});
    CHECK(rep.flagged_high_corr == std::vector<Eigen::Index>{0, 1});
}

TEST_CASE("prune_by_audit removes the duplicate, keeps the original") {
    FeatureMatrix X = make_matrix({{1.0, 1.0, 0.3}, {2.0, 2.0, -1.0}, {3.0, 3.0, 0.7}, {4.0, 4.0, 2.0}},
                                  {"a", "a_copy", "b"});
    FeatureMatrix pruned = prune_by_audit(X);
    REQUIRE(pruned.p() == 2);
    CHECK(pruned.column_names == std::vector<std::string>{"a", "b"});
}

TEST_CASE("prune_by_audit leaves clean matrices untouched and is idempotent") {
    rng::Engine eng(7);
    Eigen::MatrixXd V(60, 4);
    for (Eigen::Index r = 0; r < V.rows(); ++r) {
        for (Eigen::Index c = 0; c < V.cols(); ++c) V(r, c) = eng.normal();
    }
    FeatureMatrix X = wrap_matrix(V);

    FeatureMatrix once = prune_by_audit(X);
    CHECK(once.p() == X.p());
    CHECK(once.column_names == X.column_names);

    FeatureMatrix dup = prune_by_audit(prune_by_audit(make_matrix(
        {{1.0, 1.0, 0.3}, {2.0, 2.0, -1.0}, {3.0, 3.0, 0.7}, {4.0, 4.0, 2.0}}, {"a", "a_copy", "b"})));
    CHECK(dup.column_names == std::vector<std::string>{"a", "b"});
}

TEST_CASE("prune_by_audit breaks the exact collinear triplet") {
    FeatureMatrix X = build_exact_collinear(64, 3);
    VifTable before = vif(X);
    CHECK(before.entries[0].status == VifStatus::infinite);
    CHECK(before.entries[1].status == VifStatus::infinite);
    CHECK(before.entries[2].status == VifStatus::infinite);

    FeatureMatrix pruned = prune_by_audit(X);
    REQUIRE(pruned.p() == 2);
    VifTable after = vif(pruned);
    CHECK(after.max_finite_vif() <= 10.0);
    CHECK_FALSE(after.any_infinite());
}

TEST_CASE("prune_by_audit correlation phase enforces the rho threshold") {
    // finite VIF just above the correlation gate: 0.9 pair with VIF about 5.3
    SyntheticSpec spec;
    spec.n = 5000;
    spec.p = 3;
    spec.correlation_targets = {{0, 1, 0.9}};
    spec.beta_true = Eigen::VectorXd::Ones(3);
    spec.seed = 17;
    auto [X, y] = generate_synthetic(spec);

    FeatureMatrix pruned = prune_by_audit(X, 10.0, 0.85);
    REQUIRE(pruned.p() == 2);
    CHECK(pruned.column_names == std::vector<std::string>{"x0", "x2"});  // higher index of the pair goes
    CorrelationMatrix R = correlation_matrix(pruned);
    CHECK(std::abs(R.values(0, 1)) <= 0.85);
}

TEST_CASE("subsample_rows is deterministic, sorted, and capped") {
    rng::Engine eng(99);
    Eigen::MatrixXd V(50, 2);
    for (Eigen::Index r = 0; r < V.rows(); ++r) {
        for (Eigen::Index c = 0; c < V.cols(); ++c) V(r, c) = eng.normal();
    }
    FeatureMatrix X = wrap_matrix(V);

    FeatureMatrix a = subsample_rows(X, 20, 1);
    FeatureMatrix b = subsample_rows(X, 20, 1);
    REQUIRE(a.n() == 20);
    CHECK(a.values == b.values);
    CHECK(subsample_rows(X, 100, 1).n() == 50);

    FeatureMatrix c = subsample_rows(X, 20, 2);
    CHECK(a.values != c.values);
}
