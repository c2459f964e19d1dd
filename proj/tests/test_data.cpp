#include "colaudit/csv.hpp"
#include "colaudit/data.hpp"
#include "colaudit/json_io.hpp"

#include "helpers.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <set>

using namespace colaudit;
using test_util::TempDir;
using test_util::make_matrix;
using test_util::write_text;

TEST_CASE("load_csv reads numeric features and binary labels") {
    TempDir dir("csv");
    const std::string path = dir.file("basic.csv");
    write_text(path, "a,b,label\n1,2,0\n3,4,1\n5,6,0\n");

    DatasetSchema schema;
    schema.label = "label";
    auto [X, y] = load_csv(path, schema);

    REQUIRE(X.n() == 3);
    REQUIRE(X.p() == 2);
    CHECK(X.column_names == std::vector<std::string>{"a", "b"});
    CHECK(X.values(0, 0) == 1.0);
    CHECK(X.values(2, 1) == 6.0);
    CHECK(y.values(0) == 0);
    CHECK(y.values(1) == 1);
    CHECK(y.values(2) == 0);
}

TEST_CASE("load_csv one-hot encodes categorical columns in place") {
    TempDir dir("csv");
    const std::string path = dir.file("cat.csv");
    write_text(path, "n1,proto,n2,label\n1,y,10,0\n2,x,20,1\n3,y,30,1\n");

    DatasetSchema schema;
    schema.label = "label";
    schema.categorical = {"proto"};
    auto [X, y] = load_csv(path, schema);

    // categories expand lexicographically where the column stood
    REQUIRE(X.column_names == std::vector<std::string>{"n1", "proto_x", "proto_y", "n2"});
    CHECK(X.column_kinds[1].tag == ColumnKind::one_hot);
    CHECK(X.column_kinds[1].origin_category == "proto");
    CHECK(X.column_kinds[0].tag == ColumnKind::numeric);

    for (Eigen::Index r = 0; r < X.n(); ++r) {
        CHECK(X.values(r, 1) + X.values(r, 2) == 1.0);
    }
    CHECK(X.values(0, 2) == 1.0);
    CHECK(X.values(1, 1) == 1.0);
    CHECK(y.n() == 3);
}

TEST_CASE("load_csv drops schema-listed columns") {
    TempDir dir("csv");
    const std::string path = dir.file("drop.csv");
    write_text(path, "id,a,attack_cat,label\n7,1.5,dos,0\n8,2.5,recon,1\n");

    DatasetSchema schema;
    schema.label = "label";
    schema.drop = {"id", "attack_cat"};
    auto [X, y] = load_csv(path, schema);
    REQUIRE(X.column_names == std::vector<std::string>{"a"});
    CHECK(X.values(1, 0) == 2.5);
}

TEST_CASE("load_csv error paths") {
    TempDir dir("csv");
    DatasetSchema schema;
    schema.label = "label";

    SECTION("missing file") {
        CHECK_THROWS_AS(load_csv(dir.file("nope.csv"), schema), io_error);
    }
    SECTION("empty file") {
        write_text(dir.file("empty.csv"), "");
        CHECK_THROWS_AS(load_csv(dir.file("empty.csv"), schema), io_error);
    }
    SECTION("missing label column") {
        write_text(dir.file("nolabel.csv"), "a,b\n1,2\n");
        CHECK_THROWS_AS(load_csv(dir.file("nolabel.csv"), schema), io_error);
    }
    SECTION("non-numeric value reports the row") {
        write_text(dir.file("bad.csv"), "a,label\n1,0\noops,1\n");
        CHECK_THROWS_WITH(load_csv(dir.file("bad.csv"), schema), Catch::Matchers::ContainsSubstring("row 3"));
    }
    SECTION("missing value is a hard error") {
        write_text(dir.file("gap.csv"), "a,b,label\n1,,0\n2,3,1\n");
        CHECK_THROWS_AS(load_csv(dir.file("gap.csv"), schema), io_error);
    }
    SECTION("non-binary label") {
        write_text(dir.file("lab.csv"), "a,label\n1,2\n2,0\n");
        CHECK_THROWS_AS(load_csv(dir.file("lab.csv"), schema), io_error);
    }
    SECTION("ragged row") {
        write_text(dir.file("ragged.csv"), "a,b,label\n1,2,0\n3,1\n");
        CHECK_THROWS_AS(load_csv(dir.file("ragged.csv"), schema), io_error);
    }
}

TEST_CASE("feature CSV round-trips at 1e-12") {
    TempDir dir("csv");
    FeatureMatrix X = make_matrix({{1.0 / 3.0, 2.0e-17}, {-3.14159265358979, 1e12}, {0.1 + 0.2, -7.5}},
                                  {"u", "v"});
    const std::string path = dir.file("round.csv");
    write_csv(X, path);
    FeatureMatrix back = read_feature_csv(path);
    REQUIRE(back.n() == X.n());
    REQUIRE(back.column_names == X.column_names);
    CHECK((back.values - X.values).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("labeled CSV write round-trips through load_csv") {
    TempDir dir("csv");
    FeatureMatrix X = make_matrix({{0.25, 2.0}, {1.75, -4.0}, {3.5, 8.0}}, {"a", "b"});
    LabelVector y;
    y.values.resize(3);
    y.values << 1, 0, 1;
    const std::string path = dir.file("labeled.csv");
    write_csv(X, y, "label", path);

    DatasetSchema schema;
    schema.label = "label";
    auto [X2, y2] = load_csv(path, schema);
    CHECK((X2.values - X.values).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(y2.values == y.values);
}

TEST_CASE("standardize uses the sample standard deviation") {
    FeatureMatrix X = make_matrix({{2.0}, {4.0}, {6.0}}, {"a"});
    FeatureMatrix Z = standardize(X);

    REQUIRE(Z.standardized);
    CHECK(Z.values(0, 0) == Catch::Approx(-1.0).margin(1e-12));
    CHECK(Z.values(1, 0) == Catch::Approx(0.0).margin(1e-12));
    CHECK(Z.values(2, 0) == Catch::Approx(1.0).margin(1e-12));
    CHECK(Z.column_means(0) == Catch::Approx(4.0));
    CHECK(Z.column_stds(0) == Catch::Approx(2.0));
}

TEST_CASE("standardize centers constant columns and flags them") {
    FeatureMatrix X = make_matrix({{5.0, 1.0}, {5.0, 2.0}, {5.0, 3.0}}, {"c", "v"});
    FeatureMatrix Z = standardize(X);
    CHECK(Z.values.col(0).cwiseAbs().maxCoeff() == 0.0);
    CHECK(Z.is_constant(0));
    CHECK_FALSE(Z.is_constant(1));
    CHECK(Z.column_stds(0) == 1.0);  // unit divisor keeps transform invertible
}

TEST_CASE("standardizing twice is a precondition violation") {
    FeatureMatrix X = make_matrix({{2.0}, {4.0}, {6.0}});
    FeatureMatrix Z = standardize(X);
    CHECK_THROWS_AS(standardize(Z), numeric_error);
}

TEST_CASE("scaler transform maps new data into train units") {
    FeatureMatrix X = make_matrix({{2.0}, {4.0}, {6.0}});
    Scaler s = fit_scaler(X);
    Eigen::MatrixXd fresh(1, 1);
    fresh << 8.0;
    Eigen::MatrixXd z = s.transform(fresh);
    CHECK(z(0, 0) == Catch::Approx(2.0));
}

TEST_CASE("bootstrap_indices is deterministic and in range") {
    BootstrapPlan plan;
    plan.num_resamples = 3;
    plan.sample_size = 5;
    plan.seed = 7;

    auto a = bootstrap_indices(5, plan);
    auto b = bootstrap_indices(5, plan);
    REQUIRE(a.size() == 3);
    CHECK(a == b);
    for (const auto& resample : a) {
        REQUIRE(resample.size() == 5);
        for (Eigen::Index idx : resample) {
            CHECK(idx >= 0);
            CHECK(idx < 5);
        }
    }
}

TEST_CASE("bootstrap_indices with n=1 returns copies of index 0") {
    BootstrapPlan plan;
    plan.num_resamples = 2;
    plan.sample_size = 4;
    auto sets = bootstrap_indices(1, plan);
    for (const auto& resample : sets) {
        CHECK(resample == std::vector<Eigen::Index>{0, 0, 0, 0});
    }
}

TEST_CASE("bootstrap_indices differ across seeds") {
    BootstrapPlan a;
    a.num_resamples = 2;
    a.sample_size = 100;
    a.seed = 1;
    BootstrapPlan b = a;
    b.seed = 2;
    CHECK(bootstrap_indices(100, a) != bootstrap_indices(100, b));
}

TEST_CASE("bootstrap resample covers about 1 - 1/e of the rows") {
    BootstrapPlan plan;
    plan.num_resamples = 10;
    plan.sample_size = 10000;
    plan.seed = 42;
    auto sets = bootstrap_indices(10000, plan);
    const double expected = 1.0 - std::exp(-1.0);
    for (const auto& resample : sets) {
        std::set<Eigen::Index> unique(resample.begin(), resample.end());
        const double fraction = static_cast<double>(unique.size()) / 10000.0;
        CHECK(fraction == Catch::Approx(expected).margin(0.02));
    }
}

TEST_CASE("bootstrap plan validation") {
    BootstrapPlan plan;
    plan.num_resamples = 1;
    plan.sample_size = 5;
    CHECK_THROWS_AS(bootstrap_indices(5, plan), std::invalid_argument);
    plan.num_resamples = 2;
    CHECK_THROWS_AS(bootstrap_indices(0, plan), numeric_error);
}

TEST_CASE("train_test_split stratifies a balanced 10-row set") {
    LabelVector y;
    y.values.resize(10);
    y.values << 0, 1, 0, 1, 0, 1, 0, 1, 0, 1;

    TrainTestSplit split = train_test_split(y, 0.2, 3);
    REQUIRE(split.train.size() == 8);
    REQUIRE(split.test.size() == 2);

    int test_pos = 0;
    for (Eigen::Index i : split.test) test_pos += y.values(i);
    CHECK(test_pos == 1);

    // disjoint and exhaustive
    std::vector<Eigen::Index> all = split.train;
    all.insert(all.end(), split.test.begin(), split.test.end());
    std::sort(all.begin(), all.end());
    for (Eigen::Index i = 0; i < 10; ++i) CHECK(all[static_cast<std::size_t>(i)] == i);

    CHECK(std::is_sorted(split.train.begin(), split.train.end()));
    CHECK(std::is_sorted(split.test.begin(), split.test.end()));
}

TEST_CASE("train_test_split determinism and bad fractions") {
    LabelVector y;
    y.values.resize(20);
    for (Eigen::Index i = 0; i < 20; ++i) y.values(i) = static_cast<int>(i % 2);

    auto s1 = train_test_split(y, 0.25, 11);
    auto s2 = train_test_split(y, 0.25, 11);
    CHECK(s1.train == s2.train);
    CHECK(s1.test == s2.test);

    auto s3 = train_test_split(y, 0.25, 12);
    CHECK(s1.test != s3.test);

    CHECK_THROWS_AS(train_test_split(y, 0.0, 1), numeric_error);
    CHECK_THROWS_AS(train_test_split(y, 1.0, 1), numeric_error);
}

TEST_CASE("FeatureMatrix validation rejects duplicate names and non-finite values") {
    FeatureMatrix X = make_matrix({{1.0, 2.0}}, {"a", "a"});
    CHECK_THROWS_AS(X.validate(), std::invalid_argument);

    FeatureMatrix Y = make_matrix({{1.0, 2.0}}, {"a", "b"});
    Y.values(0, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(Y.validate(), std::invalid_argument);
}

TEST_CASE("select_columns and select_rows preserve metadata") {
    FeatureMatrix X = make_matrix({{1.0, 2.0, 3.0}, {4.0, 5.0, 6.0}}, {"a", "b", "c"});
    FeatureMatrix sub = X.select_columns({2, 0});
    REQUIRE(sub.column_names == std::vector<std::string>{"c", "a"});
    CHECK(sub.values(1, 0) == 6.0);
    CHECK(sub.values(1, 1) == 4.0);

    FeatureMatrix rows = X.select_rows({1, 1, 0});
    REQUIRE(rows.n() == 3);
    CHECK(rows.values(0, 0) == 4.0);
    CHECK(rows.values(2, 2) == 3.0);
}
