#pragma once

#include "colaudit/types.hpp"

#include <Eigen/Dense>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <random>
#include <string>
#include <vector>

namespace test_util {

inline colaudit::FeatureMatrix make_matrix(std::initializer_list<std::initializer_list<double>> rows,
                                           std::vector<std::string> names = {}) {
    colaudit::FeatureMatrix X;
    const auto n = static_cast<Eigen::Index>(rows.size());
    const auto p = static_cast<Eigen::Index>(rows.begin()->size());
    X.values.resize(n, p);
    Eigen::Index r = 0;
    for (const auto& row : rows) {
        Eigen::Index c = 0;
        for (double v : row) X.values(r, c++) = v;
        ++r;
    }
    if (names.empty()) {
        for (Eigen::Index c = 0; c < p; ++c) names.push_back("f" + std::to_string(c));
    }
    X.column_names = std::move(names);
    X.column_kinds.assign(static_cast<std::size_t>(p), {colaudit::ColumnKind::numeric, ""});
    X.constant_columns.assign(static_cast<std::size_t>(p), 0);
    return X;
}

inline colaudit::FeatureMatrix wrap_matrix(Eigen::MatrixXd values, std::vector<std::string> names = {}) {
    colaudit::FeatureMatrix X;
    X.values = std::move(values);
    if (names.empty()) {
        for (Eigen::Index c = 0; c < X.values.cols(); ++c) names.push_back("f" + std::to_string(c));
    }
    X.column_names = std::move(names);
    X.column_kinds.assign(static_cast<std::size_t>(X.values.cols()), {colaudit::ColumnKind::numeric, ""});
    X.constant_columns.assign(static_cast<std::size_t>(X.values.cols()), 0);
    return X;
}

/// Scratch directory unique to this test process, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("colaudit_" + tag + "_" + std::to_string(rd()) + "_" + std::to_string(::getpid()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string file(const std::string& name) const { return (path_ / name).string(); }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

inline std::string read_text(const std::string& path) {
    std::ifstream in(path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace test_util
