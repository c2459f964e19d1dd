#pragma once

#include "colaudit/attribution.hpp"
#include "colaudit/audit.hpp"
#include "colaudit/caa.hpp"
#include "colaudit/csv.hpp"
#include "colaudit/data.hpp"
#include "colaudit/fragility.hpp"
#include "colaudit/model.hpp"
#include "colaudit/sharp.hpp"
#include "colaudit/theorem.hpp"
#include "colaudit/types.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <string>
#include <vector>

namespace colaudit {

using ordered_json = nlohmann::ordered_json;

inline constexpr const char* kToolVersion = "0.1.0";

inline void write_json_file(const ordered_json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot write file: " + path);
    out << j.dump(2) << "\n";
}

inline ordered_json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open file: " + path);
    ordered_json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw io_error("invalid JSON in " + path + ": " + e.what());
    }
    return j;
}

inline DatasetSchema load_schema(const std::string& path) {
    ordered_json j = read_json_file(path);
    DatasetSchema schema;
    if (!j.contains("label") || !j["label"].is_string()) throw io_error("schema needs a string 'label' field");
    schema.label = j["label"].get<std::string>();
    if (j.contains("categorical")) schema.categorical = j["categorical"].get<std::vector<std::string>>();
    if (j.contains("drop")) schema.drop = j["drop"].get<std::vector<std::string>>();
    return schema;
}

/// Seeds/thresholds/version block attached to every report. Timestamps are
/// deliberately kept out so identical runs produce byte-identical files.
inline ordered_json make_provenance(std::uint64_t seed, ordered_json extra = {}) {
    ordered_json p;
    p["tool"] = "colaudit";
    p["version"] = kToolVersion;
    p["seed"] = seed;
    if (!extra.is_null()) {
        for (auto& [k, v] : extra.items()) p[k] = v;
    }
    return p;
}

inline ordered_json vif_value_json(const VifEntry& e) {
    if (e.status == VifStatus::infinite) return "inf";
    return e.vif;
}

inline ordered_json audit_report_to_json(const AuditReport& r) {
    ordered_json j;
    j["thresholds"] = {{"vif", r.vif_thresh}, {"rho", r.rho_thresh}};
    j["vif"] = ordered_json::array();
    for (const auto& e : r.vif.entries) {
        j["vif"].push_back({{"name", e.name}, {"vif", vif_value_json(e)}, {"r2", e.r_squared}, {"status", to_string(e.status)}});
    }
    j["under_determined"] = r.vif.under_determined;
    j["clusters"] = ordered_json::array();
    for (const auto& cluster : r.clusters) {
        ordered_json names = ordered_json::array();
        for (Eigen::Index f : cluster) names.push_back(r.correlation.column_names[static_cast<std::size_t>(f)]);
        j["clusters"].push_back(names);
    }
    auto name_set = [&](const std::vector<Eigen::Index>& idx) {
        ordered_json names = ordered_json::array();
        for (Eigen::Index f : idx) names.push_back(r.correlation.column_names[static_cast<std::size_t>(f)]);
        return names;
    };
    j["flagged"] = {{"high_corr", name_set(r.flagged_high_corr)}, {"high_vif", name_set(r.flagged_high_vif)}};
    return j;
}

inline void write_vif_table_csv(const VifTable& table, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot write file: " + path);
    out << "name,vif,r2,status\n";
    std::vector<std::size_t> order(table.entries.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& ea = table.entries[a];
        const auto& eb = table.entries[b];
        const bool ia = ea.status == VifStatus::infinite;
        const bool ib = eb.status == VifStatus::infinite;
        if (ia != ib) return ia;
        if (ea.vif != eb.vif) return ea.vif > eb.vif;
        return a < b;
    });
    for (std::size_t i : order) {
        const auto& e = table.entries[i];
        out << e.name << ",";
        if (e.status == VifStatus::infinite) {
            out << "inf";
        } else {
            out << detail::format_full_precision(e.vif);
        }
        out << "," << detail::format_full_precision(e.r_squared) << "," << to_string(e.status) << "\n";
    }
}

inline ordered_json train_config_to_json(const TrainConfig& c) {
    return {{"learning_rate", c.learning_rate}, {"epochs", c.epochs}, {"batch_size", c.batch_size},
            {"seed", c.seed},                   {"l2", c.l2}};
}

inline TrainConfig train_config_from_json(const ordered_json& j) {
    TrainConfig c;
    c.learning_rate = j.at("learning_rate").get<double>();
    c.epochs = j.at("epochs").get<int>();
    c.batch_size = j.at("batch_size").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.l2 = j.at("l2").get<double>();
    return c;
}

inline ordered_json model_to_json(const ModelParams& m) {
    ordered_json j;
    j["kind"] = to_string(m.kind);
    j["layer_shapes"] = m.layer_shapes;
    j["weights"] = m.weights;
    j["feature_names"] = m.feature_names;
    j["training_config"] = train_config_to_json(m.training_config);
    j["rank_deficient"] = m.rank_deficient;
    return j;
}

inline ModelParams model_from_json(const ordered_json& j) {
    ModelParams m;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "linear_ols") m.kind = ModelKind::linear_ols;
    else if (kind == "logistic") m.kind = ModelKind::logistic;
    else if (kind == "mlp") m.kind = ModelKind::mlp;
    else throw io_error("unknown model kind: " + kind);
    m.layer_shapes = j.at("layer_shapes").get<std::vector<Eigen::Index>>();
    m.weights = j.at("weights").get<std::vector<double>>();
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    if (j.contains("training_config")) m.training_config = train_config_from_json(j["training_config"]);
    if (j.contains("rank_deficient")) m.rank_deficient = j["rank_deficient"].get<bool>();
    return m;
}

/// Trained model bundled with its standardisation and attribution baseline,
/// so explain/fragility commands can reuse it on raw inputs.
struct SavedModel {
    ModelParams model;
    Scaler scaler;
    Eigen::VectorXd baseline;  // standardized-space column means
    std::string label_name;
};

inline void save_model(const SavedModel& sm, const std::string& path) {
    ordered_json j;
    j["model"] = model_to_json(sm.model);
    j["scaler"] = {{"means", std::vector<double>(sm.scaler.means.data(), sm.scaler.means.data() + sm.scaler.means.size())},
                   {"stds", std::vector<double>(sm.scaler.stds.data(), sm.scaler.stds.data() + sm.scaler.stds.size())},
                   {"constant", std::vector<int>(sm.scaler.constant.begin(), sm.scaler.constant.end())}};
    j["baseline"] = std::vector<double>(sm.baseline.data(), sm.baseline.data() + sm.baseline.size());
    j["label_name"] = sm.label_name;
    write_json_file(j, path);
}

inline SavedModel load_model(const std::string& path) {
    ordered_json j = read_json_file(path);
    SavedModel sm;
    sm.model = model_from_json(j.at("model"));
    auto means = j.at("scaler").at("means").get<std::vector<double>>();
    auto stds = j.at("scaler").at("stds").get<std::vector<double>>();
    auto constant = j.at("scaler").at("constant").get<std::vector<int>>();
    sm.scaler.means = Eigen::Map<Eigen::VectorXd>(means.data(), static_cast<Eigen::Index>(means.size()));
    sm.scaler.stds = Eigen::Map<Eigen::VectorXd>(stds.data(), static_cast<Eigen::Index>(stds.size()));
    sm.scaler.constant.assign(constant.begin(), constant.end());
    auto baseline = j.at("baseline").get<std::vector<double>>();
    sm.baseline = Eigen::Map<Eigen::VectorXd>(baseline.data(), static_cast<Eigen::Index>(baseline.size()));
    sm.label_name = j.value("label_name", std::string{});
    return sm;
}

inline ordered_json metric_set_to_json(const MetricSet& m) {
    ordered_json j;
    j["accuracy"] = m.accuracy;
    j["precision"] = m.precision;
    j["recall"] = m.recall;
    j["f1"] = m.f1;
    if (m.roc_auc) j["roc_auc"] = *m.roc_auc;
    else j["roc_auc"] = nullptr;
    return j;
}

inline ordered_json attribution_meta_to_json(const AttributionMatrix& A) {
    ordered_json j;
    j["method"] = to_string(A.method);
    j["model_ref"] = A.model_ref;
    j["columns"] = A.column_names;
    j["baseline"] = std::vector<double>(A.baseline.data(), A.baseline.data() + A.baseline.size());
    j["rows"] = A.n();
    return j;
}

inline void write_attribution_csv(const AttributionMatrix& A, const std::string& path) {
    write_matrix_csv(path, A.column_names, A.values);
}

inline ordered_json fragility_report_to_json(const FragilityReport& r) {
    ordered_json j;
    j["epsilon"] = r.epsilon;
    j["num_resamples"] = r.num_resamples;
    j["eval_rows"] = r.eval_rows;
    j["mean_fragility"] = r.mean_fragility();
    j["features"] = ordered_json::array();
    for (Eigen::Index i = 0; i < r.fragility.size(); ++i) {
        j["features"].push_back({{"name", r.feature_names[static_cast<std::size_t>(i)]},
                                 {"var_phi", r.var_phi(i)},
                                 {"mean_abs_phi", r.mean_abs_phi(i)},
                                 {"fragility", r.fragility(i)}});
    }
    j["ranked_by_fragility"] = ordered_json::array();
    for (Eigen::Index f : r.ranked_by_fragility) {
        j["ranked_by_fragility"].push_back(r.feature_names[static_cast<std::size_t>(f)]);
    }
    return j;
}

inline ordered_json stability_report_to_json(const StabilityReport& r) {
    ordered_json j;
    j["ranking_basis"] = r.ranking_basis;
    j["entries"] = ordered_json::array();
    for (const auto& e : r.entries) {
        ordered_json pairwise = ordered_json::array();
        for (Eigen::Index a = 0; a < e.pairwise.rows(); ++a) {
            ordered_json row = ordered_json::array();
            for (Eigen::Index b = 0; b < e.pairwise.cols(); ++b) row.push_back(e.pairwise(a, b));
            pairwise.push_back(row);
        }
        j["entries"].push_back({{"k_requested", e.k_requested},
                                {"k_used", e.k_used},
                                {"clamped", e.clamped},
                                {"tau_mean", e.tau_mean},
                                {"pairwise", pairwise}});
    }
    return j;
}

inline ordered_json cluster_mapping_to_json(const ClusterMapping& m, const std::vector<std::string>& feature_names) {
    ordered_json j;
    j["threshold"] = m.rho_thresh;
    j["aggregation"] = to_string(m.aggregation);
    j["clusters"] = ordered_json::array();
    for (const auto& cluster : m.clusters) {
        ordered_json names = ordered_json::array();
        for (Eigen::Index f : cluster) names.push_back(feature_names[static_cast<std::size_t>(f)]);
        j["clusters"].push_back(names);
    }
    return j;
}

inline ordered_json theorem_report_to_json(const TheoremCheckReport& r) {
    ordered_json j;
    j["rho_grid"] = r.rho_grid;
    j["c_hat"] = r.c_hat;
    j["spearman_vif_var"] = r.spearman_vif_var;
    j["bound_violations"] = r.bound_violations;
    j["monotone_tracked"] = r.monotone_tracked;
    j["max_ratio_to_predicted"] = r.max_ratio_to_predicted;
    j["points"] = ordered_json::array();
    for (const auto& rec : r.points) {
        j["points"].push_back({{"rho", rec.rho_target},
                               {"feature", rec.feature},
                               {"vif", rec.vif},
                               {"var_phi", rec.var_phi},
                               {"predicted", rec.predicted}});
    }
    return j;
}

inline void write_theorem_csv(const TheoremCheckReport& r, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot write file: " + path);
    out << "rho,feature,vif,var_phi,predicted\n";
    for (const auto& rec : r.points) {
        out << rec.rho_target << "," << rec.feature << "," << detail::format_full_precision(rec.vif) << ","
            << detail::format_full_precision(rec.var_phi) << "," << detail::format_full_precision(rec.predicted)
            << "\n";
    }
}

inline ordered_json ablation_to_json(const AblationResult& r) {
    ordered_json j = ordered_json::array();
    for (const auto& row : r.rows) {
        j.push_back({{"lambda", row.lambda},
                     {"metrics", metric_set_to_json(row.metrics)},
                     {"mean_fragility", row.mean_fragility},
                     {"tau_top50", row.tau_top50},
                     {"wall_seconds", row.wall_seconds}});
    }
    return j;
}

inline void write_ablation_csv(const AblationResult& r, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot write file: " + path);
    out << "lambda,accuracy,f1,roc_auc,fragility,tau_top50\n";
    for (const auto& row : r.rows) {
        out << row.lambda << "," << row.metrics.accuracy << "," << row.metrics.f1 << ",";
        if (row.metrics.roc_auc) out << *row.metrics.roc_auc;
        out << "," << row.mean_fragility << "," << row.tau_top50 << "\n";
    }
}

}  // namespace colaudit
