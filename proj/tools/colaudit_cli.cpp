// colaudit: multicollinearity audits, attribution fragility metrics, and
// stability-aware training for tabular binary classification.

#include "colaudit/colaudit.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace colaudit;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitInput = 2;
constexpr int kExitNumeric = 3;

struct Options {
    std::string data;
    std::string schema;
    std::string model_file;
    std::string out = "colaudit_out";
    std::uint64_t seed = 0;

    double vif_thresh = 10.0;
    double rho_thresh = 0.85;
    int vif_rows = 5000;

    int resamples = 10;
    int sample_size = 0;  // 0: min(10000, n)
    int eval_rows = 100;  // 0: all rows

    std::string model = "logistic";
    std::vector<int> hidden;
    double learning_rate = 0.1;
    int epochs = 10;
    int batch_size = 64;
    double l2 = 0.0;
    double test_fraction = 0.25;

    double lambda = 0.0;
    int k_interval = 1;
    int inner_steps = 1;
    int penalty_resamples = 2;
    std::string grid = "0,0.01,0.1,1,10";

    std::string aggregation = "mean";
    std::string method = "linear";

    std::string rho_grid = "0,0.9,0.99,0.999";
    int synth_n = 10000;
    int synth_p = 4;
    double sigma = 1.0;

    int coalitions = 2048;
    int background_size = 100;
};

struct Dataset {
    FeatureMatrix raw;
    LabelVector y;
    Scaler scaler;
    FeatureMatrix std;
    std::string label_name;
};

Dataset load_dataset(const Options& opt) {
    if (opt.data.empty()) throw io_error("--data is required");
    if (opt.schema.empty()) throw io_error("--schema is required");
    DatasetSchema schema = load_schema(opt.schema);
    Dataset ds;
    auto [X, y] = load_csv(opt.data, schema);
    ds.raw = std::move(X);
    ds.y = std::move(y);
    ds.scaler = fit_scaler(ds.raw);
    ds.std = standardize(ds.raw, ds.scaler);
    ds.label_name = schema.label;
    return ds;
}

fs::path ensure_out_dir(const Options& opt) {
    fs::path dir(opt.out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw io_error("cannot create output directory: " + opt.out);
    return dir;
}

void write_run_meta(const fs::path& dir, const std::string& command) {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    ordered_json j;
    j["command"] = command;
    j["timestamp"] = buf;
    write_json_file(j, (dir / "run_meta.json").string());
}

BootstrapPlan make_plan(const Options& opt, Eigen::Index n) {
    BootstrapPlan plan;
    plan.num_resamples = opt.resamples;
    plan.sample_size = opt.sample_size > 0 ? opt.sample_size : std::min<Eigen::Index>(10000, n);
    plan.seed = opt.seed;
    return plan;
}

TrainConfig make_train_config(const Options& opt) {
    TrainConfig cfg;
    cfg.learning_rate = opt.learning_rate;
    cfg.epochs = opt.epochs;
    cfg.batch_size = opt.batch_size;
    cfg.seed = opt.seed;
    cfg.l2 = opt.l2;
    return cfg;
}

std::vector<Eigen::Index> hidden_widths(const Options& opt) {
    std::vector<Eigen::Index> h;
    for (int w : opt.hidden) {
        if (w <= 0) throw io_error("--hidden widths must be positive");
        h.push_back(w);
    }
    return h;
}

Aggregation parse_aggregation(const std::string& s) {
    if (s == "mean") return Aggregation::mean;
    if (s == "max") return Aggregation::max;
    if (s == "sum") return Aggregation::sum;
    throw io_error("unknown aggregation: " + s);
}

std::vector<double> parse_double_list(const std::string& s, const char* what) {
    std::vector<double> out;
    std::string cur;
    for (char c : s + ",") {
        if (c == ',') {
            if (cur.empty()) continue;
            try {
                out.push_back(std::stod(cur));
            } catch (const std::exception&) {
                throw io_error(std::string("invalid ") + what + " entry: " + cur);
            }
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (out.empty()) throw io_error(std::string("empty ") + what + " list");
    return out;
}

ModelParams train_from_flags(const Options& opt, const FeatureMatrix& X, const LabelVector& y) {
    TrainConfig cfg = make_train_config(opt);
    if (opt.model == "ols") {
        return fit_ols(X, y.values.cast<double>());
    }
    if (opt.model == "logistic") {
        return fit_logistic(X, y, cfg);
    }
    if (opt.model == "mlp") {
        return fit_mlp(X, y, cfg, hidden_widths(opt));
    }
    throw io_error("unknown model: " + opt.model);
}

ModelParams train_on_rows(const Options& opt, const FeatureMatrix& X, const LabelVector& y,
                          const std::vector<Eigen::Index>& rows, std::uint64_t seed) {
    FeatureMatrix Xr = X.select_rows(rows);
    LabelVector yr = y.select_rows(rows);
    Options o = opt;
    o.seed = seed;
    return train_from_flags(o, Xr, yr);
}

AttributionMatrix attribute_from_flags(const Options& opt, const ModelParams& m, const Eigen::MatrixXd& X_eval,
                                       const Eigen::VectorXd& baseline, const Eigen::MatrixXd& background) {
    if (opt.method == "linear") {
        if (m.kind == ModelKind::mlp) return taylor_attribution(m, X_eval, baseline);
        return linear_shap(m, X_eval, baseline);
    }
    if (opt.method == "taylor") {
        return taylor_attribution(m, X_eval, baseline);
    }
    if (opt.method == "kernel") {
        KernelConfig kc;
        kc.num_coalitions = opt.coalitions;
        kc.background_size = opt.background_size;
        kc.seed = opt.seed;
        return kernel_shap(m, X_eval, background, kc);
    }
    throw io_error("unknown attribution method: " + opt.method);
}

Eigen::MatrixXd eval_slice(const Options& opt, const Eigen::MatrixXd& X) {
    if (opt.eval_rows <= 0 || X.rows() <= opt.eval_rows) return X;
    return X.topRows(opt.eval_rows);
}

void print_vif_table(const VifTable& table, std::size_t top_k) {
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
    std::printf("%-28s %12s %10s\n", "feature", "VIF", "status");
    for (std::size_t i = 0; i < order.size() && i < top_k; ++i) {
        const auto& e = table.entries[order[i]];
        if (e.status == VifStatus::infinite) {
            std::printf("%-28s %12s %10s\n", e.name.c_str(), "inf", to_string(e.status));
        } else {
            std::printf("%-28s %12.3f %10s\n", e.name.c_str(), e.vif, to_string(e.status));
        }
    }
}

int run_audit(const Options& opt) {
    Dataset ds = load_dataset(opt);
    fs::path dir = ensure_out_dir(opt);

    AuditReport report;
    report.vif_thresh = opt.vif_thresh;
    report.rho_thresh = opt.rho_thresh;
    report.correlation = correlation_matrix(ds.raw);
    report.clusters = correlation_clusters(report.correlation, opt.rho_thresh);
    report.vif = vif(subsample_rows(ds.raw, opt.vif_rows, opt.seed));
    for (Eigen::Index i = 0; i < ds.raw.p(); ++i) {
        const auto& e = report.vif.entries[static_cast<std::size_t>(i)];
        if (e.status == VifStatus::infinite || e.vif > opt.vif_thresh) report.flagged_high_vif.push_back(i);
        for (Eigen::Index j = 0; j < ds.raw.p(); ++j) {
            if (j != i && std::abs(report.correlation.values(i, j)) > opt.rho_thresh) {
                report.flagged_high_corr.push_back(i);
                break;
            }
        }
    }

    ordered_json j = audit_report_to_json(report);
    j["provenance"] = make_provenance(opt.seed, {{"vif_rows", opt.vif_rows}});
    write_json_file(j, (dir / "audit.json").string());
    write_vif_table_csv(report.vif, (dir / "vif_table.csv").string());
    write_json_file(j["clusters"], (dir / "clusters.json").string());
    write_run_meta(dir, "audit");

    print_vif_table(report.vif, 15);
    if (!report.flagged_high_vif.empty()) {
        std::printf("flagged severe (VIF > %.6g):", opt.vif_thresh);
        for (Eigen::Index f : report.flagged_high_vif) {
            std::printf(" %s", ds.raw.column_names[static_cast<std::size_t>(f)].c_str());
        }
        std::printf("\n");
        return kExitValidation;
    }
    std::printf("no severe features\n");
    return kExitOk;
}

int run_prune(const Options& opt) {
    Dataset ds = load_dataset(opt);
    fs::path dir = ensure_out_dir(opt);

    FeatureMatrix pruned = prune_by_audit(ds.raw, opt.vif_thresh, opt.rho_thresh);
    write_csv(pruned, ds.y, ds.label_name, (dir / "pruned.csv").string());

    ordered_json j;
    j["kept"] = pruned.column_names;
    ordered_json removed = ordered_json::array();
    for (const auto& name : ds.raw.column_names) {
        if (std::find(pruned.column_names.begin(), pruned.column_names.end(), name) == pruned.column_names.end()) {
            removed.push_back(name);
        }
    }
    j["removed"] = removed;
    j["provenance"] = make_provenance(opt.seed, {{"vif_thresh", opt.vif_thresh}, {"rho_thresh", opt.rho_thresh}});
    write_json_file(j, (dir / "prune_report.json").string());
    write_run_meta(dir, "prune");

    std::printf("kept %zu of %zu features; pruned dataset at %s\n", pruned.column_names.size(),
                ds.raw.column_names.size(), (dir / "pruned.csv").c_str());
    return kExitOk;
}

int run_train(const Options& opt) {
    Dataset ds = load_dataset(opt);
    fs::path dir = ensure_out_dir(opt);

    TrainTestSplit split = train_test_split(ds.y, opt.test_fraction, opt.seed);
    FeatureMatrix X_train = ds.std.select_rows(split.train);
    LabelVector y_train = ds.y.select_rows(split.train);
    FeatureMatrix X_test = ds.std.select_rows(split.test);
    LabelVector y_test = ds.y.select_rows(split.test);

    ModelParams m = train_from_flags(opt, X_train, y_train);

    SavedModel sm;
    sm.model = m;
    sm.scaler = ds.scaler;
    sm.baseline = X_train.values.colwise().mean();
    sm.label_name = ds.label_name;
    save_model(sm, (dir / "model.json").string());

    ordered_json j;
    j["train"] = metric_set_to_json(evaluate(m, X_train, y_train));
    j["test"] = metric_set_to_json(evaluate(m, X_test, y_test));
    j["provenance"] = make_provenance(opt.seed, {{"model", opt.model}, {"test_fraction", opt.test_fraction}});
    write_json_file(j, (dir / "metrics.json").string());
    write_run_meta(dir, "train");

    std::printf("model saved to %s; test accuracy %.4f\n", (dir / "model.json").c_str(),
                j["test"]["accuracy"].get<double>());
    return kExitOk;
}

int run_explain(const Options& opt) {
    if (opt.model_file.empty()) throw io_error("--model-file is required");
    Dataset ds = load_dataset(opt);
    fs::path dir = ensure_out_dir(opt);
    SavedModel sm = load_model(opt.model_file);
    if (sm.scaler.means.size() != ds.raw.p()) throw io_error("model was trained on a different feature set");

    Eigen::MatrixXd X_std = sm.scaler.transform(ds.raw.values);
    Eigen::MatrixXd X_eval = eval_slice(opt, X_std);
    AttributionMatrix A = attribute_from_flags(opt, sm.model, X_eval, sm.baseline, X_std);
    A.column_names = ds.raw.column_names;

    write_attribution_csv(A, (dir / "attributions.csv").string());
    ordered_json j = attribution_meta_to_json(A);
    j["provenance"] = make_provenance(opt.seed, {{"method", opt.method}});
    write_json_file(j, (dir / "attributions_meta.json").string());
    write_run_meta(dir, "explain");

    std::printf("wrote %lld x %lld attributions (%s) to %s\n", static_cast<long long>(A.n()),
                static_cast<long long>(A.p()), to_string(A.method), (dir / "attributions.csv").c_str());
    return kExitOk;
}

std::vector<AttributionMatrix> bootstrap_from_flags(const Options& opt, const FeatureMatrix& X_std,
                                                    const LabelVector& y) {
    const Eigen::MatrixXd X_eval = eval_slice(opt, X_std.values);
    const Eigen::VectorXd baseline = X_std.values.colwise().mean();
    BootstrapSpec spec;
    spec.retrain = [&](const std::vector<Eigen::Index>& rows, std::uint64_t seed) {
        return train_on_rows(opt, X_std, y, rows, seed);
    };
    spec.attribute = [&, X_eval, baseline](const ModelParams& m) {
        return attribute_from_flags(opt, m, X_eval, baseline, X_std.values);
    };
    return bootstrap_attributions(X_std.n(), spec, make_plan(opt, X_std.n()));
}

int run_fragility(const Options& opt) {
    Dataset ds = load_dataset(opt);
    fs::path dir = ensure_out_dir(opt);

    auto samples = bootstrap_from_flags(opt, ds.std, ds.y);
    FragilityReport frag = fragility_scores(samples);
    StabilityReport stab = stability_report(samples);

    ordered_json jf = fragility_report_to_json(frag);
    jf["provenance"] = make_provenance(opt.seed, {{"model", opt.model}, {"method", opt.method}, {"resamples", opt.resamples}});
    write_json_file(jf, (dir / "fragility.json").string());
    write_json_file(stability_report_to_json(stab), (dir / "stability.json").string());
    write_run_meta(dir, "fragility");

    std::printf("mean fragility %.6g; tau@20 %.4f; tau@50 %.4f\n", frag.mean_fragility(),
                stab.at_k(20).tau_mean, stab.at_k(50).tau_mean);
    return kExitOk;
}

int run_caa_filter(const Options& opt) {
    if (opt.model_file.empty()) throw io_error("--model-file is required");
    Dataset ds = load_dataset(opt);
    fs::path dir = ensure_out_dir(opt);
    SavedModel sm = load_model(opt.model_file);
    if (sm.scaler.means.size() != ds.raw.p()) throw io_error("model was trained on a different feature set");

    Eigen::MatrixXd X_std = sm.scaler.transform(ds.raw.values);
    Eigen::MatrixXd X_eval = eval_slice(opt, X_std);
    AttributionMatrix A = attribute_from_flags(opt, sm.model, X_eval, sm.baseline, X_std);
    A.column_names = ds.raw.column_names;

    FeatureMatrix X_for_corr = ds.raw;
    auto [filtered, mapping] = caa_filter(A, X_for_corr, opt.rho_thresh, parse_aggregation(opt.aggregation));

    write_matrix_csv((dir / "filtered_attributions.csv").string(), filtered.cluster_names, filtered.values);
    ordered_json j = cluster_mapping_to_json(mapping, ds.raw.column_names);
    j["provenance"] = make_provenance(opt.seed, {{"aggregation", opt.aggregation}, {"rho_thresh", opt.rho_thresh}});
    write_json_file(j, (dir / "clusters.json").string());
    write_run_meta(dir, "caa-filter");

    std::printf("%zu features -> %zu clusters (%s aggregation)\n", ds.raw.column_names.size(),
                mapping.clusters.size(), opt.aggregation.c_str());
    return kExitOk;
}

SharpConfig make_sharp_config(const Options& opt) {
    SharpConfig cfg;
    cfg.lambda = opt.lambda;
    cfg.fragility_interval = opt.k_interval;
    cfg.inner_steps = opt.inner_steps;
    cfg.penalty_resamples = opt.penalty_resamples;
    cfg.base = make_train_config(opt);
    return cfg;
}

int run_sharp(const Options& opt) {
    if (opt.model == "ols") throw io_error("sharp requires a differentiable model (logistic or mlp)");
    Dataset ds = load_dataset(opt);
    fs::path dir = ensure_out_dir(opt);

    TrainTestSplit split = train_test_split(ds.y, opt.test_fraction, opt.seed);
    FeatureMatrix X_train = ds.std.select_rows(split.train);
    LabelVector y_train = ds.y.select_rows(split.train);
    FeatureMatrix X_test = ds.std.select_rows(split.test);
    LabelVector y_test = ds.y.select_rows(split.test);

    SharpConfig cfg = make_sharp_config(opt);
    SharpLog log;
    ModelParams m = train_sharp(X_train, y_train, opt.model == "mlp" ? hidden_widths(opt) : std::vector<Eigen::Index>{},
                                cfg, &log);

    SavedModel sm;
    sm.model = m;
    sm.scaler = ds.scaler;
    sm.baseline = X_train.values.colwise().mean();
    sm.label_name = ds.label_name;
    save_model(sm, (dir / "model.json").string());

    ordered_json j;
    j["test"] = metric_set_to_json(evaluate(m, X_test, y_test));
    j["lambda"] = opt.lambda;
    j["penalty_evaluations"] = log.penalty_evaluations;
    j["penalty_values"] = log.penalty_values;
    j["provenance"] = make_provenance(opt.seed, {{"lambda", opt.lambda}, {"k_interval", opt.k_interval}});
    write_json_file(j, (dir / "sharp.json").string());
    write_run_meta(dir, "sharp");

    std::printf("sharp model saved; %d penalty evaluations; test accuracy %.4f\n", log.penalty_evaluations,
                j["test"]["accuracy"].get<double>());
    return kExitOk;
}

int run_ablate(const Options& opt) {
    if (opt.model == "ols") throw io_error("ablate requires a differentiable model (logistic or mlp)");
    Dataset ds = load_dataset(opt);
    fs::path dir = ensure_out_dir(opt);

    TrainTestSplit split = train_test_split(ds.y, opt.test_fraction, opt.seed);
    FeatureMatrix X_train = ds.std.select_rows(split.train);
    LabelVector y_train = ds.y.select_rows(split.train);
    FeatureMatrix X_test = ds.std.select_rows(split.test);
    LabelVector y_test = ds.y.select_rows(split.test);

    std::vector<double> grid = parse_double_list(opt.grid, "lambda grid");
    AblationResult result = lambda_ablation(
        X_train.values, y_train.values, X_test.values, y_test.values,
        opt.model == "mlp" ? hidden_widths(opt) : std::vector<Eigen::Index>{}, grid, make_sharp_config(opt),
        make_plan(opt, X_train.n()), opt.eval_rows > 0 ? opt.eval_rows : X_test.n());

    ordered_json j;
    j["rows"] = ablation_to_json(result);
    j["provenance"] = make_provenance(opt.seed, {{"grid", opt.grid}, {"model", opt.model}});
    write_json_file(j, (dir / "ablation.json").string());
    write_ablation_csv(result, (dir / "ablation.csv").string());
    write_run_meta(dir, "ablate");

    std::printf("%-8s %-10s %-12s %-10s\n", "lambda", "accuracy", "fragility", "tau@50");
    for (const auto& row : result.rows) {
        std::printf("%-8.3g %-10.4f %-12.6g %-10.4f\n", row.lambda, row.metrics.accuracy, row.mean_fragility,
                    row.tau_top50);
    }
    return kExitOk;
}

int run_theorem_check(const Options& opt) {
    fs::path dir = ensure_out_dir(opt);

    SyntheticSpec tmpl;
    tmpl.n = opt.synth_n;
    tmpl.p = opt.synth_p;
    tmpl.noise_sigma = opt.sigma;
    tmpl.beta_true = Eigen::VectorXd::LinSpaced(opt.synth_p, 1.0, 0.25);
    tmpl.seed = opt.seed;

    BootstrapPlan plan;
    plan.num_resamples = opt.resamples;
    plan.sample_size = opt.synth_n;
    plan.seed = opt.seed;

    std::vector<double> grid = parse_double_list(opt.rho_grid, "rho grid");
    TheoremCheckReport report = variance_bound_experiment(grid, tmpl, plan);
    NonIdentifiabilityResult nid = non_identifiability_check(64, opt.seed);

    SyntheticSpec id_spec = tmpl;
    id_spec.n = std::min<Eigen::Index>(tmpl.n, 2000);
    id_spec.correlation_targets = {{0, 1, 0.9}};
    auto [X_id, y_id] = generate_synthetic(id_spec);
    VarianceIdentityResult ident = ols_variance_identity_check(X_id, opt.sigma);

    ordered_json j = theorem_report_to_json(report);
    j["non_identifiability"] = {{"gamma_residual", nid.gamma_residual},
                                {"max_prediction_delta", nid.max_prediction_delta},
                                {"max_attribution_delta", nid.max_attribution_delta},
                                {"max_attribution_error", nid.max_attribution_error}};
    j["variance_identity_max_rel_error"] = ident.max_rel_error;
    j["provenance"] = make_provenance(opt.seed, {{"rho_grid", opt.rho_grid}, {"n", opt.synth_n}, {"resamples", opt.resamples}});
    write_json_file(j, (dir / "theorem.json").string());
    write_theorem_csv(report, (dir / "theorem.csv").string());
    write_run_meta(dir, "theorem-check");

    const bool spearman_ok = report.spearman_vif_var >= 0.9;
    const bool ratio_ok = report.max_ratio_to_predicted <= 3.0;
    const bool nid_ok = nid.max_prediction_delta <= 1e-10 && nid.max_attribution_error <= 1e-8;
    const bool ident_ok = ident.max_rel_error <= 1e-6;
    std::printf("monotone: %s\n", report.monotone_tracked ? "yes" : "NO");
    std::printf("spearman(VIF, var): %.4f (%s)\n", report.spearman_vif_var, spearman_ok ? "ok" : "FAIL");
    std::printf("max ratio to analytic variance: %.3f (%s)\n", report.max_ratio_to_predicted, ratio_ok ? "ok" : "FAIL");
    std::printf("bound violations at 20%% slack: %d\n", report.bound_violations);
    std::printf("non-identifiability: pred delta %.3g, attr err %.3g (%s)\n", nid.max_prediction_delta,
                nid.max_attribution_error, nid_ok ? "ok" : "FAIL");
    std::printf("variance identity max rel error: %.3g (%s)\n", ident.max_rel_error, ident_ok ? "ok" : "FAIL");

    const bool pass = report.monotone_tracked && spearman_ok && ratio_ok && report.bound_violations == 0 && nid_ok && ident_ok;
    return pass ? kExitOk : kExitValidation;
}

int run_pipeline(const Options& opt) {
    Dataset ds = load_dataset(opt);
    fs::path dir = ensure_out_dir(opt);

    FeatureMatrix pruned_raw = prune_by_audit(ds.raw, opt.vif_thresh, opt.rho_thresh);
    std::vector<Eigen::Index> kept;
    for (const auto& name : pruned_raw.column_names) kept.push_back(ds.raw.column_index(name));

    TrainTestSplit split = train_test_split(ds.y, opt.test_fraction, opt.seed);

    auto arm = [&](const FeatureMatrix& raw) {
        Scaler scaler = fit_scaler(raw);
        FeatureMatrix std_all = standardize(raw, scaler);
        FeatureMatrix X_train = std_all.select_rows(split.train);
        LabelVector y_train = ds.y.select_rows(split.train);
        FeatureMatrix X_test = std_all.select_rows(split.test);
        LabelVector y_test = ds.y.select_rows(split.test);

        ModelParams m = train_from_flags(opt, X_train, y_train);
        MetricSet metrics = evaluate(m, X_test, y_test);

        Options frag_opt = opt;
        auto samples = bootstrap_from_flags(frag_opt, X_train, y_train);
        FragilityReport frag = fragility_scores(samples);
        StabilityReport stab = stability_report(samples);

        ordered_json j;
        j["metrics"] = metric_set_to_json(metrics);
        j["mean_fragility"] = frag.mean_fragility();
        j["tau_top20"] = stab.at_k(20).tau_mean;
        j["tau_top50"] = stab.at_k(50).tau_mean;
        j["num_features"] = raw.p();
        return std::make_pair(j, metrics);
    };

    auto [control_json, control_metrics] = arm(ds.raw);
    auto [hypothesis_json, hypothesis_metrics] = arm(pruned_raw);

    auto drop_pct = [](double c, double h) { return c != 0.0 ? 100.0 * (c - h) / c : 0.0; };
    ordered_json j;
    j["control"] = control_json;
    j["hypothesis"] = hypothesis_json;
    j["removed_features"] = static_cast<Eigen::Index>(ds.raw.p() - pruned_raw.p());
    j["metric_drop_percent"] = {
        {"accuracy", drop_pct(control_metrics.accuracy, hypothesis_metrics.accuracy)},
        {"f1", drop_pct(control_metrics.f1, hypothesis_metrics.f1)},
        {"roc_auc", control_metrics.roc_auc && hypothesis_metrics.roc_auc
                        ? ordered_json(drop_pct(*control_metrics.roc_auc, *hypothesis_metrics.roc_auc))
                        : ordered_json(nullptr)}};
    j["provenance"] = make_provenance(opt.seed, {{"model", opt.model},
                                                 {"vif_thresh", opt.vif_thresh},
                                                 {"rho_thresh", opt.rho_thresh},
                                                 {"resamples", opt.resamples}});
    write_json_file(j, (dir / "pipeline.json").string());
    write_run_meta(dir, "pipeline");

    std::printf("control:   acc %.4f, tau@50 %.4f, fragility %.6g (%lld features)\n",
                control_metrics.accuracy, control_json["tau_top50"].get<double>(),
                control_json["mean_fragility"].get<double>(), static_cast<long long>(ds.raw.p()));
    std::printf("hypothesis: acc %.4f, tau@50 %.4f, fragility %.6g (%lld features)\n",
                hypothesis_metrics.accuracy, hypothesis_json["tau_top50"].get<double>(),
                hypothesis_json["mean_fragility"].get<double>(), static_cast<long long>(pruned_raw.p()));
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"colaudit: multicollinearity audits and attribution fragility analysis"};
    app.require_subcommand(1);
    Options opt;

    auto add_data_flags = [&](CLI::App* sub) {
        sub->add_option("--data", opt.data, "input CSV path");
        sub->add_option("--schema", opt.schema, "dataset schema JSON path");
    };
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--seed", opt.seed, "master seed");
        sub->add_option("--out", opt.out, "output directory");
    };
    auto add_thresholds = [&](CLI::App* sub) {
        sub->add_option("--vif-thresh", opt.vif_thresh, "VIF threshold");
        sub->add_option("--rho-thresh", opt.rho_thresh, "absolute correlation threshold");
    };
    auto add_model_flags = [&](CLI::App* sub) {
        sub->add_option("--model", opt.model, "ols|logistic|mlp");
        sub->add_option("--hidden", opt.hidden, "MLP hidden widths")->delimiter(',');
        sub->add_option("--lr", opt.learning_rate, "learning rate");
        sub->add_option("--epochs", opt.epochs, "training epochs");
        sub->add_option("--batch-size", opt.batch_size, "mini-batch size");
        sub->add_option("--l2", opt.l2, "L2 penalty");
        sub->add_option("--test-fraction", opt.test_fraction, "held-out fraction");
    };
    auto add_bootstrap_flags = [&](CLI::App* sub) {
        sub->add_option("--resamples", opt.resamples, "bootstrap resamples");
        sub->add_option("--sample-size", opt.sample_size, "bootstrap sample size (0: min(10000, n))");
        sub->add_option("--eval-rows", opt.eval_rows, "rows to attribute (0: all)");
    };
    auto add_method_flags = [&](CLI::App* sub) {
        sub->add_option("--method", opt.method, "linear|taylor|kernel");
        sub->add_option("--coalitions", opt.coalitions, "kernel SHAP coalition budget");
        sub->add_option("--background-size", opt.background_size, "kernel SHAP background rows");
    };

    auto* audit_cmd = app.add_subcommand("audit", "correlations, clusters, and VIF table");
    add_data_flags(audit_cmd);
    add_common(audit_cmd);
    add_thresholds(audit_cmd);
    audit_cmd->add_option("--vif-rows", opt.vif_rows, "row subsample for VIF");

    auto* prune_cmd = app.add_subcommand("prune", "remove high-VIF and high-correlation features");
    add_data_flags(prune_cmd);
    add_common(prune_cmd);
    add_thresholds(prune_cmd);

    auto* train_cmd = app.add_subcommand("train", "fit a model on the standardized features");
    add_data_flags(train_cmd);
    add_common(train_cmd);
    add_model_flags(train_cmd);

    auto* explain_cmd = app.add_subcommand("explain", "attribute rows under a saved model");
    add_data_flags(explain_cmd);
    add_common(explain_cmd);
    add_method_flags(explain_cmd);
    explain_cmd->add_option("--model-file", opt.model_file, "saved model JSON");
    explain_cmd->add_option("--eval-rows", opt.eval_rows, "rows to attribute (0: all)");

    auto* frag_cmd = app.add_subcommand("fragility", "bootstrap attribution fragility and rank stability");
    add_data_flags(frag_cmd);
    add_common(frag_cmd);
    add_model_flags(frag_cmd);
    add_bootstrap_flags(frag_cmd);
    add_method_flags(frag_cmd);

    auto* caa_cmd = app.add_subcommand("caa-filter", "cluster correlated features and aggregate attributions");
    add_data_flags(caa_cmd);
    add_common(caa_cmd);
    add_method_flags(caa_cmd);
    caa_cmd->add_option("--model-file", opt.model_file, "saved model JSON");
    caa_cmd->add_option("--rho-thresh", opt.rho_thresh, "clustering correlation threshold");
    caa_cmd->add_option("--aggregation", opt.aggregation, "mean|max|sum");
    caa_cmd->add_option("--eval-rows", opt.eval_rows, "rows to attribute (0: all)");

    auto* sharp_cmd = app.add_subcommand("sharp", "train with the fragility penalty");
    add_data_flags(sharp_cmd);
    add_common(sharp_cmd);
    add_model_flags(sharp_cmd);
    sharp_cmd->add_option("--lambda", opt.lambda, "penalty weight");
    sharp_cmd->add_option("--k-interval", opt.k_interval, "epochs between penalty evaluations");
    sharp_cmd->add_option("--inner-steps", opt.inner_steps, "temporary-refit gradient steps");
    sharp_cmd->add_option("--penalty-resamples", opt.penalty_resamples, "attribution samples per penalty");

    auto* ablate_cmd = app.add_subcommand("ablate", "metric/fragility curves over a lambda grid");
    add_data_flags(ablate_cmd);
    add_common(ablate_cmd);
    add_model_flags(ablate_cmd);
    add_bootstrap_flags(ablate_cmd);
    ablate_cmd->add_option("--grid", opt.grid, "comma-separated lambda grid");
    ablate_cmd->add_option("--k-interval", opt.k_interval, "epochs between penalty evaluations");
    ablate_cmd->add_option("--inner-steps", opt.inner_steps, "temporary-refit gradient steps");
    ablate_cmd->add_option("--penalty-resamples", opt.penalty_resamples, "attribution samples per penalty");

    auto* theorem_cmd = app.add_subcommand("theorem-check", "synthetic validation of the variance bound");
    add_common(theorem_cmd);
    theorem_cmd->add_option("--rho-grid", opt.rho_grid, "comma-separated correlation grid");
    theorem_cmd->add_option("--n", opt.synth_n, "synthetic rows");
    theorem_cmd->add_option("--p", opt.synth_p, "synthetic features");
    theorem_cmd->add_option("--sigma", opt.sigma, "response noise sigma");
    theorem_cmd->add_option("--resamples", opt.resamples, "bootstrap resamples")->default_val(200);

    auto* pipeline_cmd = app.add_subcommand("pipeline", "control-vs-pruned comparison report");
    add_data_flags(pipeline_cmd);
    add_common(pipeline_cmd);
    add_thresholds(pipeline_cmd);
    add_model_flags(pipeline_cmd);
    add_bootstrap_flags(pipeline_cmd);
    add_method_flags(pipeline_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInput;
    }

    try {
        if (audit_cmd->parsed()) return run_audit(opt);
        if (prune_cmd->parsed()) return run_prune(opt);
        if (train_cmd->parsed()) return run_train(opt);
        if (explain_cmd->parsed()) return run_explain(opt);
        if (frag_cmd->parsed()) return run_fragility(opt);
        if (caa_cmd->parsed()) return run_caa_filter(opt);
        if (sharp_cmd->parsed()) return run_sharp(opt);
        if (ablate_cmd->parsed()) return run_ablate(opt);
        if (theorem_cmd->parsed()) return run_theorem_check(opt);
        if (pipeline_cmd->parsed()) return run_pipeline(opt);
    } catch (const io_error& e) {
        std::fprintf(stderr, "input error: %s\n", e.what());
        return kExitInput;
    } catch (const numeric_error& e) {
        std::fprintf(stderr, "numerical error: %s\n", e.what());
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitNumeric;
    }
    return kExitOk;
}
