#include "spreadsel/experiment.hpp"

#include "spreadsel/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace spreadsel {

namespace {

using nlohmann::json;

constexpr std::array<ModelKind, 4> kKinds{ModelKind::GeneralizedML, ModelKind::SimpleML,
                                          ModelKind::GeneralizedConventional, ModelKind::SimpleConventional};

std::size_t slot(ModelKind kind) { return static_cast<std::size_t>(kind); }

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorKind::InvalidConfig, what); }

void reject_unknown_keys(const json& object, const std::set<std::string>& allowed, const std::string& where) {
    if (!object.is_object()) config_error(where + " must be a JSON object");
    for (const auto& [key, value] : object.items())
        if (!allowed.count(key)) config_error("unknown key '" + key + "' in " + where);
}

template <typename T>
T get_as(const json& object, const std::string& key) {
    try {
        return object.at(key).get<T>();
    } catch (const json::exception& e) {
        config_error("bad value for '" + key + "': " + e.what());
    }
}

YearMonth get_month(const json& object, const std::string& key) {
    try {
        return YearMonth::parse(get_as<std::string>(object, key));
    } catch (const Error&) {
        config_error("'" + key + "' must be YYYY-MM");
    }
}

std::string fixed3(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    std::string s(buf);
    if (s == "-0.000") s = "0.000";
    return s;
}

std::string shortest(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

void write_atomic(const std::filesystem::path& file, const std::string& content) {
    std::filesystem::path tmp = file;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::IoError, "cannot write " + tmp.string());
        out << content;
        if (!out) throw Error(ErrorKind::IoError, "write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, file, ec);
    if (ec) throw Error(ErrorKind::IoError, "cannot move " + tmp.string() + " into place: " + ec.message());
}

void ensure_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::IoError, "cannot create " + dir.string() + ": " + ec.message());
}

double safe_auc(const Eigen::Ref<const Eigen::VectorXd>& targets, const Eigen::Ref<const Eigen::VectorXd>& scores) {
    try {
        return auc(targets, scores);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::SingleClass) return std::nan("");
        throw;
    }
}

std::vector<RocPoint> safe_roc(const Eigen::Ref<const Eigen::VectorXd>& targets,
                               const Eigen::Ref<const Eigen::VectorXd>& scores) {
    try {
        return roc_curve(targets, scores);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::SingleClass) return {};
        throw;
    }
}

template <typename Fn>
auto annotated(int horizon, const std::string& stage, Fn&& fn) {
    try {
        return fn();
    } catch (const Error& e) {
        std::string detail = e.what();
        const std::string prefix = std::string(to_string(e.kind())) + ": ";
        if (detail.rfind(prefix, 0) == 0) detail.erase(0, prefix.size());
        throw Error(e.kind(), "horizon " + std::to_string(horizon) + ", " + stage + ": " + detail);
    }
}

std::string horizon_tag(int horizon) { return "h" + std::to_string(horizon); }

}  // namespace

// ---------------------------------------------------------------------------
// Config

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text, const std::filesystem::path& base_dir) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        config_error(std::string("config is not valid JSON: ") + e.what());
    }
    reject_unknown_keys(doc,
                        {"yield_files", "recession_file", "maturities", "horizons", "split", "weighting",
                         "forced_controls", "target_nonzero", "lambda_k_start", "output_dir"},
                        "config");

    auto resolve = [&](const std::string& p) {
        std::filesystem::path path(p);
        return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
    };

    ExperimentConfig config;
    for (const char* key : {"yield_files", "recession_file", "maturities"})
        if (!doc.contains(key)) config_error(std::string("missing required key '") + key + "'");

    for (const auto& p : get_as<std::vector<std::string>>(doc, "yield_files")) config.yield_files.push_back(resolve(p));
    config.recession_file = resolve(get_as<std::string>(doc, "recession_file"));
    for (const auto& code : get_as<std::vector<std::string>>(doc, "maturities")) {
        auto label = MaturityLabel::try_from_code(code);
        if (!label) config_error("unknown maturity code '" + code + "'");
        config.universe.push_back(*label);
    }
    if (doc.contains("horizons")) config.horizons = get_as<std::vector<int>>(doc, "horizons");
    if (doc.contains("split")) {
        const json& split = doc.at("split");
        reject_unknown_keys(split, {"sample_start", "train_end", "sample_end"}, "split");
        if (split.contains("sample_start")) config.split.sample_start = get_month(split, "sample_start");
        if (split.contains("train_end")) config.split.train_end = get_month(split, "train_end");
        if (split.contains("sample_end")) config.split.sample_end = get_month(split, "sample_end");
    }
    if (doc.contains("weighting")) config.weighting = get_as<bool>(doc, "weighting");
    if (doc.contains("forced_controls"))
        config.forced_controls = get_as<std::vector<std::string>>(doc, "forced_controls");
    if (doc.contains("target_nonzero")) config.target_nonzero = get_as<int>(doc, "target_nonzero");
    if (doc.contains("lambda_k_start")) config.lambda_k_start = get_as<int>(doc, "lambda_k_start");
    if (doc.contains("output_dir")) config.output_dir = resolve(get_as<std::string>(doc, "output_dir"));

    config.validate();
    return config;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) config_error("cannot read config " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return from_json_text(buffer.str(), path.parent_path());
}

void ExperimentConfig::validate() const {
    if (yield_files.empty()) config_error("yield_files is empty");
    if (universe.empty()) config_error("maturities is empty");
    std::set<int> seen;
    for (const auto& m : universe)
        if (!seen.insert(m.months()).second) config_error("duplicate maturity " + std::string(m.code()));
    const MaturityPair conv = conventional_pair();
    if (!seen.count(conv.first.months()) || !seen.count(conv.second.months()))
        config_error("maturities must include the conventional 10y and 3m");
    if (horizons.empty()) config_error("horizons is empty");
    for (std::size_t i = 0; i < horizons.size(); ++i) {
        if (horizons[i] <= 0) config_error("horizons must be positive");
        if (i > 0 && horizons[i] <= horizons[i - 1]) config_error("horizons must be strictly increasing");
    }
    try {
        split.validate();
    } catch (const Error& e) {
        config_error(e.what());
    }
    if (target_nonzero != 2) config_error("target_nonzero must be 2 for pair selection");
    std::set<std::string> controls(forced_controls.begin(), forced_controls.end());
    if (controls.size() != forced_controls.size()) config_error("duplicate forced control");
    for (const auto& c : forced_controls)
        if (MaturityLabel::try_from_code(c)) config_error("forced control '" + c + "' collides with a maturity code");
}

// ---------------------------------------------------------------------------
// Runner

ExperimentResult run_experiment(const ExperimentConfig& config) {
    config.validate();
    const YieldPanel panel = load_yield_panel(config.yield_files, config.universe, config.forced_controls);
    const RecessionSeries recessions = load_recession_series(config.recession_file);

    ExperimentResult result;
    result.config = config;
    for (auto kind : kKinds) result.panels[slot(kind)].kind = kind;

    for (int horizon : config.horizons) {
        HorizonResult hr;
        hr.horizon = horizon;
        hr.dataset = annotated(horizon, "alignment",
                               [&] { return align_dataset(panel, recessions, horizon, config.split); });
        const AlignedDataset& ds = hr.dataset;
        const auto [train, test] = split_views(ds);
        const Eigen::VectorXd train_targets = train.targets();

        Eigen::VectorXd train_weights, all_weights;
        if (config.weighting) {
            hr.weights = annotated(horizon, "class weights", [&] { return class_weights(train_targets); });
            train_weights = hr.weights->row_weights(train_targets);
            all_weights = hr.weights->row_weights(ds.targets);
        }

        // Panel A: L1 path over the whole universe, controls exempt.
        std::vector<bool> mask;
        for (const auto& name : ds.feature_names) mask.push_back(MaturityLabel::try_from_code(name).has_value());
        const LogitProblem problem = annotated(horizon, "panel A", [&] {
            return LogitProblem::from_raw(train.features(), train_targets, train_weights, mask, 0.0);
        });
        hr.path = annotated(horizon, "panel A", [&] {
            return sweep_path(problem, LambdaGrid::covering(problem, config.lambda_k_start), ds.feature_names);
        });
        hr.selection = annotated(horizon, "panel A", [&] { return select_pair(hr.path, problem, config.target_nonzero); });
        hr.selection.horizon_months = horizon;

        const auto selected = hr.selection.pair();
        if (!selected) throw Error(ErrorKind::CountNeverAttained, "horizon " + std::to_string(horizon) + ": survivors are not two maturities");
        const MaturityPair ml_pair{selected->first, selected->second};

        hr.models[slot(ModelKind::GeneralizedML)] = annotated(
            horizon, "panel A", [&] { return model_from_selection(ds, hr.selection, config.forced_controls, hr.weights); });
        for (auto kind : {ModelKind::SimpleML, ModelKind::GeneralizedConventional, ModelKind::SimpleConventional}) {
            const ModelSpec spec{kind, ml_pair, config.forced_controls};
            hr.models[slot(kind)] = annotated(horizon, std::string("panel ") + panel_letter(kind),
                                              [&] { return fit_spec(ds, spec, config.weighting); });
        }
        hr.generalized_ml_mle = annotated(horizon, "panel A refit", [&] {
            return fit_spec(ds, ModelSpec{ModelKind::GeneralizedML, ml_pair, config.forced_controls}, config.weighting);
        });

        auto segment_weights = [&](Eigen::Index begin, Eigen::Index count) -> Eigen::VectorXd {
            if (all_weights.size() == 0) return {};
            return all_weights.segment(begin, count);
        };
        const Eigen::VectorXd w_train = segment_weights(0, train.count);
        const Eigen::VectorXd w_test = segment_weights(test.begin, test.count);
        const Eigen::VectorXd test_targets = test.targets();

        {
            const ForecastSeries refit = forecast_series(hr.generalized_ml_mle, ds);
            hr.generalized_ml_mle_log_l =
                avg_log_likelihood(train_targets, refit.probability.head(train.count), w_train);
        }

        for (auto kind : kKinds) {
            const std::size_t s = slot(kind);
            hr.forecasts[s] = forecast_series(hr.models[s], ds);
            const Eigen::VectorXd& prob = hr.forecasts[s].probability;
            EvalReport& report = hr.reports[s];
            report.horizon = horizon;
            report.spec_kind = std::string(to_string(kind));
            report.log_l_train = avg_log_likelihood(train_targets, prob.head(train.count), w_train);
            report.log_ppl_test = avg_log_likelihood(test_targets, prob.tail(test.count), w_test);
            report.auc_train = safe_auc(train_targets, prob.head(train.count));
            report.auc_test = safe_auc(test_targets, prob.tail(test.count));
            hr.roc_test[s] = safe_roc(test_targets, prob.tail(test.count));
        }
        const std::size_t bench = slot(ModelKind::SimpleConventional);
        const Eigen::VectorXd bench_test = hr.forecasts[bench].probability.tail(test.count);
        for (auto kind : kKinds) {
            EvalReport& report = hr.reports[slot(kind)];
            report.ebf = ebf(report.log_ppl_test, hr.reports[bench].log_ppl_test);
            report.avg_weight = model_avg_weight(report.ebf);
            report.rm = relative_mse(test_targets, hr.forecasts[slot(kind)].probability.tail(test.count), bench_test);
        }

        for (auto kind : kKinds) {
            const std::size_t s = slot(kind);
            const FittedModel& model = hr.models[s];
            TableRow row;
            row.horizon = horizon;
            row.pair = model.spec.pair();
            row.beta_first = model.yield_coef_first;
            row.beta_second = model.yield_coef_second;
            row.control_coefs = model.control_coefs;
            row.lambda = model.lambda;
            row.auc_train = hr.reports[s].auc_train;
            row.auc_test = hr.reports[s].auc_test;
            row.log_l = hr.reports[s].log_l_train;
            row.log_ppl = hr.reports[s].log_ppl_test;
            row.ebf = hr.reports[s].ebf;
            result.panels[s].rows.push_back(std::move(row));
        }
        result.horizons.push_back(std::move(hr));
    }
    return result;
}

// ---------------------------------------------------------------------------
// Output

std::string format_table(const TablePanel& panel, TableFormat format) {
    if (panel.rows.empty()) throw Error(ErrorKind::EmptyInput, std::string("panel ") + panel_letter(panel.kind) + " has no rows");
    std::vector<std::string> control_names;
    for (const auto& [name, value] : panel.rows.front().control_coefs) control_names.push_back(name);

    std::ostringstream out;
    if (format == TableFormat::Csv) {
        out << "horizon,long,short,beta_long,beta_short";
        for (const auto& c : control_names) out << ",beta_" << c;
        out << ",lambda,auc_train,auc_test,log_l,log_ppl,ebf\n";
        for (const auto& r : panel.rows) {
            out << r.horizon << ',' << r.pair.first.code() << ',' << r.pair.second.code() << ',' << fixed3(r.beta_first)
                << ',' << fixed3(r.beta_second);
            for (const auto& [name, value] : r.control_coefs) out << ',' << fixed3(value);
            out << ',' << (r.lambda ? fixed3(*r.lambda) : "") << ',' << fixed3(r.auc_train) << ','
                << fixed3(r.auc_test) << ',' << fixed3(r.log_l) << ',' << fixed3(r.log_ppl) << ',' << fixed3(r.ebf)
                << '\n';
        }
        return out.str();
    }

    out << "Horizon | Pair | β";
    for (const auto& c : control_names) out << " | β_" << c;
    out << " | λ | AUC_train | AUC_test | log L | log PPL | EBF\n";
    out << "---|---|---";
    for (std::size_t c = 0; c < control_names.size(); ++c) out << "|---";
    out << "|---|---|---|---|---|---\n";
    for (const auto& r : panel.rows) {
        out << r.horizon << " | " << r.pair.str() << " | (" << fixed3(r.beta_first) << ", " << fixed3(r.beta_second)
            << ")";
        for (const auto& [name, value] : r.control_coefs) out << " | " << fixed3(value);
        out << " | " << (r.lambda ? fixed3(*r.lambda) : "") << " | " << fixed3(r.auc_train) << " | "
            << fixed3(r.auc_test) << " | " << fixed3(r.log_l) << " | " << fixed3(r.log_ppl) << " | " << fixed3(r.ebf)
            << '\n';
    }
    return out.str();
}

std::vector<std::filesystem::path> emit_tables(const std::array<TablePanel, 4>& panels, TableFormat format,
                                               const std::filesystem::path& out_dir) {
    // Render everything before touching the filesystem.
    std::vector<std::pair<std::filesystem::path, std::string>> files;
    const char* ext = format == TableFormat::Csv ? ".csv" : ".md";
    for (const auto& panel : panels)
        files.emplace_back(out_dir / (std::string("table_panel_") + panel_letter(panel.kind) + ext),
                           format_table(panel, format));
    ensure_dir(out_dir);
    std::vector<std::filesystem::path> written;
    for (const auto& [file, content] : files) {
        write_atomic(file, content);
        written.push_back(file);
    }
    return written;
}

void write_coefficient_path(const CoefficientPath& path, const std::filesystem::path& file) {
    std::ostringstream out;
    out << "lambda";
    for (const auto& name : path.feature_names) out << ',' << name;
    out << '\n';
    for (std::size_t i = 0; i < path.lambdas.size(); ++i) {
        out << shortest(path.lambdas[i]);
        for (Eigen::Index j = 0; j < path.coef_matrix.cols(); ++j)
            out << ',' << shortest(path.coef_matrix(static_cast<Eigen::Index>(i), j));
        out << '\n';
    }
    write_atomic(file, out.str());
}

void write_spread_series(const ForecastSeries& series, const std::filesystem::path& file) {
    std::ostringstream out;
    out << "date,spread,probability,is_recession,is_test\n";
    for (std::size_t i = 0; i < series.dates.size(); ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        out << series.dates[i].str() << ',' << shortest(series.spread(row)) << ','
            << shortest(series.probability(row)) << ',' << static_cast<int>(series.targets(row)) << ','
            << (row >= series.split_index ? 1 : 0) << '\n';
    }
    write_atomic(file, out.str());
}

void write_roc(const std::array<std::vector<RocPoint>, 4>& curves, const std::array<double, 4>& aucs,
               const std::filesystem::path& file) {
    std::ostringstream out;
    out << "model,fpr,tpr\n";
    std::ostringstream meta;
    meta << "auc";
    for (auto kind : kKinds) {
        for (const auto& point : curves[slot(kind)])
            out << panel_letter(kind) << ',' << shortest(point.false_positive_rate) << ','
                << shortest(point.true_positive_rate) << '\n';
        meta << ',' << panel_letter(kind) << '=' << fixed3(aucs[slot(kind)]);
    }
    meta << '\n';
    write_atomic(file, out.str());
    std::filesystem::path sidecar = file;
    sidecar += ".meta";
    write_atomic(sidecar, meta.str());
}

std::vector<std::filesystem::path> emit_plot_data(const ExperimentResult& result, const std::filesystem::path& out_dir) {
    ensure_dir(out_dir);
    std::vector<std::filesystem::path> written;
    for (const auto& hr : result.horizons) {
        const std::string tag = horizon_tag(hr.horizon);
        written.push_back(out_dir / ("coefficient_path_" + tag + ".csv"));
        write_coefficient_path(hr.path, written.back());
        written.push_back(out_dir / ("spread_series_" + tag + ".csv"));
        write_spread_series(hr.forecasts[slot(ModelKind::GeneralizedML)], written.back());
        std::array<double, 4> aucs{};
        for (auto kind : kKinds) aucs[slot(kind)] = hr.reports[slot(kind)].auc_test;
        written.push_back(out_dir / ("roc_" + tag + ".csv"));
        write_roc(hr.roc_test, aucs, written.back());
    }
    return written;
}

std::vector<std::filesystem::path> emit_reports(const ExperimentResult& result, const std::filesystem::path& out_dir) {
    ensure_dir(out_dir);
    std::ostringstream metrics;
    metrics << "horizon,panel,spec,log_l_train,log_ppl_test,ebf,avg_weight,auc_train,auc_test,rm,substantial_evidence\n";
    for (const auto& hr : result.horizons)
        for (auto kind : kKinds) {
            const EvalReport& r = hr.reports[slot(kind)];
            metrics << r.horizon << ',' << panel_letter(kind) << ',' << r.spec_kind << ',' << shortest(r.log_l_train)
                    << ',' << shortest(r.log_ppl_test) << ',' << shortest(r.ebf) << ',' << shortest(r.avg_weight)
                    << ',' << shortest(r.auc_train) << ',' << shortest(r.auc_test) << ',' << shortest(r.rm) << ','
                    << (substantial_evidence(r.ebf) ? 1 : 0) << '\n';
        }

    const ExperimentConfig& c = result.config;
    nlohmann::ordered_json summary;
    summary["split"] = {{"sample_start", c.split.sample_start.str()},
                        {"train_end", c.split.train_end.str()},
                        {"sample_end", c.split.sample_end.str()}};
    std::vector<std::string> universe;
    for (const auto& m : c.universe) universe.emplace_back(m.code());
    summary["maturities"] = universe;
    summary["weighting"] = c.weighting;
    summary["forced_controls"] = c.forced_controls;
    summary["lambda_k_start"] = c.lambda_k_start;
    nlohmann::ordered_json horizons = nlohmann::ordered_json::array();
    for (const auto& hr : result.horizons) {
        nlohmann::ordered_json h;
        h["horizon"] = hr.horizon;
        h["train_rows"] = hr.dataset.split_index;
        h["test_rows"] = hr.dataset.rows() - hr.dataset.split_index;
        h["last_train_predictor"] = hr.dataset.predictor_date(hr.dataset.split_index - 1).str();
        if (hr.weights) {
            h["recession_ratio"] = hr.weights->recession_ratio;
            h["oversampling_factor"] = hr.weights->oversampling_factor();
        }
        h["selected_pair"] = hr.selection.survivor_names;
        h["lambda_k"] = hr.selection.k_selected;
        h["lambda"] = hr.selection.lambda_selected;
        h["lambda_refined"] = hr.selection.refined;
        h["generalized_ml_refit_log_l"] = hr.generalized_ml_mle_log_l;
        bool any_flag = false;
        for (const auto& r : hr.reports) any_flag = any_flag || substantial_evidence(r.ebf);
        h["substantial_evidence_flagged"] = any_flag;
        horizons.push_back(std::move(h));
    }
    summary["horizons"] = std::move(horizons);

    const std::filesystem::path metrics_file = out_dir / "metrics.csv";
    const std::filesystem::path summary_file = out_dir / "summary.json";
    write_atomic(metrics_file, metrics.str());
    write_atomic(summary_file, summary.dump(2) + "\n");
    return {metrics_file, summary_file};
}

}  // namespace spreadsel
