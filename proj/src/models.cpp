#include "spreadsel/models.hpp"

#include "spreadsel/error.hpp"

namespace spreadsel {

namespace {

template <typename ColumnSource>
FeatureSet assemble(const ModelSpec& spec, Eigen::Index rows, ColumnSource&& column) {
    const MaturityPair pair = spec.pair();
    FeatureSet out;
    const Eigen::Index yield_cols = spec.is_simple() ? 1 : 2;
    out.values.resize(rows, yield_cols + static_cast<Eigen::Index>(spec.controls.size()));

    const Eigen::VectorXd first = column(pair.first.code());
    const Eigen::VectorXd second = column(pair.second.code());
    if (spec.is_simple()) {
        out.values.col(0) = first - second;
        out.names.push_back(std::string(pair.first.code()) + "-" + std::string(pair.second.code()));
        out.penalized.push_back(true);
    } else {
        out.values.col(0) = first;
        out.values.col(1) = second;
        out.names.emplace_back(pair.first.code());
        out.names.emplace_back(pair.second.code());
        out.penalized.insert(out.penalized.end(), {true, true});
    }
    for (std::size_t c = 0; c < spec.controls.size(); ++c) {
        out.values.col(yield_cols + static_cast<Eigen::Index>(c)) = column(spec.controls[c]);
        out.names.push_back(spec.controls[c]);
        out.penalized.push_back(false);
    }
    return out;
}

void fill_reporting(FittedModel& model) {
    const Eigen::VectorXd& b = model.fit.coefs_orig;
    const Eigen::Index yield_cols = model.spec.is_simple() ? 1 : 2;
    if (model.spec.is_simple()) {
        model.yield_coef_first = b(0);
        model.yield_coef_second = -b(0);
    } else {
        model.yield_coef_first = b(0);
        model.yield_coef_second = b(1);
    }
    model.control_coefs.clear();
    for (std::size_t c = 0; c < model.spec.controls.size(); ++c)
        model.control_coefs.emplace_back(model.spec.controls[c], b(yield_cols + static_cast<Eigen::Index>(c)));
}

}  // namespace

std::string_view to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::GeneralizedML: return "generalized_ml";
        case ModelKind::SimpleML: return "simple_ml";
        case ModelKind::GeneralizedConventional: return "generalized_conventional";
        case ModelKind::SimpleConventional: return "simple_conventional";
    }
    return "unknown";
}

char panel_letter(ModelKind kind) { return static_cast<char>('A' + static_cast<int>(kind)); }

std::string MaturityPair::str() const {
    return "(" + std::string(first.code()) + ", " + std::string(second.code()) + ")";
}

MaturityPair conventional_pair() { return {MaturityLabel::from_code("10y"), MaturityLabel::from_code("3m")}; }

MaturityPair ModelSpec::pair() const {
    if (!is_ml()) return conventional_pair();
    if (!ml_pair) throw Error(ErrorKind::InvalidConfig, std::string(to_string(kind)) + " needs a maturity pair");
    return *ml_pair;
}

FeatureSet build_features(const YieldPanel& panel, const ModelSpec& spec) {
    return assemble(spec, panel.rows(), [&](std::string_view name) { return panel.series(name); });
}

FeatureSet build_features(const AlignedDataset& ds, const ModelSpec& spec) {
    return assemble(spec, ds.rows(), [&](std::string_view name) -> Eigen::VectorXd { return ds.features.col(ds.column(name)); });
}

FittedModel fit_spec(const AlignedDataset& ds, const ModelSpec& spec, bool weighting) {
    const FeatureSet features = build_features(ds, spec);
    const auto [train, test] = split_views(ds);
    const Eigen::MatrixXd raw = features.values.topRows(train.count);
    const Eigen::VectorXd targets = train.targets();

    FittedModel model;
    model.spec = spec;
    model.horizon_months = ds.horizon_months;
    model.feature_names = features.names;
    Eigen::VectorXd weights;
    if (weighting) {
        model.weights = class_weights(targets);
        weights = model.weights->row_weights(targets);
    }
    const LogitProblem problem = LogitProblem::from_raw(raw, targets, std::move(weights),
                                                        std::vector<bool>(features.names.size(), false), 0.0);
    model.fit = fit_mle(problem);
    fill_reporting(model);
    return model;
}

FittedModel model_from_selection(const AlignedDataset& ds, const SelectionResult& selection,
                                 const std::vector<std::string>& controls, std::optional<ClassWeights> weights) {
    const auto pair = selection.pair();
    if (!pair) throw Error(ErrorKind::CountNeverAttained, "selection did not leave exactly two maturities");

    FittedModel model;
    model.spec = {ModelKind::GeneralizedML, MaturityPair{pair->first, pair->second}, controls};
    model.horizon_months = ds.horizon_months;
    model.weights = weights;
    model.lambda = selection.lambda_selected;
    model.feature_names = {std::string(pair->first.code()), std::string(pair->second.code())};
    model.feature_names.insert(model.feature_names.end(), controls.begin(), controls.end());

    const LogitFit& full = selection.fit;
    const Eigen::Index width = static_cast<Eigen::Index>(model.feature_names.size());
    model.fit = full;
    model.fit.coefs_std.resize(width);
    model.fit.coefs_orig.resize(width);
    for (Eigen::Index j = 0; j < width; ++j) {
        const Eigen::Index source = ds.column(model.feature_names[static_cast<std::size_t>(j)]);
        model.fit.coefs_std(j) = full.coefs_std(source);
        model.fit.coefs_orig(j) = full.coefs_orig(source);
    }
    fill_reporting(model);
    return model;
}

ForecastSeries forecast_series(const FittedModel& model, const AlignedDataset& ds) {
    const FeatureSet features = build_features(ds, model.spec);
    if (features.names != model.feature_names)
        throw Error(ErrorKind::LengthMismatch, "dataset features do not match the fitted model");

    ForecastSeries out;
    out.spread = features.values * model.fit.coefs_orig;
    out.spread.array() += model.fit.intercept_orig;
    out.probability.resize(out.spread.size());
    for (Eigen::Index i = 0; i < out.spread.size(); ++i) out.probability(i) = probability_from_index(out.spread(i));
    for (Eigen::Index i = 0; i < ds.rows(); ++i) out.dates.push_back(ds.predictor_date(i));
    out.targets = ds.targets;
    out.split_index = ds.split_index;
    out.last_train_date = ds.predictor_date(ds.split_index - 1);
    return out;
}

}  // namespace spreadsel
