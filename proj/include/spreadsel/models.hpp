#pragma once

// The four nested spread specifications and their unpenalized fits.

#include "spreadsel/data.hpp"
#include "spreadsel/selection.hpp"
#include "spreadsel/sparse_logit.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace spreadsel {

enum class ModelKind { GeneralizedML, SimpleML, GeneralizedConventional, SimpleConventional };

std::string_view to_string(ModelKind kind);
/// Table panel letter: A, B, C, D.
char panel_letter(ModelKind kind);

struct MaturityPair {
    MaturityLabel first;   // enters with the positive sign in a simple spread
    MaturityLabel second;

    std::string str() const;  // "(10y, 3m)"
    bool operator==(const MaturityPair&) const = default;
};

MaturityPair conventional_pair();

struct ModelSpec {
    ModelKind kind = ModelKind::SimpleConventional;
    std::optional<MaturityPair> ml_pair;
    std::vector<std::string> controls;  // always unpenalized

    bool is_simple() const { return kind == ModelKind::SimpleML || kind == ModelKind::SimpleConventional; }
    bool is_ml() const { return kind == ModelKind::GeneralizedML || kind == ModelKind::SimpleML; }
    /// Conventional kinds ignore ml_pair. Throws Error(InvalidConfig) for an
    /// ML kind without a pair.
    MaturityPair pair() const;
};

struct FeatureSet {
    Eigen::MatrixXd values;
    std::vector<std::string> names;
    std::vector<bool> penalized;
};

/// Generalized: [first, second, controls...]; simple: [first - second, controls...].
FeatureSet build_features(const YieldPanel& panel, const ModelSpec& spec);
FeatureSet build_features(const AlignedDataset& ds, const ModelSpec& spec);

struct FittedModel {
    ModelSpec spec;
    int horizon_months = 0;
    LogitFit fit;                        // coefficients line up with feature_names
    std::vector<std::string> feature_names;
    double yield_coef_first = 0.0;       // coefficient on the first maturity
    double yield_coef_second = 0.0;      // coefficient on the second maturity
    std::vector<std::pair<std::string, double>> control_coefs;
    std::optional<ClassWeights> weights;  // set when fitted with class weighting
    std::optional<double> lambda;         // set for the penalized selection model
};

/// Unpenalized maximum likelihood on the training rows, class-weighted when
/// `weighting` is on (r from the training targets).
FittedModel fit_spec(const AlignedDataset& ds, const ModelSpec& spec, bool weighting);

/// GeneralizedML model carrying the penalized coefficients of a selection,
/// restricted to the selected pair and the controls.
FittedModel model_from_selection(const AlignedDataset& ds, const SelectionResult& selection,
                                 const std::vector<std::string>& controls, std::optional<ClassWeights> weights);

struct ForecastSeries {
    std::vector<YearMonth> dates;  // predictor months
    Eigen::VectorXd spread;        // b0 + sum_j b_j x_j, original scale
    Eigen::VectorXd probability;   // phi(-spread)
    Eigen::VectorXd targets;       // y at date + k
    Eigen::Index split_index = 0;
    YearMonth last_train_date;     // predictor month of the last training row
};

ForecastSeries forecast_series(const FittedModel& model, const AlignedDataset& ds);

}  // namespace spreadsel
