#pragma once

// Config-driven reproduction runs: pair selection, the four nested models,
// scoring, and table / plot-data output.

#include "spreadsel/data.hpp"
#include "spreadsel/evaluation.hpp"
#include "spreadsel/models.hpp"
#include "spreadsel/selection.hpp"

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace spreadsel {

struct ExperimentConfig {
    std::vector<std::filesystem::path> yield_files;
    std::filesystem::path recession_file;
    std::vector<MaturityLabel> universe;
    std::vector<int> horizons{3, 6, 9, 12, 15, 18, 21, 24};
    SplitConfig split{YearMonth(1961, 6), YearMonth(1995, 12), YearMonth(2020, 7)};
    bool weighting = false;
    std::vector<std::string> forced_controls;
    int target_nonzero = 2;
    int lambda_k_start = -100;
    std::filesystem::path output_dir{"out"};

    /// Parses the JSON document; relative paths resolve against `base_dir`.
    /// Unknown keys and malformed values throw Error(InvalidConfig).
    static ExperimentConfig from_json_text(const std::string& text, const std::filesystem::path& base_dir = {});
    static ExperimentConfig load(const std::filesystem::path& path);

    void validate() const;
};

struct TableRow {
    int horizon = 0;
    MaturityPair pair = conventional_pair();
    double beta_first = 0.0;
    double beta_second = 0.0;
    std::vector<std::pair<std::string, double>> control_coefs;
    std::optional<double> lambda;
    double auc_train = 0.0;
    double auc_test = 0.0;
    double log_l = 0.0;
    double log_ppl = 0.0;
    double ebf = 1.0;
};

struct TablePanel {
    ModelKind kind = ModelKind::GeneralizedML;
    std::vector<TableRow> rows;
};

struct HorizonResult {
    int horizon = 0;
    AlignedDataset dataset;
    std::optional<ClassWeights> weights;
    CoefficientPath path;
    SelectionResult selection;
    std::array<FittedModel, 4> models;  // indexed by ModelKind
    std::array<ForecastSeries, 4> forecasts;
    std::array<EvalReport, 4> reports;
    std::array<std::vector<RocPoint>, 4> roc_test;
    /// Unpenalized generalized fit on the selected pair, for the nesting check
    /// against the simple spread of the same pair.
    FittedModel generalized_ml_mle;
    double generalized_ml_mle_log_l = 0.0;
};

struct ExperimentResult {
    ExperimentConfig config;
    std::vector<HorizonResult> horizons;
    std::array<TablePanel, 4> panels;
};

enum class TableFormat { Csv, Markdown };

ExperimentResult run_experiment(const ExperimentConfig& config);

/// Writes one file per panel. Nothing is written if any panel is empty.
std::vector<std::filesystem::path> emit_tables(const std::array<TablePanel, 4>& panels, TableFormat format,
                                               const std::filesystem::path& out_dir);

std::string format_table(const TablePanel& panel, TableFormat format);

/// Columns: lambda, one per feature.
void write_coefficient_path(const CoefficientPath& path, const std::filesystem::path& file);
/// Columns: date, spread, probability, is_recession, is_test.
void write_spread_series(const ForecastSeries& series, const std::filesystem::path& file);
/// Columns: model, fpr, tpr; the AUC per model goes to `<file>.meta`.
void write_roc(const std::array<std::vector<RocPoint>, 4>& curves, const std::array<double, 4>& aucs,
               const std::filesystem::path& file);

/// Coefficient paths, Panel A spread series and test-period ROC curves for every horizon.
std::vector<std::filesystem::path> emit_plot_data(const ExperimentResult& result, const std::filesystem::path& out_dir);

/// Per-model metrics (including RM and averaging weight) and a run summary.
std::vector<std::filesystem::path> emit_reports(const ExperimentResult& result, const std::filesystem::path& out_dir);

}  // namespace spreadsel
