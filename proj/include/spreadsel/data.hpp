#pragma once

// Monthly Treasury yield panels, recession indicators and the horizon-aligned
// datasets built from them.

#include "spreadsel/calendar.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace spreadsel {

/// One of the constant-maturity tenors the toolkit understands.
class MaturityLabel {
public:
    /// Throws Error(DomainError) for a code outside the known set.
    static MaturityLabel from_code(std::string_view code);
    static std::optional<MaturityLabel> try_from_code(std::string_view code);
    /// Throws Error(DomainError) for an unknown month count.
    static MaturityLabel from_months(int months);

    /// 3m, 6m, 1y, 2y, 3y, 5y, 7y, 10y, 20y, 30y in ascending order.
    static std::span<const MaturityLabel> all();

    std::string_view code() const { return code_; }
    int months() const { return months_; }

    bool operator==(const MaturityLabel& other) const { return months_ == other.months_; }
    auto operator<=>(const MaturityLabel& other) const { return months_ <=> other.months_; }

private:
    constexpr MaturityLabel(std::string_view code, int months) : code_(code), months_(months) {}
    friend struct MaturityTable;

    std::string_view code_;
    int months_;
};

/// Contiguous monthly panel of yields (percent per annum) plus optional
/// named control series on the same dates.
class YieldPanel {
public:
    YieldPanel(YearMonth first_date, std::vector<MaturityLabel> maturities, Eigen::MatrixXd yields,
               std::vector<std::string> control_names = {}, Eigen::MatrixXd controls = {});

    Eigen::Index rows() const { return yields_.rows(); }
    YearMonth first_date() const { return first_; }
    YearMonth last_date() const { return first_ + static_cast<int>(rows()) - 1; }
    YearMonth date(Eigen::Index row) const { return first_ + static_cast<int>(row); }

    const std::vector<MaturityLabel>& maturities() const { return maturities_; }
    const Eigen::MatrixXd& yields() const { return yields_; }
    const std::vector<std::string>& control_names() const { return control_names_; }
    const Eigen::MatrixXd& controls() const { return controls_; }

    /// Maturity codes followed by control names.
    std::vector<std::string> column_names() const;
    bool has_series(std::string_view name) const;
    /// Column for a maturity code or control name; throws Error(MissingSeries).
    Eigen::VectorXd series(std::string_view name) const;

private:
    YearMonth first_;
    std::vector<MaturityLabel> maturities_;
    Eigen::MatrixXd yields_;
    std::vector<std::string> control_names_;
    Eigen::MatrixXd controls_;
};

/// Monthly binary recession indicator on contiguous dates.
class RecessionSeries {
public:
    RecessionSeries(YearMonth first_date, std::vector<int> indicator);

    YearMonth first_date() const { return first_; }
    YearMonth last_date() const { return first_ + static_cast<int>(indicator_.size()) - 1; }
    const std::vector<int>& indicator() const { return indicator_; }
    bool covers(YearMonth month) const { return month >= first_date() && month <= last_date(); }
    /// Throws Error(CoverageError) outside the covered range.
    int at(YearMonth month) const;

private:
    YearMonth first_;
    std::vector<int> indicator_;
};

/// Sample window and train/test boundary. Dates refer to target months.
struct SplitConfig {
    YearMonth sample_start;
    YearMonth train_end;
    YearMonth sample_end;

    /// Throws Error(InvalidSplit) unless sample_start < train_end < sample_end.
    void validate() const;
};

/// (x_t, y_{t+k}) pairs. Rows before split_index are training rows.
struct AlignedDataset {
    int horizon_months = 0;
    YearMonth first_predictor_date;
    Eigen::MatrixXd features;
    Eigen::VectorXd targets;
    Eigen::Index split_index = 0;
    std::vector<std::string> feature_names;
    YearMonth train_end;

    Eigen::Index rows() const { return features.rows(); }
    YearMonth predictor_date(Eigen::Index row) const { return first_predictor_date + static_cast<int>(row); }
    YearMonth target_date(Eigen::Index row) const { return predictor_date(row) + horizon_months; }
    /// Index into feature_names; throws Error(MissingSeries).
    Eigen::Index column(std::string_view name) const;
};

/// Read-only row range of an AlignedDataset.
struct DatasetView {
    const AlignedDataset* parent = nullptr;
    Eigen::Index begin = 0;
    Eigen::Index count = 0;

    auto features() const { return parent->features.middleRows(begin, count); }
    auto targets() const { return parent->targets.segment(begin, count); }
    YearMonth predictor_date(Eigen::Index row) const { return parent->predictor_date(begin + row); }
};

struct MonthlySeries {
    std::vector<YearMonth> months;
    std::vector<double> values;
};

/// Merges the yield CSVs and extracts the requested maturities and controls.
/// The panel spans the months every requested series covers; a hole inside
/// that span is an error.
YieldPanel load_yield_panel(std::span<const std::filesystem::path> paths,
                            std::span<const MaturityLabel> maturities,
                            std::span<const std::string> controls = {});

RecessionSeries load_recession_series(const std::filesystem::path& path);

/// Shortest round-trip decimal formatting, so reloading is bit-exact.
void write_yield_panel(const YieldPanel& panel, const std::filesystem::path& path);
void write_recession_series(const RecessionSeries& series, const std::filesystem::path& path);

/// Arithmetic mean per calendar month, ascending by month. The result does not
/// depend on the order of observations inside a month.
MonthlySeries monthly_average(std::span<const Date> daily_dates, std::span<const double> daily_values);

/// Money-market conversion of a bill discount rate to a bond-equivalent yield,
/// both in percent: 365 d / (360 - d t).
double discount_to_bond_equivalent(double discount_rate_pct, int days_to_maturity);

/// Builds rows t with sample_start <= t and t + k <= sample_end (clipped to
/// the panel) and places the split after the last target <= train_end.
/// An empty feature_names list selects every panel column.
AlignedDataset align_dataset(const YieldPanel& panel, const RecessionSeries& recessions, int horizon_months,
                             const SplitConfig& split, std::span<const std::string> feature_names = {});

std::pair<DatasetView, DatasetView> split_views(const AlignedDataset& ds);

}  // namespace spreadsel
