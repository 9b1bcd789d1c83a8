#include "spreadsel/data.hpp"

#include "spreadsel/error.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace spreadsel {

struct MaturityTable {
    static constexpr std::array<MaturityLabel, 10> labels{{
        {"3m", 3}, {"6m", 6}, {"1y", 12}, {"2y", 24}, {"3y", 36},
        {"5y", 60}, {"7y", 84}, {"10y", 120}, {"20y", 240}, {"30y", 360},
    }};
};

std::optional<MaturityLabel> MaturityLabel::try_from_code(std::string_view code) {
    for (const auto& label : MaturityTable::labels)
        if (label.code() == code) return label;
    return std::nullopt;
}

MaturityLabel MaturityLabel::from_code(std::string_view code) {
    if (auto label = try_from_code(code)) return *label;
    throw Error(ErrorKind::DomainError, "unknown maturity code '" + std::string(code) + "'");
}

MaturityLabel MaturityLabel::from_months(int months) {
    for (const auto& label : MaturityTable::labels)
        if (label.months() == months) return label;
    throw Error(ErrorKind::DomainError, "no maturity label for " + std::to_string(months) + " months");
}

std::span<const MaturityLabel> MaturityLabel::all() { return MaturityTable::labels; }

// ---------------------------------------------------------------------------

YieldPanel::YieldPanel(YearMonth first_date, std::vector<MaturityLabel> maturities, Eigen::MatrixXd yields,
                       std::vector<std::string> control_names, Eigen::MatrixXd controls)
    : first_(first_date),
      maturities_(std::move(maturities)),
      yields_(std::move(yields)),
      control_names_(std::move(control_names)),
      controls_(std::move(controls)) {
    if (yields_.cols() != static_cast<Eigen::Index>(maturities_.size()))
        throw Error(ErrorKind::LengthMismatch, "yield matrix columns do not match maturity list");
    if (control_names_.empty() && controls_.size() == 0) controls_.resize(yields_.rows(), 0);
    if (controls_.cols() != static_cast<Eigen::Index>(control_names_.size()) || controls_.rows() != yields_.rows())
        throw Error(ErrorKind::LengthMismatch, "control matrix shape does not match the panel");
    if (!yields_.allFinite() || !controls_.allFinite())
        throw Error(ErrorKind::MalformedRow, "panel contains non-finite cells");
}

std::vector<std::string> YieldPanel::column_names() const {
    std::vector<std::string> names;
    for (const auto& m : maturities_) names.emplace_back(m.code());
    names.insert(names.end(), control_names_.begin(), control_names_.end());
    return names;
}

bool YieldPanel::has_series(std::string_view name) const {
    auto names = column_names();
    return std::find(names.begin(), names.end(), name) != names.end();
}

Eigen::VectorXd YieldPanel::series(std::string_view name) const {
    for (std::size_t j = 0; j < maturities_.size(); ++j)
        if (maturities_[j].code() == name) return yields_.col(static_cast<Eigen::Index>(j));
    for (std::size_t j = 0; j < control_names_.size(); ++j)
        if (control_names_[j] == name) return controls_.col(static_cast<Eigen::Index>(j));
    throw Error(ErrorKind::MissingSeries, "series '" + std::string(name) + "' not in panel");
}

RecessionSeries::RecessionSeries(YearMonth first_date, std::vector<int> indicator)
    : first_(first_date), indicator_(std::move(indicator)) {
    if (indicator_.empty()) throw Error(ErrorKind::EmptyInput, "recession series is empty");
    for (std::size_t i = 0; i < indicator_.size(); ++i)
        if (indicator_[i] != 0 && indicator_[i] != 1)
            throw Error(ErrorKind::MalformedRow,
                        "recession indicator must be 0 or 1 at " + (first_ + static_cast<int>(i)).str());
}

int RecessionSeries::at(YearMonth month) const {
    if (!covers(month))
        throw Error(ErrorKind::CoverageError, "recession series does not cover " + month.str());
    return indicator_[static_cast<std::size_t>(month - first_)];
}

void SplitConfig::validate() const {
    if (!(sample_start < train_end && train_end < sample_end))
        throw Error(ErrorKind::InvalidSplit, "need sample_start < train_end < sample_end, got " +
                                                 sample_start.str() + ", " + train_end.str() + ", " +
                                                 sample_end.str());
}

Eigen::Index AlignedDataset::column(std::string_view name) const {
    for (std::size_t j = 0; j < feature_names.size(); ++j)
        if (feature_names[j] == name) return static_cast<Eigen::Index>(j);
    throw Error(ErrorKind::MissingSeries, "feature '" + std::string(name) + "' not in dataset");
}

// ---------------------------------------------------------------------------
// CSV

namespace {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<int> line_numbers;
};

std::vector<std::string> split_commas(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
    CsvTable table;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split_commas(line);
        if (table.header.empty()) {
            table.header = std::move(cells);
            continue;
        }
        if (cells.size() != table.header.size())
            throw Error(ErrorKind::MalformedRow, path.string() + ":" + std::to_string(line_no) + ": expected " +
                                                     std::to_string(table.header.size()) + " cells");
        table.rows.push_back(std::move(cells));
        table.line_numbers.push_back(line_no);
    }
    if (table.header.empty() || table.header.front() != "date")
        throw Error(ErrorKind::MalformedRow, path.string() + ": header must start with 'date'");
    return table;
}

double parse_decimal(const std::string& cell, const std::string& where) {
    double value = 0.0;
    const char* begin = cell.data();
    const char* end = cell.data() + cell.size();
    if (begin != end && *begin == '+') ++begin;
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end || !std::isfinite(value))
        throw Error(ErrorKind::MalformedRow, where + ": cannot parse '" + cell + "'");
    return value;
}

std::string format_shortest(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, ptr);
}

}  // namespace

YieldPanel load_yield_panel(std::span<const std::filesystem::path> paths, std::span<const MaturityLabel> maturities,
                            std::span<const std::string> controls) {
    std::vector<std::string> wanted;
    for (const auto& m : maturities) wanted.emplace_back(m.code());
    wanted.insert(wanted.end(), controls.begin(), controls.end());
    if (wanted.empty()) throw Error(ErrorKind::EmptyInput, "no series requested");

    // month index -> value, per requested series; the first file that carries
    // a series owns it.
    std::vector<std::map<int, double>> observed(wanted.size());
    std::vector<bool> found(wanted.size(), false);

    for (const auto& path : paths) {
        const CsvTable table = read_csv(path);
        std::vector<std::pair<std::size_t, std::size_t>> owned;  // (wanted idx, csv column)
        for (std::size_t w = 0; w < wanted.size(); ++w) {
            if (found[w]) continue;
            auto it = std::find(table.header.begin() + 1, table.header.end(), wanted[w]);
            if (it == table.header.end()) continue;
            found[w] = true;
            owned.emplace_back(w, static_cast<std::size_t>(it - table.header.begin()));
        }
        if (owned.empty()) continue;

        for (std::size_t r = 0; r < table.rows.size(); ++r) {
            const auto& row = table.rows[r];
            const std::string where = path.string() + ":" + std::to_string(table.line_numbers[r]);
            YearMonth month;
            try {
                month = YearMonth::parse(row[0]);
            } catch (const Error&) {
                throw Error(ErrorKind::MalformedRow, where + ": bad date '" + row[0] + "'");
            }
            for (auto [w, col] : owned) {
                if (row[col].empty()) continue;  // missing observation
                const double value = parse_decimal(row[col], where);
                if (!observed[w].emplace(month.index(), value).second)
                    throw Error(ErrorKind::MalformedRow, where + ": duplicate month " + month.str());
            }
        }
    }

    for (std::size_t w = 0; w < wanted.size(); ++w)
        if (!found[w] || observed[w].empty())
            throw Error(ErrorKind::MissingSeries, "series '" + wanted[w] + "' not found in any input file");

    int start = observed[0].begin()->first;
    int end = observed[0].rbegin()->first;
    for (const auto& obs : observed) {
        start = std::max(start, obs.begin()->first);
        end = std::min(end, obs.rbegin()->first);
    }
    if (start > end) throw Error(ErrorKind::EmptyInput, "requested series share no common months");

    const Eigen::Index rows = end - start + 1;
    const YearMonth first = YearMonth(0, 1) + start;
    Eigen::MatrixXd yields(rows, static_cast<Eigen::Index>(maturities.size()));
    Eigen::MatrixXd ctrl(rows, static_cast<Eigen::Index>(controls.size()));

    for (Eigen::Index i = 0; i < rows; ++i) {
        const int month = start + static_cast<int>(i);
        for (std::size_t w = 0; w < wanted.size(); ++w) {
            auto it = observed[w].find(month);
            if (it == observed[w].end())
                throw Error(ErrorKind::GapInDates,
                            "month " + (YearMonth(0, 1) + month).str() + " missing for series '" + wanted[w] + "'");
            if (w < maturities.size())
                yields(i, static_cast<Eigen::Index>(w)) = it->second;
            else
                ctrl(i, static_cast<Eigen::Index>(w - maturities.size())) = it->second;
        }
    }

    return YieldPanel(first, std::vector<MaturityLabel>(maturities.begin(), maturities.end()), std::move(yields),
                      std::vector<std::string>(controls.begin(), controls.end()), std::move(ctrl));
}

RecessionSeries load_recession_series(const std::filesystem::path& path) {
    const CsvTable table = read_csv(path);
    if (table.header.size() != 2 || table.header[1] != "recession")
        throw Error(ErrorKind::MalformedRow, path.string() + ": header must be 'date,recession'");
    if (table.rows.empty()) throw Error(ErrorKind::EmptyInput, path.string() + ": no rows");

    std::map<int, int> values;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const std::string where = path.string() + ":" + std::to_string(table.line_numbers[r]);
        const YearMonth month = YearMonth::parse(table.rows[r][0]);
        const std::string& cell = table.rows[r][1];
        if (cell != "0" && cell != "1")
            throw Error(ErrorKind::MalformedRow, where + ": recession must be 0 or 1, got '" + cell + "'");
        if (!values.emplace(month.index(), cell == "1" ? 1 : 0).second)
            throw Error(ErrorKind::MalformedRow, where + ": duplicate month " + month.str());
    }

    std::vector<int> indicator;
    int expected = values.begin()->first;
    for (auto [month, value] : values) {
        if (month != expected)
            throw Error(ErrorKind::GapInDates, "recession series missing month " + (YearMonth(0, 1) + expected).str());
        indicator.push_back(value);
        ++expected;
    }
    return RecessionSeries(YearMonth(0, 1) + values.begin()->first, std::move(indicator));
}

void write_yield_panel(const YieldPanel& panel, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
    out << "date";
    for (const auto& name : panel.column_names()) out << ',' << name;
    out << '\n';
    for (Eigen::Index i = 0; i < panel.rows(); ++i) {
        out << panel.date(i).str();
        for (Eigen::Index j = 0; j < panel.yields().cols(); ++j) out << ',' << format_shortest(panel.yields()(i, j));
        for (Eigen::Index j = 0; j < panel.controls().cols(); ++j)
            out << ',' << format_shortest(panel.controls()(i, j));
        out << '\n';
    }
    if (!out) throw Error(ErrorKind::IoError, "write failed for " + path.string());
}

void write_recession_series(const RecessionSeries& series, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
    out << "date,recession\n";
    for (std::size_t i = 0; i < series.indicator().size(); ++i)
        out << (series.first_date() + static_cast<int>(i)).str() << ',' << series.indicator()[i] << '\n';
    if (!out) throw Error(ErrorKind::IoError, "write failed for " + path.string());
}

// ---------------------------------------------------------------------------

MonthlySeries monthly_average(std::span<const Date> daily_dates, std::span<const double> daily_values) {
    if (daily_dates.size() != daily_values.size())
        throw Error(ErrorKind::LengthMismatch, "dates and values differ in length");
    if (daily_dates.empty()) throw Error(ErrorKind::EmptyInput, "no daily observations");

    std::map<YearMonth, std::vector<double>> by_month;
    for (std::size_t i = 0; i < daily_dates.size(); ++i) {
        if (!std::isfinite(daily_values[i]))
            throw Error(ErrorKind::MalformedRow, "non-finite daily value");
        by_month[daily_dates[i].year_month()].push_back(daily_values[i]);
    }

    MonthlySeries out;
    for (auto& [month, values] : by_month) {
        // Summing in sorted order makes the mean independent of input order.
        std::sort(values.begin(), values.end());
        double sum = 0.0;
        for (double v : values) sum += v;
        out.months.push_back(month);
        out.values.push_back(sum / static_cast<double>(values.size()));
    }
    return out;
}

double discount_to_bond_equivalent(double discount_rate_pct, int days_to_maturity) {
    if (!(discount_rate_pct >= 0.0 && discount_rate_pct < 100.0))
        throw Error(ErrorKind::DomainError, "discount rate must lie in [0, 100)");
    if (days_to_maturity <= 0) throw Error(ErrorKind::DomainError, "days to maturity must be positive");
    const double d = discount_rate_pct / 100.0;
    const double denominator = 360.0 - d * days_to_maturity;
    if (denominator <= 0.0) throw Error(ErrorKind::DomainError, "non-positive conversion denominator");
    return 100.0 * (365.0 * d) / denominator;
}

AlignedDataset align_dataset(const YieldPanel& panel, const RecessionSeries& recessions, int horizon_months,
                             const SplitConfig& split, std::span<const std::string> feature_names) {
    split.validate();
    if (horizon_months < 1) throw Error(ErrorKind::DomainError, "horizon must be at least one month");

    const YearMonth first = std::max(split.sample_start, panel.first_date());
    const YearMonth last = std::min(split.sample_end - horizon_months, panel.last_date());
    if (last < first)
        throw Error(ErrorKind::HorizonTooLong,
                    "no predictor month survives a " + std::to_string(horizon_months) + "-month horizon");
    if (!recessions.covers(first + horizon_months) || !recessions.covers(last + horizon_months))
        throw Error(ErrorKind::CoverageError, "recession series " + recessions.first_date().str() + ".." +
                                                  recessions.last_date().str() + " does not cover targets " +
                                                  (first + horizon_months).str() + ".." +
                                                  (last + horizon_months).str());

    std::vector<std::string> names = feature_names.empty()
                                          ? panel.column_names()
                                          : std::vector<std::string>(feature_names.begin(), feature_names.end());

    AlignedDataset ds;
    ds.horizon_months = horizon_months;
    ds.first_predictor_date = first;
    ds.train_end = split.train_end;
    const Eigen::Index rows = (last - first) + 1;
    const Eigen::Index offset = first - panel.first_date();
    ds.features.resize(rows, static_cast<Eigen::Index>(names.size()));
    for (std::size_t j = 0; j < names.size(); ++j)
        ds.features.col(static_cast<Eigen::Index>(j)) = panel.series(names[j]).segment(offset, rows);
    ds.feature_names = std::move(names);

    ds.targets.resize(rows);
    ds.split_index = 0;
    for (Eigen::Index i = 0; i < rows; ++i) {
        const YearMonth target = first + static_cast<int>(i) + horizon_months;
        ds.targets(i) = recessions.at(target);
        if (target <= split.train_end) ds.split_index = i + 1;
    }
    if (ds.split_index <= 0 || ds.split_index >= rows)
        throw Error(ErrorKind::InvalidSplit, "train/test split at " + split.train_end.str() +
                                                 " leaves an empty partition for horizon " +
                                                 std::to_string(horizon_months));
    return ds;
}

std::pair<DatasetView, DatasetView> split_views(const AlignedDataset& ds) {
    return {DatasetView{&ds, 0, ds.split_index}, DatasetView{&ds, ds.split_index, ds.rows() - ds.split_index}};
}

}  // namespace spreadsel
