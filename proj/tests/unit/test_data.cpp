#include "spreadsel/calendar.hpp"
#include "spreadsel/data.hpp"
#include "spreadsel/error.hpp"
#include "synthetic.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>

using namespace spreadsel;

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

ErrorKind kind_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an Error");
    return ErrorKind::IoError;
}

std::string message_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.what();
    }
    return {};
}

std::vector<MaturityLabel> labels(std::initializer_list<const char*> codes) {
    std::vector<MaturityLabel> out;
    for (const char* c : codes) out.push_back(MaturityLabel::from_code(c));
    return out;
}

}  // namespace

TEST_CASE("YearMonth parsing and arithmetic") {
    const YearMonth m = YearMonth::parse("1995-12");
    CHECK(m.year() == 1995);
    CHECK(m.month() == 12);
    CHECK((m + 1).str() == "1996-01");
    CHECK((m - 12).str() == "1994-12");
    CHECK(YearMonth(2020, 7) - YearMonth(1961, 6) == 709);
    CHECK(YearMonth(1961, 6) < YearMonth(1961, 7));
    for (const char* bad : {"1995-13", "1995-00", "95-12", "1995/12", "1995-1", "abcd-ef", ""})
        CHECK(kind_of([&] { YearMonth::parse(bad); }) == ErrorKind::MalformedRow);
}

TEST_CASE("MaturityLabel code and month count are a bijection") {
    const std::vector<std::pair<std::string, int>> expected{{"3m", 3},   {"6m", 6},   {"1y", 12},  {"2y", 24},
                                                            {"3y", 36},  {"5y", 60},  {"7y", 84},  {"10y", 120},
                                                            {"20y", 240}, {"30y", 360}};
    REQUIRE(MaturityLabel::all().size() == expected.size());
    std::set<int> months;
    for (const auto& [code, count] : expected) {
        const auto label = MaturityLabel::from_code(code);
        CHECK(label.months() == count);
        CHECK(MaturityLabel::from_months(count).code() == code);
        months.insert(count);
    }
    CHECK(months.size() == expected.size());
    CHECK_FALSE(MaturityLabel::try_from_code("4y").has_value());
    CHECK_FALSE(MaturityLabel::try_from_code("lei").has_value());
}

TEST_SUITE("load_yield_panel") {
    TEST_CASE("710 months of 9 maturities load into a 710 x 9 panel") {
        testing::SyntheticOptions options;
        options.maturities = {"3m", "6m", "1y", "2y", "3y", "5y", "7y", "10y", "20y"};
        const auto data = testing::make_synthetic(options);
        const auto dir = testing::scratch_dir("data_710");
        const auto files = testing::write_synthetic(data, dir);
        const auto wanted = labels({"3m", "6m", "1y", "2y", "3y", "5y", "7y", "10y", "20y"});
        const std::vector<std::filesystem::path> paths{files.yields};
        const YieldPanel panel = load_yield_panel(paths, wanted);
        CHECK(panel.rows() == 710);
        CHECK(panel.yields().cols() == 9);
        CHECK(panel.first_date().str() == "1961-06");
        CHECK(panel.last_date().str() == "2020-07");
    }

    TEST_CASE("single-maturity file passes values through unchanged") {
        const auto dir = testing::scratch_dir("data_single");
        write_text(dir / "y.csv", "date,10y\n1990-01,8.21\n1990-02,8.47\n1990-03,8.59\n");
        const std::vector<std::filesystem::path> paths{dir / "y.csv"};
        const auto panel = load_yield_panel(paths, labels({"10y"}));
        REQUIRE(panel.rows() == 3);
        CHECK(panel.yields()(0, 0) == 8.21);
        CHECK(panel.yields()(1, 0) == 8.47);
        CHECK(panel.yields()(2, 0) == 8.59);
    }

    TEST_CASE("a missing month is a GapInDates error naming the month") {
        const auto dir = testing::scratch_dir("data_gap");
        write_text(dir / "y.csv", "date,3m,10y\n1975-01,6.5,7.5\n1975-02,6.2,7.4\n1975-04,5.5,7.8\n1975-05,5.2,7.9\n");
        const std::vector<std::filesystem::path> paths{dir / "y.csv"};
        const auto load = [&] { load_yield_panel(paths, labels({"3m", "10y"})); };
        CHECK(kind_of(load) == ErrorKind::GapInDates);
        CHECK(message_of(load).find("1975-03") != std::string::npos);
    }

    TEST_CASE("a blank cell inside the common span is a gap, not a NaN") {
        const auto dir = testing::scratch_dir("data_blank");
        write_text(dir / "y.csv", "date,3m,20y\n1987-01,5.5,7.5\n1987-02,5.6,\n1987-03,5.7,7.6\n");
        const std::vector<std::filesystem::path> paths{dir / "y.csv"};
        const auto load = [&] { load_yield_panel(paths, labels({"3m", "20y"})); };
        CHECK(kind_of(load) == ErrorKind::GapInDates);
        CHECK(message_of(load).find("20y") != std::string::npos);
    }

    TEST_CASE("files are merged and trimmed to the months every series covers") {
        const auto dir = testing::scratch_dir("data_merge");
        write_text(dir / "bills.csv", "date,3m,6m\n1961-05,2.3,2.4\n1961-06,2.3,2.5\n1961-07,2.2,2.4\n");
        write_text(dir / "notes.csv", "date,10y,lei\n1961-06,3.8,1.0\n1961-07,3.9,1.1\n1961-08,4.0,1.2\n");
        const std::vector<std::filesystem::path> paths{dir / "bills.csv", dir / "notes.csv"};
        const std::vector<std::string> controls{"lei"};
        const auto panel = load_yield_panel(paths, labels({"10y", "3m"}), controls);
        CHECK(panel.first_date().str() == "1961-06");
        CHECK(panel.rows() == 2);
        CHECK(panel.series("10y")(1) == 3.9);
        CHECK(panel.series("3m")(0) == 2.3);
        CHECK(panel.series("lei")(1) == 1.1);
        CHECK(panel.column_names() == std::vector<std::string>{"10y", "3m", "lei"});
    }

    TEST_CASE("missing series and malformed rows") {
        const auto dir = testing::scratch_dir("data_bad");
        write_text(dir / "y.csv", "date,3m\n1990-01,7.6\n");
        const std::vector<std::filesystem::path> paths{dir / "y.csv"};
        CHECK(kind_of([&] { load_yield_panel(paths, labels({"3m", "10y"})); }) == ErrorKind::MissingSeries);

        write_text(dir / "bad.csv", "date,3m\n1990-01,7.6\n1990-02,seven\n");
        const std::vector<std::filesystem::path> bad{dir / "bad.csv"};
        const auto load_bad = [&] { load_yield_panel(bad, labels({"3m"})); };
        CHECK(kind_of(load_bad) == ErrorKind::MalformedRow);
        CHECK(message_of(load_bad).find(":3") != std::string::npos);

        write_text(dir / "cells.csv", "date,3m\n1990-01,7.6,1\n");
        const std::vector<std::filesystem::path> cells{dir / "cells.csv"};
        CHECK(kind_of([&] { load_yield_panel(cells, labels({"3m"})); }) == ErrorKind::MalformedRow);

        write_text(dir / "dup.csv", "date,3m\n1990-01,7.6\n1990-01,7.7\n");
        const std::vector<std::filesystem::path> dup{dir / "dup.csv"};
        CHECK(kind_of([&] { load_yield_panel(dup, labels({"3m"})); }) == ErrorKind::MalformedRow);

        const std::vector<std::filesystem::path> absent{dir / "nope.csv"};
        CHECK(kind_of([&] { load_yield_panel(absent, labels({"3m"})); }) == ErrorKind::IoError);
    }

    TEST_CASE("write then load reproduces every cell bit-exactly") {
        std::mt19937_64 rng(11);
        std::uniform_int_distribution<long> cents(0, 15'000'000);
        const auto codes = labels({"3m", "2y", "10y"});
        Eigen::MatrixXd values(40, 3);
        for (Eigen::Index i = 0; i < values.rows(); ++i)
            for (Eigen::Index j = 0; j < values.cols(); ++j)
                values(i, j) = static_cast<double>(cents(rng)) / 1e6;  // six fractional digits
        const YieldPanel panel(YearMonth(1980, 1), codes, values);
        const auto dir = testing::scratch_dir("data_roundtrip");
        write_yield_panel(panel, dir / "p.csv");
        const std::vector<std::filesystem::path> paths{dir / "p.csv"};
        const auto back = load_yield_panel(paths, codes);
        REQUIRE(back.rows() == panel.rows());
        CHECK(back.first_date() == panel.first_date());
        CHECK((back.yields().array() == panel.yields().array()).all());
    }
}

TEST_SUITE("recession series") {
    TEST_CASE("load, validate values and contiguity") {
        const auto dir = testing::scratch_dir("data_rec");
        write_text(dir / "r.csv", "date,recession\n2020-01,0\n2020-02,0\n2020-03,1\n2020-04,1\n");
        const auto series = load_recession_series(dir / "r.csv");
        CHECK(series.first_date().str() == "2020-01");
        CHECK(series.at(YearMonth(2020, 3)) == 1);
        CHECK(kind_of([&] { series.at(YearMonth(2020, 5)); }) == ErrorKind::CoverageError);

        write_text(dir / "bad.csv", "date,recession\n2020-01,2\n");
        CHECK(kind_of([&] { load_recession_series(dir / "bad.csv"); }) == ErrorKind::MalformedRow);
        write_text(dir / "gap.csv", "date,recession\n2020-01,0\n2020-03,1\n");
        CHECK(kind_of([&] { load_recession_series(dir / "gap.csv"); }) == ErrorKind::GapInDates);
        write_text(dir / "hdr.csv", "date,nber\n2020-01,0\n");
        CHECK(kind_of([&] { load_recession_series(dir / "hdr.csv"); }) == ErrorKind::MalformedRow);
    }

    TEST_CASE("write then load round-trips") {
        const RecessionSeries series(YearMonth(2000, 1), {0, 0, 1, 1, 0});
        const auto dir = testing::scratch_dir("data_rec_rt");
        write_recession_series(series, dir / "r.csv");
        const auto back = load_recession_series(dir / "r.csv");
        CHECK(back.first_date() == series.first_date());
        CHECK(back.indicator() == series.indicator());
    }
}

TEST_SUITE("monthly_average") {
    TEST_CASE("two-point mean") {
        const std::vector<Date> dates{{2001, 1, 2}, {2001, 1, 15}};
        const std::vector<double> values{4.0, 6.0};
        const auto out = monthly_average(dates, values);
        REQUIRE(out.months.size() == 1);
        CHECK(out.months[0] == YearMonth(2001, 1));
        CHECK(out.values[0] == 5.0);
    }

    TEST_CASE("single day is unchanged") {
        const std::vector<Date> dates{{2001, 3, 9}};
        const std::vector<double> values{3.17};
        CHECK(monthly_average(dates, values).values[0] == 3.17);
    }

    TEST_CASE("constant month of business days") {
        std::vector<Date> dates;
        for (int d = 1; d <= 21; ++d) dates.push_back({2010, 6, d});
        const std::vector<double> values(21, 3.25);
        const auto out = monthly_average(dates, values);
        CHECK(out.months[0].str() == "2010-06");
        CHECK(out.values[0] == 3.25);
    }

    TEST_CASE("several months come out ascending") {
        const std::vector<Date> dates{{2001, 2, 1}, {2001, 1, 3}, {2001, 2, 5}};
        const std::vector<double> values{1.0, 2.0, 3.0};
        const auto out = monthly_average(dates, values);
        REQUIRE(out.months.size() == 2);
        CHECK(out.months[0].str() == "2001-01");
        CHECK(out.values[1] == 2.0);
    }

    TEST_CASE("result does not depend on the order of same-month observations") {
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> u(0.0, 12.0);
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<std::pair<Date, double>> obs;
            for (int d = 1; d <= 22; ++d) obs.push_back({{1999, 1 + trial % 12, d}, u(rng)});
            auto split = [](const auto& v) {
                std::vector<Date> dates;
                std::vector<double> values;
                for (const auto& [d, x] : v) {
                    dates.push_back(d);
                    values.push_back(x);
                }
                return std::pair{dates, values};
            };
            const auto [d1, v1] = split(obs);
            std::shuffle(obs.begin(), obs.end(), rng);
            const auto [d2, v2] = split(obs);
            CHECK(monthly_average(d1, v1).values[0] == monthly_average(d2, v2).values[0]);
        }
    }

    TEST_CASE("empty input") {
        CHECK(kind_of([] { monthly_average({}, {}); }) == ErrorKind::EmptyInput);
    }
}

TEST_SUITE("discount_to_bond_equivalent") {
    // Independent evaluation of 365 d / (360 - d t) in percent.
    double reference(double pct, int days) {
        const double d = pct / 100.0;
        return 100.0 * 365.0 * d / (360.0 - d * days);
    }

    TEST_CASE("worked values") {
        CHECK(discount_to_bond_equivalent(0.0, 91) == 0.0);
        CHECK(discount_to_bond_equivalent(5.0, 91) == doctest::Approx(reference(5.0, 91)).epsilon(1e-14));
        CHECK(discount_to_bond_equivalent(5.0, 182) == doctest::Approx(reference(5.0, 182)).epsilon(1e-14));
        // 18.25 / 355.45 and 18.25 / 350.9, rounded to four places.
        CHECK(std::round(discount_to_bond_equivalent(5.0, 91) * 1e4) / 1e4 == doctest::Approx(5.1343));
        CHECK(std::round(discount_to_bond_equivalent(5.0, 182) * 1e4) / 1e4 == doctest::Approx(5.2009));
    }

    TEST_CASE("strictly increasing and never below the discount rate") {
        for (int days : {91, 182}) {
            double previous = -1.0;
            for (double pct = 0.0; pct < 99.0; pct += 0.25) {
                const double y = discount_to_bond_equivalent(pct, days);
                CHECK(y > previous);
                if (pct > 0) CHECK(y >= pct);
                previous = y;
            }
        }
    }

    TEST_CASE("domain errors") {
        CHECK(kind_of([] { discount_to_bond_equivalent(-1.0, 91); }) == ErrorKind::DomainError);
        CHECK(kind_of([] { discount_to_bond_equivalent(100.0, 91); }) == ErrorKind::DomainError);
        CHECK(kind_of([] { discount_to_bond_equivalent(5.0, 0); }) == ErrorKind::DomainError);
        CHECK(kind_of([] { discount_to_bond_equivalent(99.0, 400); }) == ErrorKind::DomainError);
    }
}

TEST_SUITE("align_dataset") {
    TEST_CASE("12-month horizon ends training at predictor month 1994-12") {
        const auto data = testing::make_synthetic();
        const SplitConfig split{YearMonth(1961, 6), YearMonth(1995, 12), YearMonth(2020, 7)};
        const auto ds = align_dataset(data.panel, data.recessions, 12, split);
        CHECK(ds.rows() == 698);
        CHECK(ds.predictor_date(ds.split_index - 1).str() == "1994-12");
        CHECK(ds.target_date(ds.split_index - 1).str() == "1995-12");
        CHECK(ds.target_date(ds.split_index).str() == "1996-01");
        CHECK(ds.target_date(ds.rows() - 1).str() == "2020-07");
    }

    TEST_CASE("every row matches the panel and the shifted indicator") {
        const auto data = testing::make_synthetic();
        const SplitConfig split{YearMonth(1961, 6), YearMonth(2005, 12), YearMonth(2020, 7)};
        for (int k : {1, 3, 9, 24}) {
            const auto ds = align_dataset(data.panel, data.recessions, k, split);
            const auto names = data.panel.column_names();
            for (Eigen::Index i = 0; i < ds.rows(); ++i) {
                const Eigen::Index panel_row = ds.predictor_date(i) - data.panel.first_date();
                for (std::size_t j = 0; j < names.size(); ++j)
                    REQUIRE(ds.features(i, static_cast<Eigen::Index>(j)) ==
                            data.panel.series(names[j])(panel_row));
                REQUIRE(ds.targets(i) == data.recessions.at(ds.predictor_date(i) + k));
                REQUIRE((i < ds.split_index) == (ds.target_date(i) <= split.train_end));
            }
        }
    }

    TEST_CASE("one-month horizon on a three-month panel gives two rows") {
        const YieldPanel panel(YearMonth(2001, 1), labels({"3m"}), Eigen::Vector3d(1.0, 2.0, 3.0));
        const RecessionSeries rec(YearMonth(2001, 1), {0, 1, 1});
        const SplitConfig split{YearMonth(2001, 1), YearMonth(2001, 2), YearMonth(2001, 3)};
        const auto ds = align_dataset(panel, rec, 1, split);
        REQUIRE(ds.rows() == 2);
        CHECK(ds.predictor_date(0).str() == "2001-01");
        CHECK(ds.target_date(1).str() == "2001-03");
        CHECK(ds.features(0, 0) == 1.0);
        CHECK(ds.targets(0) == 1.0);
        CHECK(ds.split_index == 1);
    }

    TEST_CASE("errors") {
        const YieldPanel panel(YearMonth(2001, 1), labels({"3m"}), Eigen::Vector3d(1.0, 2.0, 3.0));
        const RecessionSeries rec(YearMonth(2001, 1), {0, 1, 1});
        const SplitConfig split{YearMonth(2001, 1), YearMonth(2001, 2), YearMonth(2001, 3)};
        CHECK(kind_of([&] { align_dataset(panel, rec, 5, split); }) == ErrorKind::HorizonTooLong);

        const RecessionSeries short_rec(YearMonth(2001, 1), {0, 1});
        CHECK(kind_of([&] { align_dataset(panel, short_rec, 1, split); }) == ErrorKind::CoverageError);

        const SplitConfig backwards{YearMonth(2001, 3), YearMonth(2001, 2), YearMonth(2001, 1)};
        CHECK(kind_of([&] { align_dataset(panel, rec, 1, backwards); }) == ErrorKind::InvalidSplit);

        const RecessionSeries long_rec(YearMonth(2001, 1), {0, 1, 1, 0, 0});
        const SplitConfig all_train{YearMonth(2001, 1), YearMonth(2001, 4), YearMonth(2001, 5)};
        CHECK(kind_of([&] { align_dataset(panel, long_rec, 1, all_train); }) == ErrorKind::InvalidSplit);

        const std::vector<std::string> unknown{"10y"};
        CHECK(kind_of([&] { align_dataset(panel, rec, 1, split, unknown); }) == ErrorKind::MissingSeries);
    }
}

TEST_SUITE("split_views") {
    AlignedDataset sized(Eigen::Index rows, Eigen::Index split) {
        AlignedDataset ds;
        ds.horizon_months = 12;
        ds.first_predictor_date = YearMonth(1961, 6);
        ds.features = Eigen::MatrixXd::Zero(rows, 2);
        for (Eigen::Index i = 0; i < rows; ++i) ds.features(i, 0) = static_cast<double>(i);
        ds.targets = Eigen::VectorXd::Zero(rows);
        ds.split_index = split;
        return ds;
    }

    TEST_CASE("414 of 710 rows") {
        const auto ds = sized(710, 414);
        const auto [train, test] = split_views(ds);
        CHECK(train.count == 414);
        CHECK(test.count == 296);
    }

    TEST_CASE("split at rows - 1 leaves one test row") {
        const auto ds = sized(50, 49);
        const auto [train, test] = split_views(ds);
        CHECK(test.count == 1);
        CHECK(test.features()(0, 0) == 49.0);
        CHECK(test.predictor_date(0) == ds.predictor_date(49));
    }

    TEST_CASE("views partition the rows") {
        const auto ds = sized(123, 77);
        const auto [train, test] = split_views(ds);
        std::set<Eigen::Index> seen;
        for (Eigen::Index i = 0; i < train.count; ++i) CHECK(seen.insert(train.begin + i).second);
        for (Eigen::Index i = 0; i < test.count; ++i) CHECK(seen.insert(test.begin + i).second);
        CHECK(seen.size() == 123);
        CHECK(*seen.begin() == 0);
        CHECK(*seen.rbegin() == 122);
    }
}

TEST_CASE("YieldPanel rejects non-finite cells") {
    Eigen::MatrixXd values(2, 1);
    values << 1.0, std::nan("");
    CHECK_THROWS_AS(YieldPanel(YearMonth(2000, 1), labels({"3m"}), values), Error);
}
