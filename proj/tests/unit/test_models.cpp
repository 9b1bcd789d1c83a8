#include "spreadsel/error.hpp"
#include "spreadsel/evaluation.hpp"
#include "spreadsel/models.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

#include <doctest.h>

#include <cmath>

using namespace spreadsel;

namespace {

ErrorKind kind_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an Error");
    return ErrorKind::IoError;
}

MaturityPair pair_of(const char* a, const char* b) { return {MaturityLabel::from_code(a), MaturityLabel::from_code(b)}; }

YieldPanel tiny_panel() {
    Eigen::MatrixXd yields(2, 3);
    yields << 4.5, 5.2, 6.0,  //
        4.1, 5.0, 5.5;
    Eigen::MatrixXd lei(2, 1);
    lei << 0.3, -0.2;
    return YieldPanel(YearMonth(2000, 1),
                      {MaturityLabel::from_code("3m"), MaturityLabel::from_code("7y"), MaturityLabel::from_code("10y")},
                      yields, {"leading_indicator"}, lei);
}

double train_log_l(const FittedModel& model, const AlignedDataset& ds) {
    const auto series = forecast_series(model, ds);
    const Eigen::VectorXd w =
        model.weights ? model.weights->row_weights(ds.targets.head(ds.split_index)) : Eigen::VectorXd();
    return avg_log_likelihood(ds.targets.head(ds.split_index), series.probability.head(ds.split_index), w);
}

const SplitConfig kSplit1995{YearMonth(1961, 6), YearMonth(1995, 12), YearMonth(2020, 7)};

}  // namespace

TEST_SUITE("build_features") {
    TEST_CASE("simple conventional spread is long minus short") {
        const auto panel = tiny_panel();
        const auto f = build_features(panel, ModelSpec{ModelKind::SimpleConventional, std::nullopt, {}});
        REQUIRE(f.values.cols() == 1);
        CHECK(f.values(0, 0) == 1.5);
        CHECK(f.names == std::vector<std::string>{"10y-3m"});
    }

    TEST_CASE("generalized ML pair projects the two yields") {
        const auto panel = tiny_panel();
        const auto f = build_features(panel, ModelSpec{ModelKind::GeneralizedML, pair_of("7y", "3m"), {}});
        REQUIRE(f.values.cols() == 2);
        CHECK(f.values(0, 0) == 5.2);
        CHECK(f.values(0, 1) == 4.5);
        CHECK(f.values(1, 0) == 5.0);
        CHECK(f.values(1, 1) == 4.1);
        CHECK(f.penalized == std::vector<bool>{true, true});
    }

    TEST_CASE("controls are appended, named and exempt from the penalty") {
        const auto panel = tiny_panel();
        const auto f =
            build_features(panel, ModelSpec{ModelKind::GeneralizedConventional, std::nullopt, {"leading_indicator"}});
        CHECK(f.names == std::vector<std::string>{"10y", "3m", "leading_indicator"});
        CHECK(f.penalized == std::vector<bool>{true, true, false});
        CHECK(f.values(1, 2) == -0.2);
    }

    TEST_CASE("conventional kinds ignore the ML pair; ML kinds need one") {
        const auto panel = tiny_panel();
        const auto f = build_features(panel, ModelSpec{ModelKind::SimpleConventional, pair_of("7y", "3m"), {}});
        CHECK(f.names == std::vector<std::string>{"10y-3m"});
        CHECK(kind_of([&] { build_features(panel, ModelSpec{ModelKind::SimpleML, std::nullopt, {}}); }) ==
              ErrorKind::InvalidConfig);
        CHECK(kind_of([&] { build_features(panel, ModelSpec{ModelKind::SimpleML, pair_of("20y", "3m"), {}}); }) ==
              ErrorKind::MissingSeries);
        CHECK(kind_of([&] {
                  build_features(panel, ModelSpec{ModelKind::SimpleConventional, std::nullopt, {"vix"}});
              }) == ErrorKind::MissingSeries);
    }

    TEST_CASE("panel letters and names") {
        CHECK(panel_letter(ModelKind::GeneralizedML) == 'A');
        CHECK(panel_letter(ModelKind::SimpleConventional) == 'D');
        CHECK(pair_of("10y", "6m").str() == "(10y, 6m)");
        CHECK(conventional_pair() == pair_of("10y", "3m"));
    }
}

TEST_SUITE("fit_spec") {
    TEST_CASE("simple ML on (10y, 3m) is the simple conventional fit") {
        const auto data = testing::make_synthetic();
        const auto ds = align_dataset(data.panel, data.recessions, 9, kSplit1995);
        const auto ml = fit_spec(ds, ModelSpec{ModelKind::SimpleML, pair_of("10y", "3m"), {}}, false);
        const auto conv = fit_spec(ds, ModelSpec{ModelKind::SimpleConventional, std::nullopt, {}}, false);
        CHECK(ml.fit.intercept_orig == conv.fit.intercept_orig);
        CHECK(ml.fit.coefs_orig == conv.fit.coefs_orig);
        CHECK(ml.yield_coef_first == -ml.yield_coef_second);
    }

    TEST_CASE("weighting on balanced data changes nothing") {
        auto data = testing::make_synthetic();
        const auto ds0 = align_dataset(data.panel, data.recessions, 6, kSplit1995);
        // Relabel the training targets in runs of seven so exactly half are events.
        AlignedDataset ds = ds0;
        ds.split_index -= ds.split_index % 14;
        for (Eigen::Index i = 0; i < ds.split_index; ++i) ds.targets(i) = static_cast<double>((i / 7) % 2);
        REQUIRE(class_weights(ds.targets.head(ds.split_index)).recession_ratio == 0.5);
        for (auto kind : {ModelKind::GeneralizedConventional, ModelKind::SimpleConventional}) {
            const ModelSpec spec{kind, std::nullopt, {}};
            const auto off = fit_spec(ds, spec, false);
            const auto on = fit_spec(ds, spec, true);
            CHECK(on.fit.intercept_orig == off.fit.intercept_orig);
            CHECK(on.fit.coefs_orig == off.fit.coefs_orig);
        }
    }

    TEST_CASE("generalized fits never lose to their simple counterparts in sample") {
        const auto data = testing::make_synthetic();
        for (const auto& train_end : {YearMonth(1995, 12), YearMonth(2005, 12), YearMonth(2015, 12)}) {
            const SplitConfig split{YearMonth(1961, 6), train_end, YearMonth(2020, 7)};
            for (int k : {3, 6, 9, 12, 15, 18, 21, 24}) {
                const auto ds = align_dataset(data.panel, data.recessions, k, split);
                for (bool weighting : {false, true}) {
                    for (const auto& pair : {pair_of("10y", "3m"), pair_of("7y", "1y"), pair_of("20y", "6m")}) {
                        const auto g = fit_spec(ds, ModelSpec{ModelKind::GeneralizedML, pair, {}}, weighting);
                        const auto s = fit_spec(ds, ModelSpec{ModelKind::SimpleML, pair, {}}, weighting);
                        CHECK(train_log_l(g, ds) >= train_log_l(s, ds) - 1e-8);
                    }
                }
            }
        }
    }

    TEST_CASE("controls are reported on the original scale") {
        testing::SyntheticOptions options;
        options.with_control = true;
        const auto data = testing::make_synthetic(options);
        const auto ds = align_dataset(data.panel, data.recessions, 12, kSplit1995);
        const ModelSpec spec{ModelKind::GeneralizedConventional, std::nullopt, {"lei"}};
        const auto model = fit_spec(ds, spec, false);
        REQUIRE(model.control_coefs.size() == 1);
        CHECK(model.control_coefs[0].first == "lei");

        const auto features = build_features(ds, spec);
        const Eigen::MatrixXd raw = features.values.topRows(ds.split_index);
        const Eigen::VectorXd y = ds.targets.head(ds.split_index);
        const Eigen::VectorXd brute = oracle::brute_force_mle(raw, y, Eigen::VectorXd::Ones(y.size()));
        CHECK(brute(0) == doctest::Approx(model.fit.intercept_orig).epsilon(1e-4));
        CHECK(brute(1) == doctest::Approx(model.yield_coef_first).epsilon(1e-4));
        CHECK(brute(2) == doctest::Approx(model.yield_coef_second).epsilon(1e-4));
        CHECK(brute(3) == doctest::Approx(model.control_coefs[0].second).epsilon(1e-4));
    }

    TEST_CASE("shifting both yields of a simple spec changes nothing") {
        // Dyadic yields keep the subtraction exact, so equality is bitwise.
        auto data = testing::make_synthetic();
        Eigen::MatrixXd yields = data.panel.yields();
        for (Eigen::Index i = 0; i < yields.size(); ++i) yields.data()[i] = std::round(yields.data()[i] * 64.0) / 64.0;
        const YieldPanel base(data.panel.first_date(), data.panel.maturities(), yields);
        const YieldPanel shifted(data.panel.first_date(), data.panel.maturities(), (yields.array() + 2.5).matrix());
        const auto ds_base = align_dataset(base, data.recessions, 12, kSplit1995);
        const auto ds_shift = align_dataset(shifted, data.recessions, 12, kSplit1995);
        for (auto kind : {ModelKind::SimpleConventional, ModelKind::SimpleML}) {
            const ModelSpec spec{kind, pair_of("7y", "3m"), {}};
            CHECK(build_features(ds_base, spec).values == build_features(ds_shift, spec).values);
            const auto a = fit_spec(ds_base, spec, false);
            const auto b = fit_spec(ds_shift, spec, false);
            CHECK(a.fit.coefs_orig == b.fit.coefs_orig);
            CHECK(a.fit.intercept_orig == b.fit.intercept_orig);
            CHECK(forecast_series(a, ds_base).probability == forecast_series(b, ds_shift).probability);
        }
    }
}

TEST_SUITE("forecast_series") {
    TEST_CASE("flat curve gives zero spread and probability one half") {
        FittedModel model;
        model.spec = ModelSpec{ModelKind::GeneralizedML, pair_of("10y", "3m"), {}};
        model.feature_names = {"10y", "3m"};
        model.fit.intercept_orig = 0.0;
        model.fit.coefs_orig = Eigen::Vector2d(1.0, -1.0);
        AlignedDataset ds;
        ds.horizon_months = 3;
        ds.first_predictor_date = YearMonth(2000, 1);
        ds.features = Eigen::MatrixXd::Constant(2, 2, 5.0);
        ds.features(1, 0) = 6.0;
        ds.targets = Eigen::Vector2d(0.0, 1.0);
        ds.split_index = 1;
        ds.feature_names = {"10y", "3m"};
        const auto series = forecast_series(model, ds);
        CHECK(series.spread(0) == 0.0);
        CHECK(series.probability(0) == 0.5);
        CHECK(series.spread(1) == 1.0);
        CHECK(series.last_train_date.str() == "2000-01");
        CHECK(series.dates[1].str() == "2000-02");
    }

    TEST_CASE("probability falls as the spread rises and covers every row") {
        const auto data = testing::make_synthetic();
        const auto ds = align_dataset(data.panel, data.recessions, 12, kSplit1995);
        const auto model = fit_spec(ds, ModelSpec{ModelKind::GeneralizedML, pair_of("7y", "3m"), {}}, false);
        const auto series = forecast_series(model, ds);
        CHECK(series.spread.size() == ds.rows());
        CHECK(series.dates.size() == static_cast<std::size_t>(ds.rows()));
        CHECK(series.last_train_date.str() == "1994-12");
        for (Eigen::Index i = 0; i + 1 < ds.rows(); ++i) {
            if (series.spread(i) < series.spread(i + 1)) CHECK(series.probability(i) >= series.probability(i + 1));
            if (series.spread(i) > series.spread(i + 1)) CHECK(series.probability(i) <= series.probability(i + 1));
        }
    }

    TEST_CASE("mismatched model and dataset") {
        FittedModel model;
        model.spec = ModelSpec{ModelKind::GeneralizedConventional, std::nullopt, {}};
        model.feature_names = {"10y"};
        const auto data = testing::make_synthetic();
        const auto ds = align_dataset(data.panel, data.recessions, 3, kSplit1995);
        CHECK(kind_of([&] { forecast_series(model, ds); }) == ErrorKind::LengthMismatch);
    }
}

TEST_CASE("penalized selection model predicts like the full penalized fit") {
    testing::SyntheticOptions options;
    options.with_control = true;
    const auto data = testing::make_synthetic(options);
    const auto ds = align_dataset(data.panel, data.recessions, 12, kSplit1995);
    const auto [train, test] = split_views(ds);
    std::vector<bool> mask;
    for (const auto& name : ds.feature_names) mask.push_back(name != "lei");
    const auto problem = LogitProblem::from_raw(train.features(), train.targets(), {}, mask);
    const auto selection =
        select_pair(sweep_path(problem, LambdaGrid::covering(problem), ds.feature_names), problem);
    const auto model = model_from_selection(ds, selection, {"lei"}, std::nullopt);
    REQUIRE(model.lambda.has_value());
    CHECK(*model.lambda == selection.lambda_selected);
    CHECK(model.yield_coef_first > 0.0);
    CHECK(model.yield_coef_second < 0.0);
    const auto series = forecast_series(model, ds);
    const Eigen::VectorXd full = predict_proba_rows(selection.fit.intercept_orig, selection.fit.coefs_orig, ds.features);
    CHECK((series.probability - full).cwiseAbs().maxCoeff() <= 1e-12);
}
