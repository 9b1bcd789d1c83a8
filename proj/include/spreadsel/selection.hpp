#pragma once

// Regularization-path sweep over lambda = 2^(k/10) and support-size selection.

#include "spreadsel/data.hpp"
#include "spreadsel/sparse_logit.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace spreadsel {

struct LambdaGrid {
    int k_start = -100;
    int k_end = 0;

    static double lambda_at(double k) { return std::exp2(k / 10.0); }

    /// Grid from k_start up to the first point where the null model is optimal.
    static LambdaGrid covering(const LogitProblem& problem, int k_start = -100);

    std::size_t size() const { return k_end >= k_start ? static_cast<std::size_t>(k_end - k_start + 1) : 0; }
    std::vector<double> values() const;
};

struct CoefficientPath {
    std::vector<double> ks;
    std::vector<double> lambdas;
    Eigen::MatrixXd coef_matrix;  // one row per lambda, original scale
    std::vector<int> nonzero_counts;
    std::vector<LogitFit> fits;
    std::vector<std::string> feature_names;
};

struct SelectionResult {
    int horizon_months = 0;
    double k_selected = 0.0;
    double lambda_selected = 0.0;
    std::vector<Eigen::Index> survivors;  // penalized columns, largest coefficient first
    std::vector<std::string> survivor_names;
    Eigen::VectorXd coefs_orig;           // survivors only, same order
    double intercept_orig = 0.0;
    LogitFit fit;                         // full-width fit at the selected lambda
    bool refined = false;                 // found by bisection between grid points

    /// (first, second) survivor as maturities; empty unless exactly two
    /// maturity columns survived.
    std::optional<std::pair<MaturityLabel, MaturityLabel>> pair() const;
};

/// Warm-started fit_l1 at every grid lambda in ascending order. Throws
/// Error(NotConverged) naming the lambda whose fit could not be certified.
CoefficientPath sweep_path(const LogitProblem& problem, const LambdaGrid& grid,
                           std::vector<std::string> feature_names = {}, const SolverOptions& options = {});

/// First lambda on the path whose penalized support has target_nonzero members.
/// When the count jumps over the target between two grid points the interval is
/// bisected in k. Throws Error(CountNeverAttained).
SelectionResult select_pair(const CoefficientPath& path, const LogitProblem& problem, int target_nonzero = 2,
                            const SolverOptions& options = {});

}  // namespace spreadsel
