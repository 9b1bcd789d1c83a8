#include "spreadsel/selection.hpp"

#include "spreadsel/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace spreadsel {

namespace {

constexpr double kBisectionWidth = 1e-6;

std::string lambda_text(double k) {
    std::ostringstream out;
    out << "lambda=2^(" << k << "/10)=" << LambdaGrid::lambda_at(k);
    return out.str();
}

LogitFit certified_fit(const LogitProblem& base, double k, const std::optional<Parameters>& warm,
                       const SolverOptions& options) {
    LogitProblem problem = base;
    problem.lambda = LambdaGrid::lambda_at(k);
    LogitFit fit = fit_l1(problem, warm, options);
    if (!fit.converged) throw Error(ErrorKind::NotConverged, "L1 fit not certified at " + lambda_text(k));
    return fit;
}

Parameters as_start(const LogitFit& fit) { return {fit.intercept_std, fit.coefs_std}; }

SelectionResult make_selection(const LogitProblem& problem, const std::vector<std::string>& names, double k,
                               LogitFit fit, bool refined) {
    SelectionResult result;
    result.k_selected = k;
    result.lambda_selected = LambdaGrid::lambda_at(k);
    result.refined = refined;
    for (Eigen::Index j = 0; j < fit.coefs_std.size(); ++j)
        if (problem.penalty_mask[static_cast<std::size_t>(j)] && is_nonzero(fit.coefs_std(j)))
            result.survivors.push_back(j);
    std::stable_sort(result.survivors.begin(), result.survivors.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return fit.coefs_orig(a) > fit.coefs_orig(b); });
    result.coefs_orig.resize(static_cast<Eigen::Index>(result.survivors.size()));
    for (std::size_t s = 0; s < result.survivors.size(); ++s) {
        const Eigen::Index j = result.survivors[s];
        result.coefs_orig(static_cast<Eigen::Index>(s)) = fit.coefs_orig(j);
        result.survivor_names.push_back(static_cast<std::size_t>(j) < names.size() ? names[static_cast<std::size_t>(j)]
                                                                                     : "x" + std::to_string(j));
    }
    result.intercept_orig = fit.intercept_orig;
    result.fit = std::move(fit);
    return result;
}

}  // namespace

LambdaGrid LambdaGrid::covering(const LogitProblem& problem, int k_start) {
    const double bound = null_model_lambda(problem);
    LambdaGrid grid;
    grid.k_start = k_start;
    grid.k_end = bound > 0.0 ? std::max(k_start, static_cast<int>(std::ceil(10.0 * std::log2(bound))) + 1) : k_start;
    return grid;
}

std::vector<double> LambdaGrid::values() const {
    std::vector<double> out;
    for (int k = k_start; k <= k_end; ++k) out.push_back(lambda_at(k));
    return out;
}

std::optional<std::pair<MaturityLabel, MaturityLabel>> SelectionResult::pair() const {
    if (survivor_names.size() != 2) return std::nullopt;
    auto first = MaturityLabel::try_from_code(survivor_names[0]);
    auto second = MaturityLabel::try_from_code(survivor_names[1]);
    if (!first || !second) return std::nullopt;
    return std::make_pair(*first, *second);
}

CoefficientPath sweep_path(const LogitProblem& problem, const LambdaGrid& grid, std::vector<std::string> feature_names,
                           const SolverOptions& options) {
    problem.validate();
    if (grid.size() == 0) throw Error(ErrorKind::EmptyInput, "lambda grid is empty");

    CoefficientPath path;
    path.feature_names = std::move(feature_names);
    path.coef_matrix.resize(static_cast<Eigen::Index>(grid.size()), problem.cols());

    std::optional<Parameters> warm;
    for (int k = grid.k_start; k <= grid.k_end; ++k) {
        LogitFit fit = certified_fit(problem, k, warm, options);
        warm = as_start(fit);
        const Eigen::Index row = static_cast<Eigen::Index>(path.lambdas.size());
        path.ks.push_back(k);
        path.lambdas.push_back(LambdaGrid::lambda_at(k));
        path.coef_matrix.row(row) = fit.coefs_orig.transpose();
        path.nonzero_counts.push_back(nonzero_count(fit.coefs_std, problem.penalty_mask));
        path.fits.push_back(std::move(fit));
    }
    return path;
}

SelectionResult select_pair(const CoefficientPath& path, const LogitProblem& problem, int target_nonzero,
                            const SolverOptions& options) {
    if (path.lambdas.empty()) throw Error(ErrorKind::EmptyInput, "empty coefficient path");

    for (std::size_t i = 0; i < path.nonzero_counts.size(); ++i) {
        if (path.nonzero_counts[i] == target_nonzero)
            return make_selection(problem, path.feature_names, path.ks[i], path.fits[i], false);
        const bool skipped = i + 1 < path.nonzero_counts.size() && path.nonzero_counts[i] > target_nonzero &&
                             path.nonzero_counts[i + 1] < target_nonzero;
        if (!skipped) continue;

        double k_lo = path.ks[i];
        double k_hi = path.ks[i + 1];
        Parameters warm = as_start(path.fits[i]);
        while (k_hi - k_lo >= kBisectionWidth) {
            const double k_mid = 0.5 * (k_lo + k_hi);
            LogitFit fit = certified_fit(problem, k_mid, warm, options);
            const int count = nonzero_count(fit.coefs_std, problem.penalty_mask);
            if (count == target_nonzero) return make_selection(problem, path.feature_names, k_mid, std::move(fit), true);
            if (count > target_nonzero) {
                k_lo = k_mid;
                warm = as_start(fit);
            } else {
                k_hi = k_mid;
            }
        }
        throw Error(ErrorKind::CountNeverAttained,
                    "support jumps over " + std::to_string(target_nonzero) + " between " + lambda_text(path.ks[i]) +
                        " and " + lambda_text(path.ks[i + 1]));
    }
    throw Error(ErrorKind::CountNeverAttained,
                "no lambda on the path leaves exactly " + std::to_string(target_nonzero) + " coefficients");
}

}  // namespace spreadsel
