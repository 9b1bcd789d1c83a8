#pragma once

// Logistic regression with the negated-index convention
//     P(y = 1 | x) = phi(-(b + beta' x)),   phi(z) = 1 / (1 + exp(-z)),
// so a larger linear index means a lower recession probability. The negative
// log likelihood is summed over rows, never averaged, so lambda keeps the same
// units as an external solver parameterized by C = 1 / lambda.

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace spreadsel {

/// Probabilities are clamped to this band before taking logs.
inline constexpr double kMinProbability = 1e-300;
inline constexpr double kMaxProbability = 1.0 - 1e-16;

/// A standardized coefficient counts as nonzero above this magnitude.
inline constexpr double kNonzeroThreshold = 1e-10;

/// Column z-scoring with population standard deviations.
struct Standardizer {
    Eigen::VectorXd means;
    Eigen::VectorXd stds;

    /// Throws Error(ConstantFeature) when a column has zero spread.
    static Standardizer fit(const Eigen::MatrixXd& rows);
    static Standardizer identity(Eigen::Index features);

    Eigen::Index size() const { return means.size(); }
    Eigen::MatrixXd transform(const Eigen::MatrixXd& rows) const;
    Eigen::MatrixXd inverse_transform(const Eigen::MatrixXd& rows) const;
};

struct LogitProblem {
    Eigen::MatrixXd features;        // standardized
    Eigen::VectorXd targets;         // 0/1
    Eigen::VectorXd weights;         // > 0
    std::vector<bool> penalty_mask;  // true = L1-penalized
    double lambda = 0.0;
    Standardizer scaling;            // maps raw features to `features`

    /// Standardizes `raw` with its own statistics. Empty weights mean unit
    /// weights; an empty mask penalizes every feature.
    static LogitProblem from_raw(const Eigen::MatrixXd& raw, const Eigen::VectorXd& targets,
                                 Eigen::VectorXd weights = {}, std::vector<bool> penalty_mask = {},
                                 double lambda = 0.0);

    Eigen::Index rows() const { return features.rows(); }
    Eigen::Index cols() const { return features.cols(); }
    void validate() const;
};

struct LogitFit {
    double intercept_std = 0.0;
    Eigen::VectorXd coefs_std;
    double intercept_orig = 0.0;
    Eigen::VectorXd coefs_orig;
    double objective_value = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> objective_trace;
};

struct Parameters {
    double intercept = 0.0;
    Eigen::VectorXd coefs;
};

struct Gradient {
    double d_intercept = 0.0;
    Eigen::VectorXd d_coefs;
};

struct ClassWeights {
    double recession_ratio = 0.5;
    double w_pos = 1.0;
    double w_neg = 1.0;

    /// (1 - r) / r: how many times each recession month is effectively repeated.
    double oversampling_factor() const { return (1.0 - recession_ratio) / recession_ratio; }
    Eigen::VectorXd row_weights(const Eigen::Ref<const Eigen::VectorXd>& targets) const;
};

struct SolverOptions {
    int max_iterations = 100000;
    double step_tolerance = 1e-9;
    double kkt_tolerance = 1e-7;
    /// Monotone FISTA momentum. Off by default; plain steps are already monotone.
    bool accelerate = false;
    /// Proximal iterations between active-set Newton refinements (0 disables them).
    int polish_interval = 25;
    /// Keep the objective after every accepted iteration in LogitFit::objective_trace.
    bool record_trace = false;
};

/// phi(-eta), computed without overflow and clamped to [kMinProbability, kMaxProbability].
double probability_from_index(double eta);

double predict_proba(double intercept, const Eigen::Ref<const Eigen::VectorXd>& coefs,
                     const Eigen::Ref<const Eigen::VectorXd>& x);

/// One probability per row of `rows`.
Eigen::VectorXd predict_proba_rows(double intercept, const Eigen::Ref<const Eigen::VectorXd>& coefs,
                              const Eigen::Ref<const Eigen::MatrixXd>& rows);

double weighted_nll(const LogitProblem& problem, double intercept, const Eigen::Ref<const Eigen::VectorXd>& coefs);

Gradient nll_gradient(const LogitProblem& problem, double intercept, const Eigen::Ref<const Eigen::VectorXd>& coefs);

double soft_threshold(double v, double t);

/// Largest violation of the L1 optimality conditions at (intercept, coefs).
double kkt_violation(const LogitProblem& problem, double intercept, const Eigen::Ref<const Eigen::VectorXd>& coefs);

inline bool kkt_certified(const LogitProblem& problem, const LogitFit& fit, double tolerance = 1e-7) {
    return kkt_violation(problem, fit.intercept_std, fit.coefs_std) <= tolerance;
}

/// NLL plus lambda times the L1 norm of the penalized coefficients.
double l1_objective(const LogitProblem& problem, double intercept, const Eigen::Ref<const Eigen::VectorXd>& coefs);

/// Intercept of the coefficient-free model: log((1 - p) / p) for the weighted
/// event rate p.
double null_intercept(const LogitProblem& problem);

/// Smallest lambda at which every penalized coefficient is zero.
double null_model_lambda(const LogitProblem& problem);

/// Proximal-gradient solution of the L1 problem. Never throws on slow
/// convergence; inspect LogitFit::converged instead.
LogitFit fit_l1(const LogitProblem& problem, const std::optional<Parameters>& warm_start = std::nullopt,
                const SolverOptions& options = {});

/// Unpenalized Newton-Raphson fit (lambda is ignored). Throws Error(Separation)
/// when coefficients diverge and Error(Singular) on a rank-deficient Hessian.
LogitFit fit_mle(const LogitProblem& problem);

Parameters destandardize(double intercept_std, const Eigen::Ref<const Eigen::VectorXd>& coefs_std,
                         const Standardizer& standardizer);

/// Throws Error(SingleClass) when only one class is present.
ClassWeights class_weights(const Eigen::Ref<const Eigen::VectorXd>& targets);

bool is_nonzero(double coef_std);
int nonzero_count(const Eigen::Ref<const Eigen::VectorXd>& coefs_std, const std::vector<bool>& penalty_mask);

}  // namespace spreadsel
