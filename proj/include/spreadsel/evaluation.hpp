#pragma once

// Out-of-sample scoring of recession-probability forecasts.

#include <Eigen/Dense>

#include <string>
#include <utility>
#include <vector>

namespace spreadsel {

/// Jeffreys' threshold for substantial evidence, sqrt(10).
inline constexpr double kSubstantialEvidence = 3.1622776601683795;

struct RocPoint {
    double false_positive_rate;
    double true_positive_rate;

    bool operator==(const RocPoint&) const = default;
};

struct EvalReport {
    int horizon = 0;
    std::string spec_kind;
    double log_l_train = 0.0;   // average in-sample log likelihood
    double log_ppl_test = 0.0;  // average out-of-sample log predictive likelihood
    double ebf = 1.0;
    double auc_train = 0.5;
    double auc_test = 0.5;
    double rm = 1.0;
    double avg_weight = 0.5;
};

/// Mean of w_i [y_i ln p_i + (1 - y_i) ln(1 - p_i)] with probabilities clamped
/// like the fitting code. Empty weights mean unit weights.
double avg_log_likelihood(const Eigen::Ref<const Eigen::VectorXd>& targets,
                          const Eigen::Ref<const Eigen::VectorXd>& probabilities,
                          const Eigen::Ref<const Eigen::VectorXd>& weights = Eigen::VectorXd());

/// exp(log_ppl_alt - log_ppl_benchmark) for per-observation averages.
double ebf(double log_ppl_alt, double log_ppl_benchmark);

/// Posterior weight on the alternative under equal priors.
double model_avg_weight(double ebf_value);

inline bool substantial_evidence(double ebf_value) { return ebf_value >= kSubstantialEvidence; }

/// Thresholds at every distinct score, descending, between (0,0) and (1,1).
std::vector<RocPoint> roc_curve(const Eigen::Ref<const Eigen::VectorXd>& targets,
                                const Eigen::Ref<const Eigen::VectorXd>& scores);

/// Mann-Whitney statistic with half credit for ties.
double auc(const Eigen::Ref<const Eigen::VectorXd>& targets, const Eigen::Ref<const Eigen::VectorXd>& scores);

/// Trapezoidal area under an ROC polyline.
double trapezoid_area(const std::vector<RocPoint>& curve);

/// MSE(alt) / MSE(benchmark). Throws Error(ZeroBenchmark) when the benchmark is perfect.
double relative_mse(const Eigen::Ref<const Eigen::VectorXd>& targets, const Eigen::Ref<const Eigen::VectorXd>& probs_alt,
                    const Eigen::Ref<const Eigen::VectorXd>& probs_benchmark);

}  // namespace spreadsel
