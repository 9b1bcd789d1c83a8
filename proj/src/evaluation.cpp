#include "spreadsel/evaluation.hpp"

#include "spreadsel/error.hpp"
#include "spreadsel/sparse_logit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace spreadsel {

namespace {

void require_same_length(Eigen::Index a, Eigen::Index b, const char* what) {
    if (a != b) throw Error(ErrorKind::LengthMismatch, std::string(what) + ": lengths differ");
}

std::pair<Eigen::Index, Eigen::Index> class_counts(const Eigen::Ref<const Eigen::VectorXd>& targets) {
    Eigen::Index pos = 0;
    for (Eigen::Index i = 0; i < targets.size(); ++i)
        if (targets(i) == 1.0) ++pos;
    const Eigen::Index neg = targets.size() - pos;
    if (pos == 0 || neg == 0) throw Error(ErrorKind::SingleClass, "both classes are required");
    return {pos, neg};
}

// Row order by descending score; ties keep input order.
std::vector<Eigen::Index> descending_order(const Eigen::Ref<const Eigen::VectorXd>& scores) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(scores.size()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return scores(a) > scores(b); });
    return order;
}

}  // namespace

double avg_log_likelihood(const Eigen::Ref<const Eigen::VectorXd>& targets,
                          const Eigen::Ref<const Eigen::VectorXd>& probabilities,
                          const Eigen::Ref<const Eigen::VectorXd>& weights) {
    require_same_length(targets.size(), probabilities.size(), "avg_log_likelihood");
    if (weights.size() != 0) require_same_length(targets.size(), weights.size(), "avg_log_likelihood weights");
    if (targets.size() == 0) throw Error(ErrorKind::EmptyInput, "avg_log_likelihood: no observations");

    double total = 0.0;
    for (Eigen::Index i = 0; i < targets.size(); ++i) {
        const double p = std::clamp(probabilities(i), kMinProbability, kMaxProbability);
        const double q = std::max(1.0 - probabilities(i), 1.0 - kMaxProbability);
        const double w = weights.size() == 0 ? 1.0 : weights(i);
        const double y = targets(i);
        total += w * (y * std::log(p) + (1.0 - y) * std::log(q));
    }
    return total / static_cast<double>(targets.size());
}

double ebf(double log_ppl_alt, double log_ppl_benchmark) { return std::exp(log_ppl_alt - log_ppl_benchmark); }

double model_avg_weight(double ebf_value) {
    if (!(ebf_value >= 0.0)) throw Error(ErrorKind::DomainError, "EBF must be non-negative");
    return ebf_value / (1.0 + ebf_value);
}

std::vector<RocPoint> roc_curve(const Eigen::Ref<const Eigen::VectorXd>& targets,
                                const Eigen::Ref<const Eigen::VectorXd>& scores) {
    require_same_length(targets.size(), scores.size(), "roc_curve");
    const auto [pos, neg] = class_counts(targets);
    const auto order = descending_order(scores);

    std::vector<RocPoint> curve{{0.0, 0.0}};
    Eigen::Index tp = 0, fp = 0;
    for (std::size_t k = 0; k < order.size();) {
        const double threshold = scores(order[k]);
        // Every row tied at this threshold flips together.
        while (k < order.size() && scores(order[k]) == threshold) {
            if (targets(order[k]) == 1.0)
                ++tp;
            else
                ++fp;
            ++k;
        }
        curve.push_back({static_cast<double>(fp) / static_cast<double>(neg),
                         static_cast<double>(tp) / static_cast<double>(pos)});
    }
    return curve;
}

double auc(const Eigen::Ref<const Eigen::VectorXd>& targets, const Eigen::Ref<const Eigen::VectorXd>& scores) {
    require_same_length(targets.size(), scores.size(), "auc");
    const auto [pos, neg] = class_counts(targets);
    const auto order = descending_order(scores);

    // Walk tie groups from the top; each positive beats every negative ranked
    // strictly below it and shares half credit within its group.
    double wins = 0.0;
    Eigen::Index negatives_above = 0;
    for (std::size_t k = 0; k < order.size();) {
        const double threshold = scores(order[k]);
        Eigen::Index group_pos = 0, group_neg = 0;
        while (k < order.size() && scores(order[k]) == threshold) {
            if (targets(order[k]) == 1.0)
                ++group_pos;
            else
                ++group_neg;
            ++k;
        }
        const Eigen::Index negatives_below = neg - negatives_above - group_neg;
        wins += static_cast<double>(group_pos) * (static_cast<double>(negatives_below) + 0.5 * static_cast<double>(group_neg));
        negatives_above += group_neg;
    }
    return wins / (static_cast<double>(pos) * static_cast<double>(neg));
}

double trapezoid_area(const std::vector<RocPoint>& curve) {
    double area = 0.0;
    for (std::size_t k = 1; k < curve.size(); ++k)
        area += (curve[k].false_positive_rate - curve[k - 1].false_positive_rate) *
                (curve[k].true_positive_rate + curve[k - 1].true_positive_rate) * 0.5;
    return area;
}

double relative_mse(const Eigen::Ref<const Eigen::VectorXd>& targets, const Eigen::Ref<const Eigen::VectorXd>& probs_alt,
                    const Eigen::Ref<const Eigen::VectorXd>& probs_benchmark) {
    require_same_length(targets.size(), probs_alt.size(), "relative_mse");
    require_same_length(targets.size(), probs_benchmark.size(), "relative_mse");
    const double bench = (targets - probs_benchmark).squaredNorm();
    if (!(bench > 0.0)) throw Error(ErrorKind::ZeroBenchmark, "benchmark forecast has zero squared error");
    return (targets - probs_alt).squaredNorm() / bench;
}

}  // namespace spreadsel
