#include "spreadsel/sparse_logit.hpp"

#include "spreadsel/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace spreadsel {

namespace {

constexpr double kSeparationNorm = 1e4;
constexpr double kMleGradientTolerance = 1e-9;
constexpr int kMleMaxIterations = 300;
constexpr double kTinyDecrement = 1e-12;
constexpr double kRoundingSlack = 1e-13;

// phi(-eta) and phi(eta) without cancellation.
struct ProbabilityPair {
    double p;
    double q;
};

ProbabilityPair stable_pair(double eta) {
    if (eta >= 0.0) {
        const double e = std::exp(-eta);
        return {e / (1.0 + e), 1.0 / (1.0 + e)};
    }
    const double e = std::exp(eta);
    return {1.0 / (1.0 + e), e / (1.0 + e)};
}

ProbabilityPair clamped_pair(double eta) {
    auto [p, q] = stable_pair(eta);
    return {std::clamp(p, kMinProbability, kMaxProbability), std::max(q, 1.0 - kMaxProbability)};
}

Eigen::VectorXd linear_index(const LogitProblem& problem, double intercept, const Eigen::Ref<const Eigen::VectorXd>& coefs) {
    Eigen::VectorXd eta = problem.features * coefs;
    eta.array() += intercept;
    return eta;
}

// dNLL/deta per row: w (y - p), since dp/deta = -p (1 - p) under the negated index.
Eigen::VectorXd index_residuals(const LogitProblem& problem, const Eigen::VectorXd& eta) {
    Eigen::VectorXd r(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i)
        r(i) = problem.weights(i) * (problem.targets(i) - stable_pair(eta(i)).p);
    return r;
}

double nll_from_index(const LogitProblem& problem, const Eigen::VectorXd& eta) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        auto [p, q] = clamped_pair(eta(i));
        const double y = problem.targets(i);
        total -= problem.weights(i) * (y * std::log(p) + (1.0 - y) * std::log(q));
    }
    return total;
}

double penalty(const LogitProblem& problem, const Eigen::Ref<const Eigen::VectorXd>& coefs) {
    double total = 0.0;
    for (Eigen::Index j = 0; j < coefs.size(); ++j)
        if (problem.penalty_mask[static_cast<std::size_t>(j)]) total += std::abs(coefs(j));
    return problem.lambda * total;
}

double kkt_from_gradient(const LogitProblem& problem, const Gradient& g, const Eigen::Ref<const Eigen::VectorXd>& coefs) {
    double worst = std::abs(g.d_intercept);
    for (Eigen::Index j = 0; j < coefs.size(); ++j) {
        double v;
        if (!problem.penalty_mask[static_cast<std::size_t>(j)])
            v = std::abs(g.d_coefs(j));
        else if (coefs(j) == 0.0)
            v = std::max(std::abs(g.d_coefs(j)) - problem.lambda, 0.0);
        else
            v = std::abs(g.d_coefs(j) + problem.lambda * (coefs(j) > 0.0 ? 1.0 : -1.0));
        worst = std::max(worst, v);
    }
    return worst;
}

double max_abs_diff(const Parameters& a, const Parameters& b) {
    double d = std::abs(a.intercept - b.intercept);
    if (a.coefs.size() > 0) d = std::max(d, (a.coefs - b.coefs).cwiseAbs().maxCoeff());
    return d;
}

// Design matrix [1, X_S] for the listed columns.
Eigen::MatrixXd design(const LogitProblem& problem, const std::vector<Eigen::Index>& columns) {
    Eigen::MatrixXd z(problem.rows(), static_cast<Eigen::Index>(columns.size()) + 1);
    z.col(0).setOnes();
    for (std::size_t k = 0; k < columns.size(); ++k) z.col(static_cast<Eigen::Index>(k) + 1) = problem.features.col(columns[k]);
    return z;
}

Eigen::MatrixXd hessian(const LogitProblem& problem, const Eigen::MatrixXd& z, const Eigen::VectorXd& eta) {
    Eigen::VectorXd curvature(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        auto [p, q] = stable_pair(eta(i));
        curvature(i) = problem.weights(i) * p * q;
    }
    return z.transpose() * curvature.asDiagonal() * z;
}

// Newton iterations on the smooth restriction of the L1 objective to the
// current support with frozen signs. A coefficient that would change sign is
// stopped at zero and leaves the support, so the point stays feasible for the
// sign pattern and the restricted objective equals the true one throughout.
Parameters polish_on_support(const LogitProblem& problem, Parameters theta, double tolerance) {
    for (int iter = 0; iter < 100; ++iter) {
        std::vector<Eigen::Index> support;
        for (Eigen::Index j = 0; j < theta.coefs.size(); ++j)
            if (!problem.penalty_mask[static_cast<std::size_t>(j)] || theta.coefs(j) != 0.0) support.push_back(j);

        const Eigen::Index m = static_cast<Eigen::Index>(support.size()) + 1;
        Eigen::VectorXd sign = Eigen::VectorXd::Zero(m);
        for (std::size_t k = 0; k < support.size(); ++k) {
            const Eigen::Index j = support[k];
            if (problem.penalty_mask[static_cast<std::size_t>(j)]) sign(static_cast<Eigen::Index>(k) + 1) = theta.coefs(j) > 0.0 ? 1.0 : -1.0;
        }

        const Eigen::MatrixXd z = design(problem, support);
        const Eigen::VectorXd eta = linear_index(problem, theta.intercept, theta.coefs);
        const Eigen::VectorXd grad = z.transpose() * index_residuals(problem, eta) + problem.lambda * sign;
        if (grad.cwiseAbs().maxCoeff() <= tolerance) break;

        Eigen::LDLT<Eigen::MatrixXd> ldlt(hessian(problem, z, eta));
        if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().array() > 0.0).all()) break;
        const Eigen::VectorXd step = -ldlt.solve(grad);
        if (!step.allFinite()) break;

        double alpha_max = 1.0;
        Eigen::Index blocking = -1;
        for (Eigen::Index k = 1; k < m; ++k) {
            if (sign(k) == 0.0) continue;
            const double beta = theta.coefs(support[static_cast<std::size_t>(k - 1)]);
            if (beta * step(k) < 0.0 && std::abs(step(k)) * alpha_max > std::abs(beta)) {
                alpha_max = std::abs(beta / step(k));
                blocking = k;
            }
        }

        auto restricted = [&](const Parameters& t) {
            double value = weighted_nll(problem, t.intercept, t.coefs);
            for (std::size_t k = 0; k < support.size(); ++k) value += problem.lambda * sign(static_cast<Eigen::Index>(k) + 1) * t.coefs(support[k]);
            return value;
        };
        auto moved = [&](double alpha, bool snap) {
            Parameters t = theta;
            t.intercept += alpha * step(0);
            for (std::size_t k = 0; k < support.size(); ++k) t.coefs(support[k]) += alpha * step(static_cast<Eigen::Index>(k) + 1);
            if (snap && blocking > 0) t.coefs(support[static_cast<std::size_t>(blocking - 1)]) = 0.0;
            return t;
        };

        const double f0 = restricted(theta);
        const double slope = grad.dot(step);
        double alpha = alpha_max;
        bool accepted = false;
        Parameters candidate;
        if (-slope < kTinyDecrement) {
            candidate = moved(alpha_max, true);
            accepted = true;
        }
        for (int half = 0; half < 60 && !accepted; ++half) {
            candidate = moved(alpha, alpha == alpha_max);
            const double f1 = restricted(candidate);
            if (f1 <= f0 + 1e-4 * alpha * slope || f1 < f0) {
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) break;
        const double change = max_abs_diff(candidate, theta);
        theta = std::move(candidate);
        if (change == 0.0) break;
    }
    return theta;
}

LogitFit make_fit(const LogitProblem& problem, const Parameters& theta, int iterations, bool converged) {
    LogitFit fit;
    fit.intercept_std = theta.intercept;
    fit.coefs_std = theta.coefs;
    const Parameters orig = destandardize(theta.intercept, theta.coefs, problem.scaling);
    fit.intercept_orig = orig.intercept;
    fit.coefs_orig = orig.coefs;
    fit.objective_value = l1_objective(problem, theta.intercept, theta.coefs);
    fit.iterations = iterations;
    fit.converged = converged;
    return fit;
}

}  // namespace

// ---------------------------------------------------------------------------

Standardizer Standardizer::fit(const Eigen::MatrixXd& rows) {
    if (rows.rows() == 0) throw Error(ErrorKind::EmptyInput, "cannot standardize zero rows");
    Standardizer s;
    const double n = static_cast<double>(rows.rows());
    s.means = rows.colwise().mean().transpose();
    s.stds.resize(rows.cols());
    for (Eigen::Index j = 0; j < rows.cols(); ++j) {
        const double var = (rows.col(j).array() - s.means(j)).square().sum() / n;
        s.stds(j) = std::sqrt(var);
        if (!(s.stds(j) > 0.0))
            throw Error(ErrorKind::ConstantFeature, "feature column " + std::to_string(j) + " is constant");
    }
    return s;
}

Standardizer Standardizer::identity(Eigen::Index features) {
    return {Eigen::VectorXd::Zero(features), Eigen::VectorXd::Ones(features)};
}

Eigen::MatrixXd Standardizer::transform(const Eigen::MatrixXd& rows) const {
    return (rows.rowwise() - means.transpose()).array().rowwise() / stds.transpose().array();
}

Eigen::MatrixXd Standardizer::inverse_transform(const Eigen::MatrixXd& rows) const {
    return (rows.array().rowwise() * stds.transpose().array()).matrix().rowwise() + means.transpose();
}

LogitProblem LogitProblem::from_raw(const Eigen::MatrixXd& raw, const Eigen::VectorXd& targets, Eigen::VectorXd weights,
                                    std::vector<bool> penalty_mask, double lambda) {
    LogitProblem problem;
    problem.scaling = Standardizer::fit(raw);
    problem.features = problem.scaling.transform(raw);
    problem.targets = targets;
    problem.weights = weights.size() == 0 ? Eigen::VectorXd::Ones(raw.rows()) : std::move(weights);
    problem.penalty_mask = penalty_mask.empty() ? std::vector<bool>(static_cast<std::size_t>(raw.cols()), true)
                                                : std::move(penalty_mask);
    problem.lambda = lambda;
    problem.validate();
    return problem;
}

void LogitProblem::validate() const {
    if (targets.size() != rows() || weights.size() != rows())
        throw Error(ErrorKind::LengthMismatch, "targets/weights do not match the feature rows");
    if (static_cast<Eigen::Index>(penalty_mask.size()) != cols())
        throw Error(ErrorKind::LengthMismatch, "penalty mask does not match the feature count");
    if (scaling.size() != cols()) throw Error(ErrorKind::LengthMismatch, "standardizer does not match the feature count");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw Error(ErrorKind::DomainError, "lambda must be finite and >= 0");
    if (!(weights.array() > 0.0).all()) throw Error(ErrorKind::DomainError, "weights must be positive");
    for (Eigen::Index i = 0; i < targets.size(); ++i)
        if (targets(i) != 0.0 && targets(i) != 1.0) throw Error(ErrorKind::DomainError, "targets must be 0 or 1");
    if (!features.allFinite()) throw Error(ErrorKind::DomainError, "features must be finite");
}

Eigen::VectorXd ClassWeights::row_weights(const Eigen::Ref<const Eigen::VectorXd>& targets) const {
    Eigen::VectorXd w(targets.size());
    for (Eigen::Index i = 0; i < targets.size(); ++i) w(i) = targets(i) == 1.0 ? w_pos : w_neg;
    return w;
}

double probability_from_index(double eta) { return clamped_pair(eta).p; }

double predict_proba(double intercept, const Eigen::Ref<const Eigen::VectorXd>& coefs,
                     const Eigen::Ref<const Eigen::VectorXd>& x) {
    return probability_from_index(intercept + coefs.dot(x));
}

Eigen::VectorXd predict_proba_rows(double intercept, const Eigen::Ref<const Eigen::VectorXd>& coefs,
                              const Eigen::Ref<const Eigen::MatrixXd>& rows) {
    Eigen::VectorXd eta = rows * coefs;
    for (Eigen::Index i = 0; i < eta.size(); ++i) eta(i) = probability_from_index(intercept + eta(i));
    return eta;
}

double weighted_nll(const LogitProblem& problem, double intercept, const Eigen::Ref<const Eigen::VectorXd>& coefs) {
    return nll_from_index(problem, linear_index(problem, intercept, coefs));
}

Gradient nll_gradient(const LogitProblem& problem, double intercept, const Eigen::Ref<const Eigen::VectorXd>& coefs) {
    const Eigen::VectorXd r = index_residuals(problem, linear_index(problem, intercept, coefs));
    return {r.sum(), problem.features.transpose() * r};
}

double soft_threshold(double v, double t) {
    const double shrunk = std::abs(v) - t;
    if (shrunk <= 0.0) return 0.0;
    return v > 0.0 ? shrunk : -shrunk;
}

double kkt_violation(const LogitProblem& problem, double intercept, const Eigen::Ref<const Eigen::VectorXd>& coefs) {
    return kkt_from_gradient(problem, nll_gradient(problem, intercept, coefs), coefs);
}

double l1_objective(const LogitProblem& problem, double intercept, const Eigen::Ref<const Eigen::VectorXd>& coefs) {
    return weighted_nll(problem, intercept, coefs) + penalty(problem, coefs);
}

double null_intercept(const LogitProblem& problem) {
    const double total = problem.weights.sum();
    const double events = problem.weights.dot(problem.targets);
    const double rate = events / total;
    if (!(rate > 0.0 && rate < 1.0)) throw Error(ErrorKind::SingleClass, "training targets contain a single class");
    return std::log((1.0 - rate) / rate);
}

double null_model_lambda(const LogitProblem& problem) {
    // Unpenalized coefficients still move at the null model, so fit them first.
    Parameters theta{null_intercept(problem), Eigen::VectorXd::Zero(problem.cols())};
    theta = polish_on_support(problem, theta, 1e-12);
    const Gradient g = nll_gradient(problem, theta.intercept, theta.coefs);
    double bound = 0.0;
    for (Eigen::Index j = 0; j < problem.cols(); ++j)
        if (problem.penalty_mask[static_cast<std::size_t>(j)]) bound = std::max(bound, std::abs(g.d_coefs(j)));
    return bound;
}

LogitFit fit_l1(const LogitProblem& problem, const std::optional<Parameters>& warm_start, const SolverOptions& options) {
    problem.validate();
    const Eigen::Index p = problem.cols();

    Parameters theta;
    if (warm_start) {
        if (warm_start->coefs.size() != p) throw Error(ErrorKind::LengthMismatch, "warm start has the wrong length");
        theta = *warm_start;
    } else {
        theta = {null_intercept(problem), Eigen::VectorXd::Zero(p)};
    }

    // Crude bound on the Hessian norm; backtracking takes care of the rest.
    double lipschitz = 0.0;
    for (Eigen::Index i = 0; i < problem.rows(); ++i)
        lipschitz += problem.weights(i) * (1.0 + problem.features.row(i).squaredNorm());
    double step = 4.0 / lipschitz;

    const double polish_tolerance = options.kkt_tolerance * 1e-3;
    auto try_polish = [&](Parameters& current) {
        Parameters polished = polish_on_support(problem, current, polish_tolerance);
        // Near the optimum both objectives agree to rounding error, so allow a
        // relative slack at that level.
        const double before = l1_objective(problem, current.intercept, current.coefs);
        if (l1_objective(problem, polished.intercept, polished.coefs) <= before + kRoundingSlack * std::max(1.0, std::abs(before)))
            current = std::move(polished);
    };
    if (options.polish_interval > 0) try_polish(theta);
    std::vector<double> trace;
    if (options.record_trace) trace.push_back(l1_objective(problem, theta.intercept, theta.coefs));

    Parameters previous = theta;  // momentum anchor
    double momentum = 1.0;
    int iteration = 0;
    bool certified = false;

    for (; iteration < options.max_iterations; ++iteration) {
        Gradient g = nll_gradient(problem, theta.intercept, theta.coefs);
        if (kkt_from_gradient(problem, g, theta.coefs) <= options.kkt_tolerance) {
            certified = true;
            break;
        }

        // Extrapolated point for the accelerated variant.
        Parameters base = theta;
        double next_momentum = 1.0;
        double beta = 0.0;
        if (options.accelerate) {
            next_momentum = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
            beta = (momentum - 1.0) / next_momentum;
            base.intercept += beta * (theta.intercept - previous.intercept);
            base.coefs += beta * (theta.coefs - previous.coefs);
            g = nll_gradient(problem, base.intercept, base.coefs);
        }
        const double f_base = weighted_nll(problem, base.intercept, base.coefs);

        Parameters candidate;
        step *= 2.0;
        for (int halvings = 0;; ++halvings) {
            candidate.intercept = base.intercept - step * g.d_intercept;
            candidate.coefs = base.coefs - step * g.d_coefs;
            for (Eigen::Index j = 0; j < p; ++j)
                if (problem.penalty_mask[static_cast<std::size_t>(j)])
                    candidate.coefs(j) = soft_threshold(candidate.coefs(j), step * problem.lambda);
            const double di = candidate.intercept - base.intercept;
            const Eigen::VectorXd dc = candidate.coefs - base.coefs;
            const double model = f_base + g.d_intercept * di + g.d_coefs.dot(dc) + (di * di + dc.squaredNorm()) / (2.0 * step);
            if (weighted_nll(problem, candidate.intercept, candidate.coefs) <= model || halvings > 200) break;
            step *= 0.5;
        }

        if (options.accelerate) {
            // Restart momentum whenever the extrapolated step fails to descend.
            // Without extrapolation the step is a plain backtracked one and is kept.
            if (beta > 0.0 &&
                l1_objective(problem, candidate.intercept, candidate.coefs) > l1_objective(problem, theta.intercept, theta.coefs)) {
                momentum = 1.0;
                previous = theta;
                continue;
            }
            momentum = next_momentum;
        }

        const double update = max_abs_diff(candidate, theta);
        previous = theta;
        theta = std::move(candidate);

        const bool stalled = update < options.step_tolerance;
        if (options.polish_interval > 0 && (stalled || (iteration + 1) % options.polish_interval == 0)) try_polish(theta);
        if (options.record_trace) trace.push_back(l1_objective(problem, theta.intercept, theta.coefs));
        if (stalled) {
            ++iteration;
            certified = kkt_violation(problem, theta.intercept, theta.coefs) <= options.kkt_tolerance;
            break;
        }
    }

    LogitFit fit = make_fit(problem, theta, iteration, certified);
    fit.objective_trace = std::move(trace);
    return fit;
}

LogitFit fit_mle(const LogitProblem& problem) {
    problem.validate();
    const Eigen::Index p = problem.cols();
    std::vector<Eigen::Index> all(static_cast<std::size_t>(p));
    for (Eigen::Index j = 0; j < p; ++j) all[static_cast<std::size_t>(j)] = j;
    const Eigen::MatrixXd z = design(problem, all);

    LogitProblem unpenalized = problem;
    unpenalized.lambda = 0.0;

    Parameters theta{null_intercept(problem), Eigen::VectorXd::Zero(p)};
    auto saturated = [&](const Eigen::VectorXd& eta) { return eta.cwiseAbs().maxCoeff() > 30.0; };

    for (int iter = 1; iter <= kMleMaxIterations; ++iter) {
        const Eigen::VectorXd eta = linear_index(problem, theta.intercept, theta.coefs);
        const Eigen::VectorXd grad = z.transpose() * index_residuals(problem, eta);

        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(hessian(problem, z, eta));
        const Eigen::VectorXd& ev = eig.eigenvalues();
        if (!(ev.minCoeff() > 1e-12 * std::max(ev.maxCoeff(), 1e-300))) {
            if (saturated(eta))
                throw Error(ErrorKind::Separation, "fitted probabilities collapsed to 0/1 (quasi-separation)");
            throw Error(ErrorKind::Singular, "Hessian is not invertible (collinear features)");
        }
        const Eigen::VectorXd step =
            -(eig.eigenvectors() * (eig.eigenvectors().transpose() * grad).cwiseQuotient(ev));

        if (grad.cwiseAbs().maxCoeff() <= kMleGradientTolerance && step.cwiseAbs().maxCoeff() <= 1e-6)
            return make_fit(unpenalized, theta, iter - 1, true);

        const double f0 = weighted_nll(problem, theta.intercept, theta.coefs);
        double alpha = 1.0;
        Parameters candidate;
        bool accepted = false;
        // Once the Newton decrement is this small the change in the objective is
        // below its rounding error, so a line search can no longer tell steps
        // apart; the full step is taken.
        if (-grad.dot(step) < kTinyDecrement) {
            candidate.intercept = theta.intercept + step(0);
            candidate.coefs = theta.coefs + step.tail(p);
            accepted = true;
        }
        for (int half = 0; half < 60 && !accepted; ++half) {
            candidate.intercept = theta.intercept + alpha * step(0);
            candidate.coefs = theta.coefs + alpha * step.tail(p);
            if (weighted_nll(problem, candidate.intercept, candidate.coefs) <= f0) {
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) {
            if (grad.cwiseAbs().maxCoeff() <= kMleGradientTolerance) return make_fit(unpenalized, theta, iter - 1, true);
            if (saturated(eta)) throw Error(ErrorKind::Separation, "no descent along a diverging direction");
            throw Error(ErrorKind::NotConverged, "Newton line search failed");
        }
        theta = std::move(candidate);
        if (p > 0 && theta.coefs.cwiseAbs().maxCoeff() > kSeparationNorm)
            throw Error(ErrorKind::Separation, "standardized coefficients exceed 1e4");
    }
    throw Error(ErrorKind::Separation, "Newton iterations did not settle; coefficients keep growing");
}

Parameters destandardize(double intercept_std, const Eigen::Ref<const Eigen::VectorXd>& coefs_std,
                         const Standardizer& standardizer) {
    Parameters orig;
    orig.coefs = coefs_std.cwiseQuotient(standardizer.stds);
    orig.intercept = intercept_std - orig.coefs.dot(standardizer.means);
    return orig;
}

ClassWeights class_weights(const Eigen::Ref<const Eigen::VectorXd>& targets) {
    if (targets.size() == 0) throw Error(ErrorKind::EmptyInput, "no targets");
    const double r = targets.sum() / static_cast<double>(targets.size());
    if (!(r > 0.0 && r < 1.0)) throw Error(ErrorKind::SingleClass, "targets contain a single class");
    return {r, 1.0 / (2.0 * r), 1.0 / (2.0 * (1.0 - r))};
}

bool is_nonzero(double coef_std) { return std::abs(coef_std) > kNonzeroThreshold; }

int nonzero_count(const Eigen::Ref<const Eigen::VectorXd>& coefs_std, const std::vector<bool>& penalty_mask) {
    int count = 0;
    for (Eigen::Index j = 0; j < coefs_std.size(); ++j)
        if (penalty_mask[static_cast<std::size_t>(j)] && is_nonzero(coefs_std(j))) ++count;
    return count;
}

}  // namespace spreadsel
