#pragma once

#include <span>
#include <string>

#include <Eigen/Dense>

namespace addgxe {

enum class Family { bernoulli_logit, poisson_log, gaussian_identity, multinomial_logit };

std::string to_string(Family f);

struct GlmSpec {
  Family family = Family::bernoulli_logit;
  int categories = 2;  // multinomial only; responses coded 0..categories-1, 0 is reference
};

/// Result of a weighted maximum-likelihood fit.
///
/// For the multinomial family the coefficient vector holds categories-1 blocks
/// of length p (one linear predictor per non-reference category).
struct GlmFit {
  GlmSpec spec;
  Eigen::Index predictors = 0;  // p, columns of the design
  Eigen::VectorXd coefficients;
  /// Total observed information at the estimate (negative Hessian of the
  /// weighted log-likelihood). Gaussian uses unit dispersion.
  Eigen::MatrixXd information;
  /// Per-observation score contributions, n x q, rows sum to ~0 at the MLE.
  Eigen::MatrixXd scores;
  double log_likelihood = 0.0;
  int iterations = 0;
  double score_norm = 0.0;  // max |total score| at the returned estimate

  Eigen::Index linear_predictors() const {
    return spec.family == Family::multinomial_logit ? spec.categories - 1 : 1;
  }
  /// Copy with the coefficient vector replaced; diagnostics are left stale.
  GlmFit with_coefficients(const Eigen::VectorXd& coef) const;
};

/// Fits a GLM by Newton/IRLS with step-halving.
///
/// `weights` may be empty (all ones). Converges when max |score| <= 1e-8 or the
/// relative coefficient change is <= 1e-10, at most 100 iterations.
/// Throws SingularMatrixError for a rank-deficient design, DivergenceError on
/// non-convergence or separation.
GlmFit fit_glm(const Eigen::MatrixXd& design, std::span<const double> response, std::span<const double> weights,
               const GlmSpec& spec);

/// Inverse link applied at one covariate row. Multinomial returns the
/// probability of category 1 when K == 2; use predict_probabilities otherwise.
double predict_mean(const GlmFit& fit, const Eigen::Ref<const Eigen::RowVectorXd>& row);

/// Category probabilities (length K, reference first) for multinomial fits;
/// (1-p, p) for bernoulli fits.
Eigen::VectorXd predict_probabilities(const GlmFit& fit, const Eigen::Ref<const Eigen::RowVectorXd>& row);

/// Weighted log-likelihood, score and information at `coef`. Exposed for
/// diagnostics; the fitter uses the same routine.
struct GlmEvaluation {
  double log_likelihood = 0.0;
  Eigen::VectorXd score;
  Eigen::MatrixXd information;
};
GlmEvaluation evaluate_glm(const Eigen::MatrixXd& design, std::span<const double> response,
                           std::span<const double> weights, const GlmSpec& spec, const Eigen::VectorXd& coef);

}  // namespace addgxe
