#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "addgxe/dataset.hpp"
#include "addgxe/glm.hpp"

namespace addgxe {

/// Link used for the baseline model of the second exposure.
enum class A2Family { logit, identity, log };

std::string to_string(A2Family f);
A2Family parse_a2_family(const std::string& text);

struct ModelPlan {
  /// Covariate names to adjust for; nullopt means every covariate in the dataset.
  std::optional<std::vector<std::string>> covariates;
  /// Defaults from the exposure kind: binary -> logit, count -> log, continuous -> identity.
  std::optional<A2Family> a2_family;
  bool independence = false;
};

/// Baseline model of one exposure given covariates. Without independence the
/// other exposure enters as the last design column and predictions are taken at
/// other exposure = 0.
struct ExposureModel {
  GlmFit fit;
  std::vector<Eigen::Index> covariate_columns;
  bool conditions_on_other = false;

  /// Design row (1, x[cols], other) for a full dataset covariate row.
  Eigen::RowVectorXd design_row(const Eigen::Ref<const Eigen::RowVectorXd>& x, double other) const;
};

struct OmegaEstimate {
  double value = 0.0;
  double se = 0.0;
  /// Per-subject influence contributions (length n, zero for rows not used in the fit).
  Eigen::VectorXd influence;
};

/// Fitted nuisance components: the A1 model, the baseline A2 model and the
/// log odds-ratio parameter omega of log OR(A1, A2; X) = omega * A1 * A2.
///
/// theta stacks the A1-model coefficients followed by the A2-model
/// coefficients; omega, when estimated, is one of those coordinates.
class NuisanceModels {
 public:
  enum class OmegaSource { none, a1_model, a2_model };

  ExposureModel a1_model;
  ExposureModel a2_model;
  A2Family a2_family = A2Family::logit;
  ExposureKind a1_kind;
  ExposureKind a2_kind;
  bool independence = false;
  bool weighted = false;  // fitted on the weighted full sample
  OmegaSource omega_source = OmegaSource::none;
  /// Stacked influence contributions n x dim(theta): n I^{-1} s_i per model.
  Eigen::MatrixXd influence;

  double omega() const;
  Eigen::VectorXd theta() const;
  Eigen::Index theta_size() const;
  /// Position of omega inside theta, or nullopt under independence.
  std::optional<Eigen::Index> omega_index() const;
  /// Standard error of omega from the inverse information (0 under independence).
  double omega_se() const;

  /// Copy with coefficients replaced by `theta` (influence left unchanged).
  NuisanceModels with_theta(const Eigen::VectorXd& theta) const;

  /// E(A1 | A2 = 0, x) under the baseline law (for categorical A1 the mean level index).
  double a1_baseline_mean(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  /// Baseline level probabilities of A1 (length K, level 0 first).
  Eigen::VectorXd a1_baseline_probabilities(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  /// p2(x), m2(x) or n2(x): baseline mean of A2 at A1 = 0.
  double a2_baseline_mean(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
};

/// Fits the nuisance models on controls, or on the weighted full sample when
/// the dataset carries sampling weights.
NuisanceModels fit_nuisance(const Dataset& ds, const ModelPlan& plan);

/// log odds-ratio parameter relating the exposures among controls:
/// binary A1 -> coefficient of A2 in the logistic regression of A1 on (A2, X);
/// categorical A1 -> coefficient of A1 in the canonical-link regression of A2
/// on (A1, X) (A2 binary or count).
OmegaEstimate estimate_omega(const Dataset& ds, const ModelPlan& plan);

/// Baseline mean of exposure `which` (1 or 2) at covariate row x.
double baseline_mean(const NuisanceModels& nm, int which, const Eigen::Ref<const Eigen::RowVectorXd>& x);

/// Resolves plan covariate names into dataset column indices.
std::vector<Eigen::Index> resolve_covariates(const Dataset& ds, const ModelPlan& plan);

}  // namespace addgxe
