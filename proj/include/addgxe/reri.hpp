#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "addgxe/dataset.hpp"

namespace addgxe {

/// Prospective logistic fit of D on (1, a1, a2, a1 a2, x) and the RERI derived
/// from it.
struct ReriResult {
  Eigen::VectorXd coefficients;  // intercept, a1, a2, a1 a2, covariates
  Eigen::MatrixXd covariance;
  double reri = 0.0;
  double se = 0.0;
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
  std::size_t n_cases = 0;
};

struct ReriOptions {
  /// Covariate names; nullopt uses every covariate in the dataset.
  std::optional<std::vector<std::string>> covariates;
  /// Permit non-binary exposures (a unit contrast). Only for demonstrating the
  /// failure of the product-term model with a continuous exposure.
  bool allow_non_binary = false;
};

/// exp(b1 + b2 + b3) - exp(b1) - exp(b2) + 1.
double reri_from_log_odds(double b1, double b2, double b3);
/// Gradient of reri_from_log_odds in (b1, b2, b3).
Eigen::Vector3d reri_gradient(double b1, double b2, double b3);

ReriResult reri_test(const Dataset& ds, const ReriOptions& opt = {});

}  // namespace addgxe
