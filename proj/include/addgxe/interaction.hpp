#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "addgxe/dataset.hpp"
#include "addgxe/decomposition.hpp"
#include "addgxe/nuisance.hpp"

namespace addgxe {

/// Which member of the statistic family a UVector holds.
enum class Method { binary, binary_independent, covariate_adjusted, continuous, count, polytomous, unified };

std::string to_string(Method m);

/// g = (A1 - E(A1|X)) (A2 - E(A2|X)), centred at the baseline means.
struct CenteredProduct {};

/// g = sum_k (I(A1 = k) - P(A1 = k | X)) (A2 - E(A2|X)), k = 1..K-1.
struct PolytomousCenteredProduct {};

/// Arbitrary contrast on a discrete support; the full W(g) with its three
/// correction sums is evaluated. `x` is the subject's full covariate row.
struct DiscreteContrast {
  std::function<double(int a1, int a2, std::span<const double> x)> g;
};

using GFunction = std::variant<CenteredProduct, PolytomousCenteredProduct, DiscreteContrast>;

/// Contrast from a table indexed [a1][a2]; levels of a2 past the last column
/// reuse the last column. Ignores covariates.
DiscreteContrast tabulated_contrast(Eigen::MatrixXd table);

/// Per-subject contributions W_i(g); zero for every control.
struct UVector {
  std::vector<double> u;
  Method method = Method::binary;
  GFunction g = CenteredProduct{};
  Eigen::VectorXd theta;  // nuisance parameters the contributions were computed at
  double omega = 0.0;

  double mean() const;
};

struct TestResult {
  std::string method;
  double mean_u = 0.0;
  double statistic = 0.0;
  double p_value = 1.0;
  VarianceDecomposition variance;
  std::size_t n = 0;
  std::size_t n_cases = 0;
  std::optional<BootstrapSummary> bootstrap;
};

/// Method tag implied by the data, plan and contrast.
Method classify(const Dataset& ds, const NuisanceModels& nm, const GFunction& g);

UVector compute_u(const Dataset& ds, const NuisanceModels& nm, const GFunction& g);

/// Mean of compute_u without materializing the vector (used for Jacobians).
double mean_w(const Dataset& ds, const NuisanceModels& nm, const GFunction& g);

/// (mean u) / sqrt(v.total) with a two-sided normal p-value.
TestResult standardized_test(const UVector& u, const VarianceDecomposition& v, std::size_t n_cases);

/// Two-sided standard-normal tail probability 2 (1 - Phi(|z|)).
double two_sided_p(double z);

/// Estimate of beta3 / Pr(D = 1) for binary exposures without covariates.
double scaled_beta3(const UVector& u, const NuisanceModels& nm, const Dataset& ds);

/// kappa = p1 (1 - p1) p2 (1 - p2) lambda / sigma2.
double noncentrality_kappa(double p1, double p2, double lambda, double sigma2);

/// Fully specified population on finite supports, used to check the zero-mean
/// property of W(g) by exhaustive enumeration. Covariate X takes levels
/// 0..levels-1; a contrast sees x as a one-element row holding the level.
struct DiscretePopulation {
  int a1_levels = 2;
  int a2_levels = 2;
  /// Per covariate level: baseline densities f(a1 | A2 = 0, x), f(a2 | A1 = 0, x),
  /// odds-ratio table OR(a1, a2; x) (row/column 0 equal to 1) and risk mu(a1, a2, x).
  std::vector<Eigen::VectorXd> f1;
  std::vector<Eigen::VectorXd> f2;
  std::vector<Eigen::MatrixXd> odds_ratio;
  std::vector<Eigen::MatrixXd> risk;

  std::size_t x_levels() const { return risk.size(); }
  /// Joint law of (A1, A2) given x implied by the baseline/odds-ratio factorization.
  Eigen::MatrixXd joint(std::size_t x) const;
  /// Pr(D = 1 | x).
  double disease_probability(std::size_t x) const;
};

/// Exact E{W(g) | D = 1, x} for every covariate level, by enumeration.
std::vector<double> brute_force_expectation(const DiscretePopulation& pop, const GFunction& g);

}  // namespace addgxe
