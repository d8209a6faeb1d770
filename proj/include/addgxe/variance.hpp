#pragma once

#include <cstdint>
#include <functional>

#include <Eigen/Dense>

#include "addgxe/dataset.hpp"
#include "addgxe/decomposition.hpp"
#include "addgxe/interaction.hpp"
#include "addgxe/nuisance.hpp"
#include "addgxe/parallel.hpp"

namespace addgxe {

/// Plug-in V1 + V2 + V3 for binary exposures without covariates.
///
/// Evaluated at the independence submodel (overall control frequencies,
/// omega = 0), so v1 and v2 do not depend on `independence`; the flag only
/// zeroes v3.
VarianceDecomposition closed_form_binary_variance(const Dataset& ds, bool independence);

/// n^-1 Var(W + J' IF) from the stacked influence contributions in `nm`.
///
/// v1 = n^-1 Var(W). The nuisance term J' IF is regressed on the influence
/// contributions of the independence submodel (`submodel_influence`; when
/// absent, the non-omega columns of nm.influence with nonzero J). v3 is the
/// residual variance, 0 when no omega is estimated; v2 = total - v1 - v3.
VarianceDecomposition sandwich_variance(const UVector& w, const NuisanceModels& nm, const Eigen::VectorXd& jac,
                                        const Eigen::MatrixXd* submodel_influence = nullptr);

/// Central differences with step max(1e-6, 1e-6 |theta_k|).
Eigen::VectorXd numeric_jacobian(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& theta);

/// Numeric Jacobian of mean W in theta for the fitted models.
Eigen::VectorXd w_jacobian(const Dataset& ds, const NuisanceModels& nm, const GFunction& g);

/// Exact derivative of mean U for binary exposures without covariates, in the
/// coordinates of nm.theta().
Eigen::VectorXd analytic_binary_jacobian(const Dataset& ds, const NuisanceModels& nm);

/// Full recipe rerun on each bootstrap sample; returns the mean contribution.
using Pipeline = std::function<double(const Dataset&)>;

struct BootstrapOptions {
  std::size_t replicates = 1000;
  std::uint64_t seed = 0;
  bool stratified = true;  // resample cases and controls separately
  Execution execution = Execution::parallel;
};

/// Replicate r draws from stream (seed, r). Failed replicates are dropped;
/// more than 5% dropped raises DegenerateVarianceError.
BootstrapSummary bootstrap(const Dataset& ds, const Pipeline& pipeline, const BootstrapOptions& opt);

/// Replicate statistics in replicate order (NaN for failures); exposed for tests.
std::vector<double> bootstrap_replicates(const Dataset& ds, const Pipeline& pipeline, const BootstrapOptions& opt);

/// Summarizes replicate statistics around the observed value.
BootstrapSummary summarize_bootstrap(const std::vector<double>& replicates, double observed);

/// Type-7 sample quantile of sorted data.
double quantile_sorted(const std::vector<double>& sorted, double prob);

}  // namespace addgxe
