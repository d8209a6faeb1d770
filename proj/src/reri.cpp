#include "addgxe/reri.hpp"

#include <algorithm>
#include <cmath>

#include "addgxe/errors.hpp"
#include "addgxe/glm.hpp"
#include "addgxe/interaction.hpp"

namespace addgxe {

double reri_from_log_odds(double b1, double b2, double b3) {
  return std::exp(b1 + b2 + b3) - std::exp(b1) - std::exp(b2) + 1.0;
}

Eigen::Vector3d reri_gradient(double b1, double b2, double b3) {
  const double s = std::exp(b1 + b2 + b3);
  return {s - std::exp(b1), s - std::exp(b2), s};
}

ReriResult reri_test(const Dataset& ds, const ReriOptions& opt) {
  if (!opt.allow_non_binary &&
      (ds.a1_kind().tag != ExposureTag::binary || ds.a2_kind().tag != ExposureTag::binary))
    throw UnsupportedError("the RERI comparator is defined for binary exposures");
  ds.require_cases_and_controls();

  std::vector<Eigen::Index> cols;
  if (opt.covariates) {
    for (const auto& name : *opt.covariates) {
      const auto idx = ds.covariate_index(name);
      if (!idx) throw SchemaError(name, "covariate '" + name + "' is not a dataset column");
      cols.push_back(static_cast<Eigen::Index>(*idx));
    }
  } else {
    for (std::size_t j = 0; j < ds.p(); ++j) cols.push_back(static_cast<Eigen::Index>(j));
  }

  const auto n = static_cast<Eigen::Index>(ds.n());
  Eigen::MatrixXd X(n, 4 + static_cast<Eigen::Index>(cols.size()));
  std::vector<double> y(ds.n());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    X(i, 0) = 1.0;
    X(i, 1) = ds.a1()[k];
    X(i, 2) = ds.a2()[k];
    X(i, 3) = ds.a1()[k] * ds.a2()[k];
    for (std::size_t c = 0; c < cols.size(); ++c) X(i, static_cast<Eigen::Index>(4 + c)) = ds.x()(i, cols[c]);
    y[k] = ds.d()[k];
  }
  std::vector<double> w;
  if (ds.has_weights()) w = *ds.weights();
  const GlmFit fit = fit_glm(X, y, w, {Family::bernoulli_logit, 2});

  ReriResult r;
  r.coefficients = fit.coefficients;
  r.covariance = fit.information.ldlt().solve(Eigen::MatrixXd::Identity(fit.information.rows(), fit.information.cols()));
  const double b1 = r.coefficients[1], b2 = r.coefficients[2], b3 = r.coefficients[3];
  r.reri = reri_from_log_odds(b1, b2, b3);
  const Eigen::Vector3d grad = reri_gradient(b1, b2, b3);
  const double var = grad.dot(r.covariance.block<3, 3>(1, 1) * grad);
  if (!(var > 0.0) || !std::isfinite(var)) throw DegenerateVarianceError("RERI variance is not positive");
  r.se = std::sqrt(var);
  r.statistic = r.reri / r.se;
  r.p_value = std::clamp(two_sided_p(r.statistic), 0.0, 1.0);
  r.n = ds.n();
  r.n_cases = ds.n_cases();
  return r;
}

}  // namespace addgxe
