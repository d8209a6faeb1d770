#include "addgxe/variance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "addgxe/errors.hpp"
#include "addgxe/rng.hpp"

namespace addgxe {

namespace {

/// Variance with divisor n.
double var_n(const Eigen::VectorXd& v) {
  if (v.size() == 0) return 0.0;
  const double m = v.mean();
  return (v.array() - m).square().sum() / static_cast<double>(v.size());
}

void require_binary_plain(const Dataset& ds, const char* what) {
  if (ds.a1_kind().tag != ExposureTag::binary || ds.a2_kind().tag != ExposureTag::binary)
    throw UnsupportedError(std::string(what) + " requires binary exposures");
  if (ds.has_weights()) throw UnsupportedError(std::string(what) + " does not support sampling weights");
}

std::vector<std::size_t> draw_rows(const Dataset& ds, const std::vector<std::size_t>& cases,
                                   const std::vector<std::size_t>& controls, bool stratified, Rng& rng) {
  std::vector<std::size_t> rows(ds.n());
  if (stratified) {
    std::size_t k = 0;
    for (std::size_t j = 0; j < cases.size(); ++j) rows[k++] = cases[rng.index(cases.size())];
    for (std::size_t j = 0; j < controls.size(); ++j) rows[k++] = controls[rng.index(controls.size())];
  } else {
    for (auto& r : rows) r = rng.index(ds.n());
  }
  return rows;
}

}  // namespace

std::string to_string(VarianceMethod m) {
  switch (m) {
    case VarianceMethod::closed_form_binary: return "closed-form-binary";
    case VarianceMethod::sandwich: return "sandwich";
    case VarianceMethod::bootstrap: return "bootstrap";
  }
  return "?";
}

VarianceDecomposition closed_form_binary_variance(const Dataset& ds, bool independence) {
  require_binary_plain(ds, "closed-form variance");
  if (ds.p() != 0) {
    bool all_zero = ds.x().isZero(0.0);
    if (!all_zero) throw UnsupportedError("closed-form variance is defined only without covariates");
  }
  ds.require_cases_and_controls();
  const auto n = static_cast<Eigen::Index>(ds.n());
  const double nn = static_cast<double>(n);
  double p1 = 0.0, p2 = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    if (ds.d()[static_cast<std::size_t>(i)] == 0) {
      p1 += ds.a1()[static_cast<std::size_t>(i)];
      p2 += ds.a2()[static_cast<std::size_t>(i)];
    }
  const double n0 = static_cast<double>(ds.n_controls());
  p1 /= n0;
  p2 /= n0;
  if (p1 <= 0.0 || p1 >= 1.0 || p2 <= 0.0 || p2 >= 1.0)
    throw DegenerateVarianceError("control exposure frequency is 0 or 1");
  const double q0 = n0 / nn;

  Eigen::VectorXd core(n), t1(n), t2(n), t3(n);
  double c1 = 0.0, c2 = 0.0, c3 = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const double a1 = ds.a1()[k] - p1;
    const double a2 = ds.a2()[k] - p2;
    const double d = ds.d()[k];
    core[i] = a1 * a2 * d;
    t1[i] = a1 * (1.0 - d);
    t2[i] = a2 * (1.0 - d);
    t3[i] = a1 * a2 * (1.0 - d);
    c1 += a2 * d;
    c2 += a1 * d;
    c3 += ds.a1()[k] * ds.a2()[k] * a1 * a2 * d;
  }
  c1 /= nn;
  c2 /= nn;
  c3 /= nn;

  VarianceDecomposition v;
  v.method = VarianceMethod::closed_form_binary;
  v.v1 = var_n(core) / nn;
  v.v2 = (c1 * c1 * var_n(t1) + c2 * c2 * var_n(t2)) / (q0 * q0 * nn);
  if (!independence) {
    const double c = c3 / (p1 * (1.0 - p1) * p2 * (1.0 - p2)) - c1 / (1.0 - p2) - c2 / (1.0 - p1);
    v.v3 = c * c * var_n(t3) / (q0 * q0 * nn);
  }
  v.total = v.v1 + v.v2 + v.v3;
  return v;
}

VarianceDecomposition sandwich_variance(const UVector& w, const NuisanceModels& nm, const Eigen::VectorXd& jac,
                                        const Eigen::MatrixXd* submodel_influence) {
  const auto n = static_cast<Eigen::Index>(w.u.size());
  if (jac.size() != nm.theta_size()) throw ConfigError("Jacobian length does not match the parameter vector");
  if (nm.influence.rows() != n || nm.influence.cols() != jac.size())
    throw ConfigError("influence contributions do not match the contribution vector");
  if (!jac.allFinite() || !nm.influence.allFinite())
    throw SingularMatrixError("non-finite influence contributions or Jacobian");
  const Eigen::Map<const Eigen::VectorXd> u(w.u.data(), n);
  const double nn = static_cast<double>(n);

  VarianceDecomposition v;
  v.method = VarianceMethod::sandwich;
  v.v1 = var_n(u) / nn;
  const Eigen::VectorXd nuisance = nm.influence * jac;
  v.total = var_n(u + nuisance) / nn;
  if (auto k = nm.omega_index()) {
    Eigen::MatrixXd basis;
    if (submodel_influence) {
      if (submodel_influence->rows() != n) throw ConfigError("submodel influence has the wrong number of rows");
      basis = *submodel_influence;
    } else {
      std::vector<Eigen::Index> cols;
      for (Eigen::Index j = 0; j < jac.size(); ++j)
        if (j != *k && jac[j] != 0.0) cols.push_back(j);
      basis = nm.influence(Eigen::all, cols);
    }
    const Eigen::VectorXd centred = nuisance.array() - nuisance.mean();
    Eigen::VectorXd resid = centred;
    if (basis.cols() > 0) {
      const Eigen::MatrixXd b = basis.rowwise() - basis.colwise().mean();
      resid = centred - b * b.colPivHouseholderQr().solve(centred);
    }
    v.v3 = resid.squaredNorm() / nn / nn;
  }
  v.v2 = v.total - v.v1 - v.v3;
  return v;
}

Eigen::VectorXd numeric_jacobian(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& theta) {
  Eigen::VectorXd out(theta.size());
  Eigen::VectorXd t = theta;
  for (Eigen::Index k = 0; k < theta.size(); ++k) {
    const double h = std::max(1e-6, 1e-6 * std::abs(theta[k]));
    t[k] = theta[k] + h;
    const double up = f(t);
    t[k] = theta[k] - h;
    const double down = f(t);
    t[k] = theta[k];
    if (!std::isfinite(up) || !std::isfinite(down))
      throw DomainError("non-finite evaluation while differentiating coordinate " + std::to_string(k));
    out[k] = (up - down) / (2.0 * h);
  }
  return out;
}

Eigen::VectorXd w_jacobian(const Dataset& ds, const NuisanceModels& nm, const GFunction& g) {
  return numeric_jacobian([&](const Eigen::VectorXd& t) { return mean_w(ds, nm.with_theta(t), g); }, nm.theta());
}

Eigen::VectorXd analytic_binary_jacobian(const Dataset& ds, const NuisanceModels& nm) {
  if (ds.a1_kind().tag != ExposureTag::binary || ds.a2_kind().tag != ExposureTag::binary ||
      !nm.a1_model.covariate_columns.empty() || !nm.a2_model.covariate_columns.empty())
    throw UnsupportedError("analytic Jacobian is available for binary exposures without covariates");
  const Eigen::VectorXd theta = nm.theta();
  const double p1 = 1.0 / (1.0 + std::exp(-nm.a1_model.fit.coefficients[0]));
  const double p2 = 1.0 / (1.0 + std::exp(-nm.a2_model.fit.coefficients[0]));
  const double omega = nm.omega();
  double c1 = 0.0, c2 = 0.0, c3 = 0.0;
  for (std::size_t i = 0; i < ds.n(); ++i) {
    if (ds.d()[i] == 0) continue;
    const double a1 = ds.a1()[i], a2 = ds.a2()[i];
    const double tilt = std::exp(-omega * a1 * a2);
    c1 += tilt * (a2 - p2);
    c2 += tilt * (a1 - p1);
    c3 += a1 * a2 * tilt * (a1 - p1) * (a2 - p2);
  }
  const double nn = static_cast<double>(ds.n());
  c1 /= nn;
  c2 /= nn;
  c3 /= nn;
  Eigen::VectorXd jac = Eigen::VectorXd::Zero(theta.size());
  const auto q1 = nm.a1_model.fit.coefficients.size();
  jac[0] = -c1 * p1 * (1.0 - p1);
  jac[q1] = -c2 * p2 * (1.0 - p2);
  if (nm.omega_source == NuisanceModels::OmegaSource::a1_model) jac[q1 - 1] = -c3;
  // The A1 coefficient of the A2 model is never used: predictions are at A1 = 0.
  return jac;
}

double quantile_sorted(const std::vector<double>& sorted, double prob) {
  if (sorted.empty()) throw EmptyInputError("quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::vector<double> bootstrap_replicates(const Dataset& ds, const Pipeline& pipeline, const BootstrapOptions& opt) {
  if (opt.replicates < 100) throw ConfigError("bootstrap needs at least 100 replicates");
  std::vector<std::size_t> cases, controls;
  for (std::size_t i = 0; i < ds.n(); ++i) (ds.d()[i] == 1 ? cases : controls).push_back(i);
  const auto b_count = static_cast<long>(opt.replicates);
  std::vector<double> out(opt.replicates, std::numeric_limits<double>::quiet_NaN());

  auto one = [&](long r) {
    Rng rng = stream(opt.seed, static_cast<std::uint64_t>(r));
    try {
      const auto rows = draw_rows(ds, cases, controls, opt.stratified, rng);
      const double t = pipeline(ds.subset(rows));
      if (std::isfinite(t)) out[static_cast<std::size_t>(r)] = t;
    } catch (const Error&) {
      // counted as dropped
    }
  };
  if (opt.execution == Execution::parallel) {
#pragma omp parallel for schedule(dynamic, 4)
    for (long r = 0; r < b_count; ++r) one(r);
  } else {
    for (long r = 0; r < b_count; ++r) one(r);
  }
  return out;
}

BootstrapSummary summarize_bootstrap(const std::vector<double>& replicates, double observed) {
  std::vector<double> ok;
  ok.reserve(replicates.size());
  for (double t : replicates)
    if (std::isfinite(t)) ok.push_back(t);
  BootstrapSummary s;
  s.replicates = ok.size();
  s.dropped = replicates.size() - ok.size();
  if (static_cast<double>(s.dropped) > 0.05 * static_cast<double>(replicates.size()))
    throw DegenerateVarianceError("bootstrap dropped " + std::to_string(s.dropped) + " of " +
                                  std::to_string(replicates.size()) + " replicates");
  if (ok.size() < 2) throw DegenerateVarianceError("too few successful bootstrap replicates");
  const double m = std::accumulate(ok.begin(), ok.end(), 0.0) / static_cast<double>(ok.size());
  double ss = 0.0;
  for (double t : ok) ss += (t - m) * (t - m);
  s.variance = ss / static_cast<double>(ok.size() - 1);

  std::size_t upper = 0, lower = 0;
  for (double t : ok) {
    const double z = t - observed;
    if (z >= observed) ++upper;
    if (z <= observed) ++lower;
  }
  const double b = static_cast<double>(ok.size());
  s.p_value = std::clamp(2.0 * static_cast<double>(std::min(upper, lower)) / b, 1.0 / b, 1.0);

  std::sort(ok.begin(), ok.end());
  s.ci_lower = quantile_sorted(ok, 0.025);
  s.ci_upper = quantile_sorted(ok, 0.975);
  return s;
}

BootstrapSummary bootstrap(const Dataset& ds, const Pipeline& pipeline, const BootstrapOptions& opt) {
  const double observed = pipeline(ds);
  return summarize_bootstrap(bootstrap_replicates(ds, pipeline, opt), observed);
}

}  // namespace addgxe
