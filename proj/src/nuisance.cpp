#include "addgxe/nuisance.hpp"

#include <cmath>

#include "addgxe/errors.hpp"

namespace addgxe {

namespace {

GlmSpec a1_spec(const ExposureKind& kind) {
  switch (kind.tag) {
    case ExposureTag::binary: return {Family::bernoulli_logit, 2};
    case ExposureTag::categorical: return {Family::multinomial_logit, kind.levels};
    default:
      throw UnsupportedError("exposure a1 must be binary or categorical (declared " + kind.to_string() + ")");
  }
}

A2Family default_a2_family(const ExposureKind& kind) {
  switch (kind.tag) {
    case ExposureTag::binary: return A2Family::logit;
    case ExposureTag::count: return A2Family::log;
    case ExposureTag::continuous: return A2Family::identity;
    case ExposureTag::categorical: break;
  }
  throw UnsupportedError("exposure a2 must be binary, count or continuous (declared " + kind.to_string() + ")");
}

GlmSpec a2_spec(A2Family fam, const ExposureKind& kind) {
  if (kind.tag == ExposureTag::categorical)
    throw UnsupportedError("exposure a2 must be binary, count or continuous (declared " + kind.to_string() + ")");
  switch (fam) {
    case A2Family::logit:
      if (kind.tag != ExposureTag::binary) throw UnsupportedError("a2 family logit requires a binary a2");
      return {Family::bernoulli_logit, 2};
    case A2Family::log:
      if (kind.tag != ExposureTag::count) throw UnsupportedError("a2 family log requires a count a2");
      return {Family::poisson_log, 2};
    case A2Family::identity: return {Family::gaussian_identity, 2};
  }
  return {};
}

/// Covariate columns with at least one nonzero entry among the fit rows.
/// Identically-zero columns carry no information and are left out of the design.
std::vector<Eigen::Index> informative_columns(const Dataset& ds, const std::vector<Eigen::Index>& cols,
                                              const std::vector<std::size_t>& rows) {
  std::vector<Eigen::Index> out;
  for (auto c : cols) {
    bool nonzero = false;
    for (auto i : rows)
      if (ds.x()(static_cast<Eigen::Index>(i), c) != 0.0) {
        nonzero = true;
        break;
      }
    if (nonzero) out.push_back(c);
  }
  return out;
}

struct FittedModel {
  ExposureModel model;
  Eigen::MatrixXd influence;  // n x q
};

FittedModel fit_exposure_model(const Dataset& ds, const std::vector<std::size_t>& rows,
                               const std::vector<Eigen::Index>& cols, const std::vector<double>& response,
                               const std::vector<double>* other, const GlmSpec& spec) {
  const auto m = static_cast<Eigen::Index>(rows.size());
  const auto p = static_cast<Eigen::Index>(1 + cols.size() + (other ? 1 : 0));
  Eigen::MatrixXd X(m, p);
  std::vector<double> y(rows.size());
  std::vector<double> w;
  if (ds.has_weights()) w.resize(rows.size());
  for (Eigen::Index r = 0; r < m; ++r) {
    const auto i = rows[static_cast<std::size_t>(r)];
    X(r, 0) = 1.0;
    for (std::size_t k = 0; k < cols.size(); ++k)
      X(r, static_cast<Eigen::Index>(k + 1)) = ds.x()(static_cast<Eigen::Index>(i), cols[k]);
    if (other) X(r, p - 1) = (*other)[i];
    y[static_cast<std::size_t>(r)] = response[i];
    if (!w.empty()) w[static_cast<std::size_t>(r)] = ds.weight(i);
  }
  FittedModel out;
  out.model.fit = fit_glm(X, y, w, spec);
  out.model.covariate_columns = cols;
  out.model.conditions_on_other = other != nullptr;

  const auto n = static_cast<Eigen::Index>(ds.n());
  const auto q = out.model.fit.coefficients.size();
  // n * I^{-1} s_i, so that theta_hat - theta ~ mean of the rows.
  const Eigen::MatrixXd scaled =
      out.model.fit.information.ldlt().solve(out.model.fit.scores.transpose()) * static_cast<double>(n);
  out.influence = Eigen::MatrixXd::Zero(n, q);
  for (Eigen::Index r = 0; r < m; ++r)
    out.influence.row(static_cast<Eigen::Index>(rows[static_cast<std::size_t>(r)])) = scaled.col(r).transpose();
  return out;
}

}  // namespace

std::string to_string(A2Family f) {
  switch (f) {
    case A2Family::logit: return "logit";
    case A2Family::identity: return "identity";
    case A2Family::log: return "log";
  }
  return "?";
}

A2Family parse_a2_family(const std::string& text) {
  if (text == "logit") return A2Family::logit;
  if (text == "identity") return A2Family::identity;
  if (text == "log") return A2Family::log;
  throw ConfigError("unknown a2 family '" + text + "' (expected logit, identity or log)");
}

Eigen::RowVectorXd ExposureModel::design_row(const Eigen::Ref<const Eigen::RowVectorXd>& x, double other) const {
  Eigen::RowVectorXd row(fit.predictors);
  row[0] = 1.0;
  for (std::size_t k = 0; k < covariate_columns.size(); ++k) {
    if (covariate_columns[k] >= x.size()) throw ConfigError("covariate row is shorter than the fitted design");
    row[static_cast<Eigen::Index>(k + 1)] = x[covariate_columns[k]];
  }
  if (conditions_on_other) row[fit.predictors - 1] = other;
  return row;
}

std::vector<Eigen::Index> resolve_covariates(const Dataset& ds, const ModelPlan& plan) {
  std::vector<Eigen::Index> cols;
  if (!plan.covariates) {
    for (std::size_t j = 0; j < ds.p(); ++j) cols.push_back(static_cast<Eigen::Index>(j));
    return cols;
  }
  for (const auto& name : *plan.covariates) {
    const auto idx = ds.covariate_index(name);
    if (!idx) throw SchemaError(name, "covariate '" + name + "' is not a dataset column");
    cols.push_back(static_cast<Eigen::Index>(*idx));
  }
  return cols;
}

double NuisanceModels::omega() const {
  switch (omega_source) {
    case OmegaSource::none: return 0.0;
    case OmegaSource::a1_model:
      return a1_model.fit.coefficients[a1_model.fit.coefficients.size() - 1];
    case OmegaSource::a2_model:
      return a2_model.fit.coefficients[a2_model.fit.coefficients.size() - 1];
  }
  return 0.0;
}

Eigen::Index NuisanceModels::theta_size() const {
  return a1_model.fit.coefficients.size() + a2_model.fit.coefficients.size();
}

Eigen::VectorXd NuisanceModels::theta() const {
  Eigen::VectorXd t(theta_size());
  t << a1_model.fit.coefficients, a2_model.fit.coefficients;
  return t;
}

std::optional<Eigen::Index> NuisanceModels::omega_index() const {
  switch (omega_source) {
    case OmegaSource::none: return std::nullopt;
    case OmegaSource::a1_model: return a1_model.fit.coefficients.size() - 1;
    case OmegaSource::a2_model: return theta_size() - 1;
  }
  return std::nullopt;
}

double NuisanceModels::omega_se() const {
  const GlmFit* fit = nullptr;
  if (omega_source == OmegaSource::a1_model) fit = &a1_model.fit;
  if (omega_source == OmegaSource::a2_model) fit = &a2_model.fit;
  if (!fit) return 0.0;
  const auto q = fit->coefficients.size();
  Eigen::VectorXd e = Eigen::VectorXd::Zero(q);
  e[q - 1] = 1.0;
  return std::sqrt(fit->information.ldlt().solve(e)[q - 1]);
}

NuisanceModels NuisanceModels::with_theta(const Eigen::VectorXd& theta) const {
  if (theta.size() != theta_size()) throw ConfigError("parameter vector has the wrong length");
  NuisanceModels out = *this;
  const auto q1 = a1_model.fit.coefficients.size();
  out.a1_model.fit.coefficients = theta.head(q1);
  out.a2_model.fit.coefficients = theta.tail(theta.size() - q1);
  return out;
}

Eigen::VectorXd NuisanceModels::a1_baseline_probabilities(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  return predict_probabilities(a1_model.fit, a1_model.design_row(x, 0.0));
}

double NuisanceModels::a1_baseline_mean(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  return predict_mean(a1_model.fit, a1_model.design_row(x, 0.0));
}

double NuisanceModels::a2_baseline_mean(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  return predict_mean(a2_model.fit, a2_model.design_row(x, 0.0));
}

double baseline_mean(const NuisanceModels& nm, int which, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  if (which == 1) return nm.a1_baseline_mean(x);
  if (which == 2) return nm.a2_baseline_mean(x);
  throw ConfigError("exposure index must be 1 or 2");
}

NuisanceModels fit_nuisance(const Dataset& ds, const ModelPlan& plan) {
  const GlmSpec s1 = a1_spec(ds.a1_kind());
  const A2Family fam2 = plan.a2_family.value_or(default_a2_family(ds.a2_kind()));
  const GlmSpec s2 = a2_spec(fam2, ds.a2_kind());

  NuisanceModels nm;
  nm.a1_kind = ds.a1_kind();
  nm.a2_kind = ds.a2_kind();
  nm.a2_family = fam2;
  nm.independence = plan.independence;
  nm.weighted = ds.has_weights();
  if (!plan.independence) {
    if (ds.a1_kind().tag == ExposureTag::binary) {
      nm.omega_source = NuisanceModels::OmegaSource::a1_model;
    } else if (fam2 == A2Family::logit || fam2 == A2Family::log) {
      nm.omega_source = NuisanceModels::OmegaSource::a2_model;
    } else {
      throw UnsupportedError(
          "a categorical a1 without independence needs a binary (logit) or count (log) a2; "
          "the single-parameter odds-ratio tilt has no closed form for a " +
          ds.a2_kind().to_string() + " a2 with the " + to_string(fam2) + " link");
    }
  }

  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < ds.n(); ++i)
    if (ds.has_weights() || ds.d()[i] == 0) rows.push_back(i);
  if (ds.n_controls() == 0) throw ValidationError(0, "no controls available to fit the exposure models");

  const auto cols = informative_columns(ds, resolve_covariates(ds, plan), rows);
  const bool cond = !plan.independence;
  FittedModel m1 = fit_exposure_model(ds, rows, cols, ds.a1(), cond ? &ds.a2() : nullptr, s1);
  FittedModel m2 = fit_exposure_model(ds, rows, cols, ds.a2(), cond ? &ds.a1() : nullptr, s2);
  nm.a1_model = std::move(m1.model);
  nm.a2_model = std::move(m2.model);
  nm.influence.resize(static_cast<Eigen::Index>(ds.n()), nm.theta_size());
  nm.influence << m1.influence, m2.influence;
  return nm;
}

OmegaEstimate estimate_omega(const Dataset& ds, const ModelPlan& plan) {
  ModelPlan p = plan;
  p.independence = false;
  const NuisanceModels nm = fit_nuisance(ds, p);
  OmegaEstimate out;
  out.value = nm.omega();
  out.se = nm.omega_se();
  out.influence = nm.influence.col(*nm.omega_index());
  return out;
}

}  // namespace addgxe
