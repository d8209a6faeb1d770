#include "addgxe/glm.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "addgxe/errors.hpp"

namespace addgxe {

namespace {

constexpr int kMaxIterations = 100;
constexpr int kMaxHalvings = 40;
constexpr double kScoreTolerance = 1e-8;
constexpr double kStepTolerance = 1e-10;
constexpr double kPivotThreshold = 1e-12;
constexpr double kSeparationProbability = 1e-10;

double log1pexp(double eta) { return eta > 0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta)); }

double expit(double eta) {
  if (eta >= 0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

double weight_at(std::span<const double> w, Eigen::Index i) {
  return w.empty() ? 1.0 : w[static_cast<std::size_t>(i)];
}

Eigen::Index parameter_count(const GlmSpec& spec, Eigen::Index p) {
  return spec.family == Family::multinomial_logit ? p * (spec.categories - 1) : p;
}

void check_response(std::span<const double> y, const GlmSpec& spec) {
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double v = y[i];
    bool ok = std::isfinite(v);
    switch (spec.family) {
      case Family::bernoulli_logit: ok = ok && (v == 0.0 || v == 1.0); break;
      case Family::poisson_log: ok = ok && v >= 0.0 && v == std::floor(v); break;
      case Family::multinomial_logit:
        ok = ok && v >= 0.0 && v == std::floor(v) && v < spec.categories;
        break;
      case Family::gaussian_identity: break;
    }
    if (!ok)
      throw ValidationError(i + 1, "response value incompatible with the " + to_string(spec.family) + " family");
  }
}

/// Multinomial probabilities for all categories from the K-1 linear predictors.
void softmax_with_reference(const Eigen::Ref<const Eigen::VectorXd>& eta, Eigen::Ref<Eigen::VectorXd> prob) {
  const double m = std::max(0.0, eta.maxCoeff());
  double denom = std::exp(-m);
  for (Eigen::Index k = 0; k < eta.size(); ++k) denom += std::exp(eta[k] - m);
  prob[0] = std::exp(-m) / denom;
  for (Eigen::Index k = 0; k < eta.size(); ++k) prob[k + 1] = std::exp(eta[k] - m) / denom;
}

/// Intercept column index (all ones) if present.
std::optional<Eigen::Index> find_intercept(const Eigen::MatrixXd& X) {
  for (Eigen::Index j = 0; j < X.cols(); ++j)
    if ((X.col(j).array() == 1.0).all()) return j;
  return std::nullopt;
}

Eigen::VectorXd starting_values(const Eigen::MatrixXd& X, std::span<const double> y, std::span<const double> w,
                                const GlmSpec& spec) {
  const Eigen::Index p = X.cols();
  Eigen::VectorXd coef = Eigen::VectorXd::Zero(parameter_count(spec, p));
  const auto icpt = find_intercept(X);
  if (!icpt) return coef;
  const Eigen::Index n = X.rows();
  double sw = 0.0;
  std::vector<double> mass(static_cast<std::size_t>(std::max(2, spec.categories)), 0.0);
  double sy = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double wi = weight_at(w, i);
    const double yi = y[static_cast<std::size_t>(i)];
    sw += wi;
    sy += wi * yi;
    if (spec.family == Family::multinomial_logit) mass[static_cast<std::size_t>(yi)] += wi;
  }
  const double mean = sy / sw;
  switch (spec.family) {
    case Family::bernoulli_logit:
      if (mean <= 0.0 || mean >= 1.0)
        throw DivergenceError("binary response is constant; the logistic MLE does not exist", {});
      coef[*icpt] = std::log(mean / (1.0 - mean));
      break;
    case Family::poisson_log:
      if (mean <= 0.0) throw DivergenceError("count response is identically zero; the Poisson MLE does not exist", {});
      coef[*icpt] = std::log(mean);
      break;
    case Family::gaussian_identity: coef[*icpt] = mean; break;
    case Family::multinomial_logit:
      for (int k = 1; k < spec.categories; ++k) {
        if (mass[static_cast<std::size_t>(k)] <= 0.0 || mass[0] <= 0.0)
          throw DivergenceError("multinomial category " + std::to_string(mass[0] <= 0.0 ? 0 : k) +
                                    " is empty; the MLE does not exist",
                                {});
        coef[(k - 1) * p + *icpt] = std::log(mass[static_cast<std::size_t>(k)] / mass[0]);
      }
      break;
  }
  return coef;
}

struct Factorization {
  Eigen::LDLT<Eigen::MatrixXd> ldlt;
  bool ok = false;
};

Factorization factorize(const Eigen::MatrixXd& info) {
  Factorization f;
  f.ldlt.compute(info);
  if (f.ldlt.info() != Eigen::Success) return f;
  const Eigen::VectorXd d = f.ldlt.vectorD();
  const double dmax = d.cwiseAbs().maxCoeff();
  f.ok = dmax > 0.0 && (d.array() > kPivotThreshold * dmax).all();
  return f;
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

std::string to_string(Family f) {
  switch (f) {
    case Family::bernoulli_logit: return "bernoulli-logit";
    case Family::poisson_log: return "poisson-log";
    case Family::gaussian_identity: return "gaussian-identity";
    case Family::multinomial_logit: return "multinomial-logit";
  }
  return "?";
}

GlmFit GlmFit::with_coefficients(const Eigen::VectorXd& coef) const {
  GlmFit out = *this;
  out.coefficients = coef;
  return out;
}

GlmEvaluation evaluate_glm(const Eigen::MatrixXd& X, std::span<const double> y, std::span<const double> w,
                           const GlmSpec& spec, const Eigen::VectorXd& coef) {
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  GlmEvaluation ev;
  if (spec.family != Family::multinomial_logit) {
    const Eigen::VectorXd eta = X * coef;
    Eigen::VectorXd resid(n), curv(n);
    double ll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double wi = weight_at(w, i);
      const double yi = y[static_cast<std::size_t>(i)];
      const double e = eta[i];
      switch (spec.family) {
        case Family::bernoulli_logit: {
          const double mu = expit(e);
          ll += wi * (yi * e - log1pexp(e));
          resid[i] = wi * (yi - mu);
          curv[i] = wi * mu * (1.0 - mu);
          break;
        }
        case Family::poisson_log: {
          const double mu = std::exp(e);
          ll += wi * (yi * e - mu - std::lgamma(yi + 1.0));
          resid[i] = wi * (yi - mu);
          curv[i] = wi * mu;
          break;
        }
        default: {
          const double r = yi - e;
          ll -= 0.5 * wi * r * r;
          resid[i] = wi * r;
          curv[i] = wi;
          break;
        }
      }
    }
    ev.log_likelihood = ll;
    ev.score = X.transpose() * resid;
    ev.information = X.transpose() * (X.array().colwise() * curv.array()).matrix();
    return ev;
  }

  const int K = spec.categories;
  const Eigen::Index q = p * (K - 1);
  ev.score = Eigen::VectorXd::Zero(q);
  ev.information = Eigen::MatrixXd::Zero(q, q);
  Eigen::Map<const Eigen::MatrixXd> B(coef.data(), p, K - 1);
  const Eigen::MatrixXd eta = X * B;  // n x (K-1)
  Eigen::VectorXd prob(K);
  // Per-block curvature weights c_jk(i) = w (pi_j delta_jk - pi_j pi_k).
  std::vector<Eigen::VectorXd> curv(static_cast<std::size_t>((K - 1) * (K - 1)), Eigen::VectorXd(n));
  Eigen::MatrixXd resid(n, K - 1);
  double ll = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double wi = weight_at(w, i);
    const int yi = static_cast<int>(y[static_cast<std::size_t>(i)]);
    softmax_with_reference(eta.row(i).transpose(), prob);
    ll += wi * std::log(prob[yi]);
    for (int j = 0; j < K - 1; ++j) {
      resid(i, j) = wi * ((yi == j + 1 ? 1.0 : 0.0) - prob[j + 1]);
      for (int k = 0; k < K - 1; ++k)
        curv[static_cast<std::size_t>(j * (K - 1) + k)][i] =
            wi * (prob[j + 1] * (j == k ? 1.0 : 0.0) - prob[j + 1] * prob[k + 1]);
    }
  }
  ev.log_likelihood = ll;
  for (int j = 0; j < K - 1; ++j) {
    ev.score.segment(j * p, p) = X.transpose() * resid.col(j);
    for (int k = 0; k < K - 1; ++k)
      ev.information.block(j * p, k * p, p, p) =
          X.transpose() * (X.array().colwise() * curv[static_cast<std::size_t>(j * (K - 1) + k)].array()).matrix();
  }
  return ev;
}

GlmFit fit_glm(const Eigen::MatrixXd& X, std::span<const double> y, std::span<const double> w, const GlmSpec& spec) {
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  if (spec.family == Family::multinomial_logit && spec.categories < 2)
    throw ConfigError("multinomial family needs at least 2 categories");
  if (static_cast<Eigen::Index>(y.size()) != n || (!w.empty() && static_cast<Eigen::Index>(w.size()) != n))
    throw ConfigError("design, response and weights have different lengths");
  if (p == 0) throw ConfigError("design matrix has no columns");
  const Eigen::Index q = parameter_count(spec, p);
  if (n <= q)
    throw ConfigError("need more observations (" + std::to_string(n) + ") than parameters (" + std::to_string(q) +
                      ")");
  check_response(y, spec);

  Eigen::VectorXd coef = starting_values(X, y, w, spec);
  GlmEvaluation ev = evaluate_glm(X, y, w, spec, coef);
  int iter = 0;
  bool converged = ev.score.cwiseAbs().maxCoeff() <= kScoreTolerance;
  while (!converged) {
    if (iter >= kMaxIterations)
      throw DivergenceError("fit did not converge in " + std::to_string(kMaxIterations) + " iterations",
                            to_std(coef));
    ++iter;
    const Factorization f = factorize(ev.information);
    if (!f.ok) throw SingularMatrixError("information matrix is singular (rank-deficient design)");
    const Eigen::VectorXd step = f.ldlt.solve(ev.score);

    double scale = 1.0;
    Eigen::VectorXd trial = coef + step;
    GlmEvaluation next = evaluate_glm(X, y, w, spec, trial);
    int halvings = 0;
    while (!(next.log_likelihood >= ev.log_likelihood - 1e-12 * std::abs(ev.log_likelihood)) ||
           !std::isfinite(next.log_likelihood)) {
      if (++halvings > kMaxHalvings)
        throw DivergenceError("step-halving failed to increase the likelihood", to_std(coef));
      scale *= 0.5;
      trial = coef + scale * step;
      next = evaluate_glm(X, y, w, spec, trial);
    }
    const double change = (trial - coef).cwiseAbs().maxCoeff();
    coef = std::move(trial);
    ev = std::move(next);
    if (!coef.allFinite() || coef.cwiseAbs().maxCoeff() > 1e8)
      throw DivergenceError("coefficients diverged", to_std(coef));
    converged = ev.score.cwiseAbs().maxCoeff() <= kScoreTolerance ||
                change <= kStepTolerance * (1.0 + coef.cwiseAbs().maxCoeff());
  }

  if (!factorize(ev.information).ok)
    throw SingularMatrixError("information matrix is singular (rank-deficient design)");

  GlmFit fit;
  fit.spec = spec;
  fit.predictors = p;
  fit.coefficients = coef;
  fit.information = ev.information;
  fit.log_likelihood = ev.log_likelihood;
  fit.iterations = iter;
  fit.score_norm = ev.score.cwiseAbs().maxCoeff();

  // Per-observation scores; also catches (quasi-)separation for binary-type families.
  fit.scores.resize(n, q);
  if (spec.family == Family::multinomial_logit) {
    Eigen::Map<const Eigen::MatrixXd> B(coef.data(), p, spec.categories - 1);
    const Eigen::MatrixXd eta = X * B;
    Eigen::VectorXd prob(spec.categories);
    for (Eigen::Index i = 0; i < n; ++i) {
      softmax_with_reference(eta.row(i).transpose(), prob);
      if (prob.minCoeff() < kSeparationProbability)
        throw DivergenceError("fitted probabilities at the boundary (separation)", to_std(coef));
      const double wi = weight_at(w, i);
      const int yi = static_cast<int>(y[static_cast<std::size_t>(i)]);
      for (int j = 0; j < spec.categories - 1; ++j)
        fit.scores.row(i).segment(j * p, p) = wi * ((yi == j + 1 ? 1.0 : 0.0) - prob[j + 1]) * X.row(i);
    }
  } else {
    const Eigen::VectorXd eta = X * coef;
    for (Eigen::Index i = 0; i < n; ++i) {
      double mu = eta[i];
      if (spec.family == Family::bernoulli_logit) {
        mu = expit(eta[i]);
        if (mu < kSeparationProbability || mu > 1.0 - kSeparationProbability)
          throw DivergenceError("fitted probabilities at the boundary (separation)", to_std(coef));
      } else if (spec.family == Family::poisson_log) {
        mu = std::exp(eta[i]);
      }
      fit.scores.row(i) = weight_at(w, i) * (y[static_cast<std::size_t>(i)] - mu) * X.row(i);
    }
  }
  return fit;
}

double predict_mean(const GlmFit& fit, const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  if (row.size() != fit.predictors)
    throw ConfigError("covariate row has " + std::to_string(row.size()) + " entries, model expects " +
                      std::to_string(fit.predictors));
  switch (fit.spec.family) {
    case Family::bernoulli_logit: return expit(row.dot(fit.coefficients));
    case Family::poisson_log: return std::exp(row.dot(fit.coefficients));
    case Family::gaussian_identity: return row.dot(fit.coefficients);
    case Family::multinomial_logit: {
      const Eigen::VectorXd prob = predict_probabilities(fit, row);
      // Mean of the category index.
      double m = 0.0;
      for (Eigen::Index k = 1; k < prob.size(); ++k) m += static_cast<double>(k) * prob[k];
      return m;
    }
  }
  return 0.0;
}

Eigen::VectorXd predict_probabilities(const GlmFit& fit, const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  if (row.size() != fit.predictors)
    throw ConfigError("covariate row has " + std::to_string(row.size()) + " entries, model expects " +
                      std::to_string(fit.predictors));
  if (fit.spec.family == Family::bernoulli_logit) {
    const double mu = expit(row.dot(fit.coefficients));
    Eigen::VectorXd out(2);
    out << 1.0 - mu, mu;
    return out;
  }
  if (fit.spec.family != Family::multinomial_logit)
    throw ConfigError("category probabilities requested from a " + to_string(fit.spec.family) + " fit");
  const Eigen::Index p = fit.predictors;
  const int K = fit.spec.categories;
  Eigen::VectorXd eta(K - 1);
  for (int k = 0; k < K - 1; ++k) eta[k] = row.dot(fit.coefficients.segment(k * p, p));
  Eigen::VectorXd prob(K);
  softmax_with_reference(eta, prob);
  return prob;
}

}  // namespace addgxe
