#include "addgxe/interaction.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "addgxe/errors.hpp"

namespace addgxe {

namespace {

constexpr double kPoissonTailMass = 1e-12;

/// Baseline probabilities of A2 at A1 = 0 on a finite (possibly truncated) support.
Eigen::VectorXd a2_support_probabilities(const NuisanceModels& nm, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  const double mean = nm.a2_baseline_mean(x);
  if (nm.a2_kind.tag == ExposureTag::binary && nm.a2_family == A2Family::logit) {
    Eigen::VectorXd p(2);
    p << 1.0 - mean, mean;
    return p;
  }
  if (nm.a2_kind.tag == ExposureTag::count && nm.a2_family == A2Family::log) {
    // Poisson pmf up to the 1 - 1e-12 quantile.
    std::vector<double> pmf;
    double term = std::exp(-mean);
    double cum = 0.0;
    for (int k = 0;; ++k) {
      if (k > 0) term *= mean / k;
      pmf.push_back(term);
      cum += term;
      if (cum >= 1.0 - kPoissonTailMass && static_cast<double>(k) >= mean) break;
      if (k > 100000) throw DomainError("Poisson baseline mean too large to enumerate");
    }
    return Eigen::Map<Eigen::VectorXd>(pmf.data(), static_cast<Eigen::Index>(pmf.size()));
  }
  throw UnsupportedError("a discrete contrast needs a binary (logit) or count (log) a2 baseline density; got " +
                         nm.a2_kind.to_string() + " with the " + to_string(nm.a2_family) + " link");
}

double full_w_bracket(const DiscreteContrast& g, int a1, int a2, std::span<const double> x,
                      const Eigen::VectorXd& f1, const Eigen::VectorXd& f2) {
  double t2 = 0.0, t3 = 0.0, t4 = 0.0;
  for (Eigen::Index b = 0; b < f2.size(); ++b) t2 += g.g(a1, static_cast<int>(b), x) * f2[b];
  for (Eigen::Index a = 0; a < f1.size(); ++a) t3 += g.g(static_cast<int>(a), a2, x) * f1[a];
  for (Eigen::Index a = 0; a < f1.size(); ++a)
    for (Eigen::Index b = 0; b < f2.size(); ++b) t4 += g.g(static_cast<int>(a), static_cast<int>(b), x) * f1[a] * f2[b];
  return g.g(a1, a2, x) - t2 - t3 + t4;
}

/// Contribution of one case row. Controls contribute 0 and are never passed here.
struct CaseEvaluator {
  const Dataset& ds;
  const NuisanceModels& nm;
  const GFunction& g;
  double omega;

  double operator()(std::size_t i) const {
    const Eigen::RowVectorXd x = ds.x().row(static_cast<Eigen::Index>(i));
    const double a1 = ds.a1()[i];
    const double a2 = ds.a2()[i];
    const double tilt = omega == 0.0 ? 1.0 : std::exp(-omega * a1 * a2);
    return tilt * std::visit([&](const auto& form) { return bracket(form, x, a1, a2); }, g);
  }

  double bracket(const CenteredProduct&, const Eigen::RowVectorXd& x, double a1, double a2) const {
    return (a1 - nm.a1_baseline_mean(x)) * (a2 - nm.a2_baseline_mean(x));
  }

  double bracket(const PolytomousCenteredProduct&, const Eigen::RowVectorXd& x, double a1, double a2) const {
    const Eigen::VectorXd p = nm.a1_baseline_probabilities(x);
    const int level = static_cast<int>(a1);
    double s = 0.0;
    for (Eigen::Index k = 1; k < p.size(); ++k) s += (level == k ? 1.0 : 0.0) - p[k];
    return s * (a2 - nm.a2_baseline_mean(x));
  }

  double bracket(const DiscreteContrast& c, const Eigen::RowVectorXd& x, double a1, double a2) const {
    const Eigen::VectorXd f1 = nm.a1_baseline_probabilities(x);
    const Eigen::VectorXd f2 = a2_support_probabilities(nm, x);
    return full_w_bracket(c, static_cast<int>(a1), static_cast<int>(a2), std::span<const double>(x.data(), x.size()),
                          f1, f2);
  }
};

void check_contrast(const Dataset& ds, const GFunction& g) {
  if (std::holds_alternative<DiscreteContrast>(g)) {
    if (!ds.a1_kind().is_integer() || !ds.a2_kind().is_integer())
      throw UnsupportedError("a discrete contrast requires discrete exposures; continuous baselines support only "
                             "centred-product contrasts");
    if (!std::get<DiscreteContrast>(g).g) throw ConfigError("discrete contrast has no function");
  }
}

}  // namespace

std::string to_string(Method m) {
  switch (m) {
    case Method::binary: return "binary";
    case Method::binary_independent: return "binary-independent";
    case Method::covariate_adjusted: return "covariate-adjusted";
    case Method::continuous: return "continuous";
    case Method::count: return "count";
    case Method::polytomous: return "polytomous";
    case Method::unified: return "unified";
  }
  return "?";
}

DiscreteContrast tabulated_contrast(Eigen::MatrixXd table) {
  if (table.rows() == 0 || table.cols() == 0) throw ConfigError("contrast table is empty");
  return DiscreteContrast{[t = std::move(table)](int a1, int a2, std::span<const double>) {
    if (a1 < 0 || a1 >= t.rows() || a2 < 0) throw DomainError("exposure level outside the contrast table");
    return t(a1, std::min<Eigen::Index>(a2, t.cols() - 1));
  }};
}

double UVector::mean() const {
  if (u.empty()) return 0.0;
  return std::accumulate(u.begin(), u.end(), 0.0) / static_cast<double>(u.size());
}

Method classify(const Dataset& ds, const NuisanceModels& nm, const GFunction& g) {
  if (std::holds_alternative<DiscreteContrast>(g)) return Method::unified;
  if (std::holds_alternative<PolytomousCenteredProduct>(g) || ds.a1_kind().tag == ExposureTag::categorical)
    return Method::polytomous;
  if (ds.a2_kind().tag == ExposureTag::continuous) return Method::continuous;
  if (ds.a2_kind().tag == ExposureTag::count) return Method::count;
  if (!nm.a1_model.covariate_columns.empty()) return Method::covariate_adjusted;
  return nm.independence ? Method::binary_independent : Method::binary;
}

UVector compute_u(const Dataset& ds, const NuisanceModels& nm, const GFunction& g) {
  check_contrast(ds, g);
  UVector out;
  out.method = classify(ds, nm, g);
  out.g = g;
  out.theta = nm.theta();
  out.omega = nm.omega();
  out.u.assign(ds.n(), 0.0);
  const CaseEvaluator eval{ds, nm, g, out.omega};
  for (std::size_t i = 0; i < ds.n(); ++i) {
    if (ds.d()[i] == 0) continue;
    const double v = eval(i);
    if (!std::isfinite(v)) throw DomainError("non-finite contribution at row " + std::to_string(i + 1));
    out.u[i] = v;
  }
  return out;
}

double mean_w(const Dataset& ds, const NuisanceModels& nm, const GFunction& g) {
  check_contrast(ds, g);
  const CaseEvaluator eval{ds, nm, g, nm.omega()};
  double s = 0.0;
  for (std::size_t i = 0; i < ds.n(); ++i)
    if (ds.d()[i] == 1) s += eval(i);
  return s / static_cast<double>(ds.n());
}

double two_sided_p(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

TestResult standardized_test(const UVector& u, const VarianceDecomposition& v, std::size_t n_cases) {
  if (!(v.total > 0.0) || !std::isfinite(v.total))
    throw DegenerateVarianceError("variance of the mean contribution is not positive");
  TestResult r;
  r.method = to_string(u.method);
  r.mean_u = u.mean();
  r.statistic = r.mean_u / std::sqrt(v.total);
  r.p_value = std::clamp(two_sided_p(r.statistic), 0.0, 1.0);
  r.variance = v;
  r.n = u.u.size();
  r.n_cases = n_cases;
  return r;
}

double scaled_beta3(const UVector& u, const NuisanceModels& nm, const Dataset& ds) {
  if (ds.a1_kind().tag != ExposureTag::binary || ds.a2_kind().tag != ExposureTag::binary ||
      !nm.a1_model.covariate_columns.empty())
    throw UnsupportedError("scaled interaction estimate is defined for binary exposures without covariates");
  const Eigen::RowVectorXd x0 = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(ds.p()));
  const double p1 = nm.a1_baseline_mean(x0);
  const double p2 = nm.a2_baseline_mean(x0);
  const double denom = p1 * (1.0 - p1) * p2 * (1.0 - p2) * static_cast<double>(ds.n_cases());
  if (!(denom > 0.0)) throw DomainError("baseline exposure frequency at 0 or 1; scaled estimate undefined");
  return std::accumulate(u.u.begin(), u.u.end(), 0.0) / denom;
}

double noncentrality_kappa(double p1, double p2, double lambda, double sigma2) {
  if (!(p1 > 0.0 && p1 < 1.0) || !(p2 > 0.0 && p2 < 1.0))
    throw DomainError("baseline frequencies must lie strictly between 0 and 1");
  if (!(lambda > 0.0)) throw DomainError("sampling-fraction ratio must be positive");
  if (!(sigma2 > 0.0)) throw DomainError("variance must be positive");
  return p1 * (1.0 - p1) * p2 * (1.0 - p2) * lambda / sigma2;
}

Eigen::MatrixXd DiscretePopulation::joint(std::size_t x) const {
  Eigen::MatrixXd j(a1_levels, a2_levels);
  for (int a = 0; a < a1_levels; ++a)
    for (int b = 0; b < a2_levels; ++b) j(a, b) = f1[x][a] * f2[x][b] * odds_ratio[x](a, b);
  return j / j.sum();
}

double DiscretePopulation::disease_probability(std::size_t x) const {
  return (joint(x).array() * risk[x].array()).sum();
}

std::vector<double> brute_force_expectation(const DiscretePopulation& pop, const GFunction& g) {
  const std::size_t nx = pop.x_levels();
  if (nx == 0 || pop.f1.size() != nx || pop.f2.size() != nx || pop.odds_ratio.size() != nx)
    throw ConfigError("population tables are inconsistent");
  if (pop.a1_levels < 1 || pop.a2_levels < 1) throw DomainError("population needs finite supports");
  std::vector<double> out(nx);
  for (std::size_t x = 0; x < nx; ++x) {
    const Eigen::VectorXd& f1 = pop.f1[x];
    const Eigen::VectorXd& f2 = pop.f2[x];
    const double xv = static_cast<double>(x);
    const std::span<const double> xrow(&xv, 1);

    // Contrast on the support, written out from its definition.
    Eigen::MatrixXd gt(pop.a1_levels, pop.a2_levels);
    const double m1 = [&] {
      double s = 0.0;
      for (int a = 0; a < pop.a1_levels; ++a) s += a * f1[a];
      return s;
    }();
    const double m2 = [&] {
      double s = 0.0;
      for (int b = 0; b < pop.a2_levels; ++b) s += b * f2[b];
      return s;
    }();
    for (int a = 0; a < pop.a1_levels; ++a)
      for (int b = 0; b < pop.a2_levels; ++b) {
        if (std::holds_alternative<CenteredProduct>(g)) {
          gt(a, b) = (a - m1) * (b - m2);
        } else if (std::holds_alternative<PolytomousCenteredProduct>(g)) {
          double s = 0.0;
          for (int k = 1; k < pop.a1_levels; ++k) s += (a == k ? 1.0 : 0.0) - f1[k];
          gt(a, b) = s * (b - m2);
        } else {
          gt(a, b) = std::get<DiscreteContrast>(g).g(a, b, xrow);
        }
      }

    // W(a1, a2) = OR^{-1} {g - E_f2 g(a1, .) - E_f1 g(., a2) + E_f1f2 g}.
    const Eigen::VectorXd row_means = gt * f2;                  // indexed by a1
    const Eigen::RowVectorXd col_means = f1.transpose() * gt;   // indexed by a2
    const double grand = f1.dot(gt * f2);
    const Eigen::MatrixXd joint = pop.joint(x);
    double num = 0.0, den = 0.0;
    for (int a = 0; a < pop.a1_levels; ++a)
      for (int b = 0; b < pop.a2_levels; ++b) {
        const double w = (gt(a, b) - row_means[a] - col_means[b] + grand) / pop.odds_ratio[x](a, b);
        const double mass = pop.risk[x](a, b) * joint(a, b);
        num += w * mass;
        den += mass;
      }
    if (!(den > 0.0)) throw DomainError("population has zero disease probability at a covariate level");
    out[x] = num / den;
  }
  return out;
}

}  // namespace addgxe
