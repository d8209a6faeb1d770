#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "addgxe/dataset.hpp"
#include "addgxe/parallel.hpp"
#include "addgxe/rng.hpp"

namespace addgxe {

double expit(double x);
double logit(double p);

/// alpha3 such that logit Pr(D | a1, a2) = a0 + a1 g + a2 e + a3 g e has the
/// requested RERI. Throws DomainError when the target is infeasible.
double alpha3_from_reri(double alpha0, double alpha1, double alpha2, double reri);

/// RERI implied by four logistic coefficients (risk ratios, not odds ratios).
double reri_from_alphas(double alpha0, double alpha1, double alpha2, double alpha3);

/// Binary-binary disease model with exposures a1 (G) and a2 (E).
struct Scenario {
  double alpha0 = -4.59511985013458992686;  // logit(0.01)
  double alpha1 = 0.0;
  double alpha2 = 0.0;
  std::optional<double> alpha3;
  std::optional<double> target_reri;
  double p_g = 0.5;
  double p_e = 0.2;
  /// Population log odds ratio between the exposures; 0 is independence.
  double log_or_ge = 0.0;
  std::size_t n_cases = 4000;
  std::size_t n_controls = 4000;

  /// Throws ScenarioError for an invalid specification.
  void validate() const;
  double resolved_alpha3() const;
  /// Target RERI if given, else the RERI implied by alpha3.
  double reri() const;
};

/// Exact cell laws indexed (a1, a2).
struct CellLaws {
  Eigen::Matrix2d population;
  Eigen::Matrix2d risk;
  Eigen::Matrix2d cases;
  Eigen::Matrix2d controls;
  double prevalence = 0.0;
};

CellLaws cell_laws(const Scenario& sc);

/// Exact retrospective sampling: n_cases draws from Pr(a1, a2 | D = 1) and
/// n_controls from Pr(a1, a2 | D = 0). Cases first.
Dataset generate_case_control(const Scenario& sc, Rng& rng);
Dataset generate_case_control(const Scenario& sc, std::uint64_t seed);

enum class SimTest { u, u_ind, prosp, t3, reri_cont };

std::string to_string(SimTest t);
std::vector<SimTest> parse_tests(const std::string& list);

/// Rejection outcome at level 0.05 for one dataset; throws on failure.
bool rejects(const Dataset& ds, SimTest t, double level = 0.05);

struct PowerCell {
  std::size_t cell = 0;
  Scenario scenario;
  SimTest test = SimTest::u;
  std::size_t reps = 0;
  std::size_t failures = 0;
  std::size_t rejections = 0;
  double rate = 0.0;  // rejections / successful reps
  double se = 0.0;
  bool flagged = false;  // more than 1% failures
};

struct PowerTable {
  std::vector<PowerCell> rows;  // cell-major, tests in the requested order

  const PowerCell& at(std::size_t cell, SimTest t) const;
};

PowerTable run_power_experiment(const std::vector<Scenario>& grid, const std::vector<SimTest>& tests,
                                std::size_t reps, std::uint64_t seed, Execution exec = Execution::parallel);

void write_power_csv(std::ostream& out, const PowerTable& t);

/// Grid file grammar:
///
///     # defaults apply to every following cell
///     alpha0 = logit(0.01)
///     p_e = 0.2
///     cell p_g=0.5 alpha1=log(2) alpha2=log(2) reri=0
///     grid p_g=0.5,0.05 alpha1=log(0.7),log(1.2),log(2) alpha2=log(0.7),log(1.2),log(2) reri=0
///
/// A grid line expands to the cartesian product with the first key outermost.
/// Values are numbers, log(x) or logit(x).
std::vector<Scenario> parse_grid(std::istream& in);
std::vector<Scenario> load_grid(const std::string& path);

/// The nine (alpha1, alpha2) cells of the size table at one genotype frequency.
std::vector<Scenario> size_table_grid(double p_g, double reri = 0.0);

/// Additive-null scenario with a binary a1, a continuous a2 ~ N(0,1) truncated
/// to [-e_bound, e_bound] and a binary covariate x:
///   risk = r(a1, 0, x) + r(0, a2, x) - r(0, 0, x),
///   r = expit(gamma0 + gamma_g a1 + gamma_e a2 + gamma_x x).
struct FailureScenario {
  double gamma0 = -6.90675477864855383;  // logit(0.001)
  double gamma_g = 0.69314718055994531;  // log 2
  double gamma_e = 2.0;
  double gamma_x = 0.5;
  double p_g = 0.3;
  double p_x = 0.5;
  double e_bound = 3.0;
  std::size_t n_cases = 4000;
  std::size_t n_controls = 4000;
  /// Replace a2 by I(a2 > 0) in the generated data.
  bool dichotomize = false;

  double risk(int g, double e, int x) const;
  /// Throws ScenarioError unless every attainable risk lies in (0, 1).
  void validate() const;
};

/// Prospective draws until both quotas fill. Covariate column "x".
Dataset generate_failure_case_control(const FailureScenario& fs, Rng& rng);

FailureScenario parse_failure_scenario(std::istream& in);
FailureScenario load_failure_scenario(const std::string& path);

struct FailureReport {
  FailureScenario scenario;
  std::size_t reps = 0;
  PowerCell reri;  // product-term logistic model, unit contrast in a2
  PowerCell t3;    // centred-product test with identity link for a2
};

FailureReport run_reri_failure_experiment(const FailureScenario& fs, std::size_t reps, std::uint64_t seed,
                                          Execution exec = Execution::parallel);

/// Synthetic analogue of a carrier-status / count-exposure study: binary a1,
/// Poisson a2 whose mean depends on covariates, covariates age (standardized)
/// and a binary indicator. Exposures are dependent only through covariates.
Dataset generate_count_exposure_study(std::size_t n_cases, std::size_t n_controls, std::uint64_t seed);

}  // namespace addgxe
