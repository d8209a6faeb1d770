#include <cmath>

#include "doctest.h"
#include "helpers.hpp"

#include "addgxe/errors.hpp"
#include "addgxe/reri.hpp"
#include "addgxe/simulation.hpp"
#include "addgxe/variance.hpp"

using namespace addgxe;

TEST_CASE("reri algebra") {
  CHECK(reri_from_log_odds(0, 0, 0) == 0.0);
  CHECK(reri_from_log_odds(std::log(2.0), std::log(3.0), 0.0) == doctest::Approx(2.0));
  CHECK(reri_from_log_odds(std::log(2.0), std::log(2.0), std::log(0.75)) == doctest::Approx(0.0));
  const double b1 = 0.3, b2 = -0.4, b3 = 0.7;
  const Eigen::Vector3d grad = reri_gradient(b1, b2, b3);
  const Eigen::VectorXd num = numeric_jacobian(
      [](const Eigen::VectorXd& b) { return reri_from_log_odds(b[0], b[1], b[2]); }, Eigen::Vector3d(b1, b2, b3));
  CHECK((grad - num).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("saturated table gives the empirical odds ratios") {
  // Odds ratios 2, 3 and 8 relative to (0, 0).
  const Dataset ds = testing::from_counts({{{0, 0, 0, 100}},
                                           {{1, 0, 0, 10}},
                                           {{0, 1, 0, 100}},
                                           {{1, 1, 0, 20}},
                                           {{0, 0, 1, 100}},
                                           {{1, 0, 1, 30}},
                                           {{0, 1, 1, 100}},
                                           {{1, 1, 1, 80}}});
  const ReriResult r = reri_test(ds);
  CHECK(r.reri == doctest::Approx(8.0 - 2.0 - 3.0 + 1.0).epsilon(1e-8));
  CHECK(r.coefficients[3] == doctest::Approx(std::log(8.0 / 6.0)).epsilon(1e-8));
  // Wald variance of a log odds ratio from cell counts.
  CHECK(r.covariance(1, 1) == doctest::Approx(1.0 / 100 + 1.0 / 10 + 1.0 / 100 + 1.0 / 20).epsilon(1e-6));
  CHECK(r.n == 540);
  CHECK(r.n_cases == 140);
}

TEST_CASE("a planted interaction is recovered") {
  Scenario sc;
  sc.alpha1 = std::log(2.0);
  sc.alpha2 = std::log(2.0);
  sc.target_reri = 0.5;
  const ReriResult r = reri_test(generate_case_control(sc, 5));
  CHECK(std::abs(r.reri - 0.5) < 3.0 * r.se);
  CHECK(r.se > 0.0);
}

TEST_CASE("non-binary exposures need an explicit opt-in") {
  FailureScenario fs;
  fs.n_cases = 300;
  fs.n_controls = 300;
  Rng rng(4);
  const Dataset ds = generate_failure_case_control(fs, rng);
  CHECK_THROWS_AS(reri_test(ds), UnsupportedError);
  ReriOptions opt;
  opt.allow_non_binary = true;
  const ReriResult r = reri_test(ds, opt);
  CHECK(r.coefficients.size() == 5);
  opt.covariates = std::vector<std::string>{};
  CHECK(reri_test(ds, opt).coefficients.size() == 4);
}

TEST_CASE("delta-method and bootstrap standard errors agree") {
  Scenario sc;
  sc.alpha1 = std::log(1.5);
  sc.alpha2 = std::log(2.0);
  sc.target_reri = 0.3;
  sc.n_cases = 2000;
  sc.n_controls = 2000;
  const Dataset ds = generate_case_control(sc, 8);
  const ReriResult r = reri_test(ds);
  BootstrapOptions opt;
  opt.replicates = 300;
  opt.seed = 3;
  const auto b = bootstrap(ds, [](const Dataset& d) { return reri_test(d).reri; }, opt);
  CHECK(std::abs(std::sqrt(b.variance) / r.se - 1.0) < 0.15);
}
