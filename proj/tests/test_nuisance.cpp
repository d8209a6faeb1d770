#include <cmath>

#include "doctest.h"
#include "helpers.hpp"

#include "addgxe/errors.hpp"
#include "addgxe/nuisance.hpp"
#include "addgxe/simulation.hpp"

using namespace addgxe;

TEST_CASE("omega for binary exposures is the control log odds ratio") {
  // controls: (a1, a2) counts 00:40 10:10 01:20 11:15
  const Dataset ds = testing::from_counts(
      {{{0, 0, 0, 40}}, {{0, 1, 0, 10}}, {{0, 0, 1, 20}}, {{0, 1, 1, 15}}, {{1, 1, 1, 7}}, {{1, 0, 0, 9}}});
  const NuisanceModels nm = fit_nuisance(ds, {});
  CHECK(nm.omega() == doctest::Approx(std::log(15.0 * 40.0 / (10.0 * 20.0))).epsilon(1e-10));
  CHECK(nm.a1_baseline_mean(Eigen::RowVectorXd(0)) == doctest::Approx(10.0 / 50.0).epsilon(1e-10));
  CHECK(nm.a2_baseline_mean(Eigen::RowVectorXd(0)) == doctest::Approx(20.0 / 60.0).epsilon(1e-10));
  CHECK(nm.omega_index() == std::optional<Eigen::Index>(1));
  const double se = std::sqrt(1.0 / 40 + 1.0 / 10 + 1.0 / 20 + 1.0 / 15);
  CHECK(nm.omega_se() == doctest::Approx(se).epsilon(1e-8));

  ModelPlan ind;
  ind.independence = true;
  const NuisanceModels nmi = fit_nuisance(ds, ind);
  CHECK(nmi.omega() == 0.0);
  CHECK(!nmi.omega_index());
  CHECK(nmi.a1_baseline_mean(Eigen::RowVectorXd(0)) == doctest::Approx(25.0 / 85.0).epsilon(1e-10));
}

TEST_CASE("influence contributions vanish for cases and average to zero") {
  const Dataset ds = generate_case_control(size_table_grid(0.5)[4], 3);
  const NuisanceModels nm = fit_nuisance(ds, {});
  for (std::size_t i = 0; i < ds.n(); ++i)
    if (ds.d()[i] == 1) REQUIRE(nm.influence.row(static_cast<Eigen::Index>(i)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(nm.influence.colwise().mean().cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("categorical a1 takes omega from the a2 model") {
  Rng rng(5);
  const std::size_t n = 600;
  std::vector<int> d(n);
  std::vector<double> a1(n), a2(n);
  for (std::size_t i = 0; i < n; ++i) {
    d[i] = i % 3 == 0;
    a1[i] = static_cast<double>(rng.index(3));
    a2[i] = rng.bernoulli(0.2 + 0.1 * a1[i]) ? 1.0 : 0.0;
  }
  const Dataset ds({d, a1, a2, Eigen::MatrixXd(n, 0), std::nullopt}, ExposureKind::categorical(3), ExposureKind::binary());
  const NuisanceModels nm = fit_nuisance(ds, {});
  CHECK(nm.omega_source == NuisanceModels::OmegaSource::a2_model);
  CHECK(nm.omega() == nm.a2_model.fit.coefficients[1]);
  CHECK(estimate_omega(ds, {}).value == nm.omega());

  const Dataset cont({d, a1, std::vector<double>(a2.begin(), a2.end()), Eigen::MatrixXd(n, 0), std::nullopt},
                     ExposureKind::categorical(3), ExposureKind::continuous());
  CHECK_THROWS_AS(fit_nuisance(cont, {}), UnsupportedError);
  ModelPlan ind;
  ind.independence = true;
  CHECK_NOTHROW(fit_nuisance(cont, ind));
}

TEST_CASE("family and kind mismatches are rejected") {
  const Dataset ds = generate_case_control(size_table_grid(0.5)[0], 1);
  ModelPlan p;
  p.a2_family = A2Family::log;
  CHECK_THROWS_AS(fit_nuisance(ds, p), UnsupportedError);
  p.a2_family = A2Family::identity;
  CHECK_NOTHROW(fit_nuisance(ds, p));
  CHECK_THROWS_AS(parse_a2_family("probit"), ConfigError);
  ModelPlan named;
  named.covariates = std::vector<std::string>{"nope"};
  CHECK_THROWS_AS(fit_nuisance(ds, named), SchemaError);
}

TEST_CASE("worked control tables") {
  // 40/10/10/40 control table: odds ratio 16.
  const Dataset ds = testing::from_counts(
      {{{0, 0, 0, 40}}, {{0, 0, 1, 10}}, {{0, 1, 0, 10}}, {{0, 1, 1, 40}}, {{1, 1, 1, 5}}});
  CHECK(std::abs(fit_nuisance(ds, {}).omega() - std::log(16.0)) < 1e-8);
  CHECK(std::abs(estimate_omega(ds, {}).value - 2.772588722239781) < 1e-8);

  // Independent control frequencies 0.5 and 0.2.
  const Dataset ind = testing::from_counts(
      {{{0, 0, 0, 40}}, {{0, 0, 1, 10}}, {{0, 1, 0, 40}}, {{0, 1, 1, 10}}, {{1, 1, 1, 5}}});
  ModelPlan plan;
  plan.independence = true;
  const NuisanceModels nm = fit_nuisance(ind, plan);
  CHECK(nm.a1_baseline_mean(Eigen::RowVectorXd(0)) == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(nm.a2_baseline_mean(Eigen::RowVectorXd(0)) == doctest::Approx(0.2).epsilon(1e-10));
}
