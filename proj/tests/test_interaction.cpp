#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "population.hpp"

#include "addgxe/errors.hpp"
#include "addgxe/interaction.hpp"
#include "addgxe/simulation.hpp"

using namespace addgxe;

namespace {

NuisanceModels fit(const Dataset& ds, bool independence = false) {
  ModelPlan p;
  p.independence = independence;
  return fit_nuisance(ds, p);
}

}  // namespace

TEST_CASE("controls contribute zero and a tilted case matches direct substitution") {
  // Controls give p1(0) = p2(0) = 0.5 and omega = log 2.
  const Dataset ds = testing::from_counts(
      {{{0, 0, 0, 2}}, {{0, 1, 0, 2}}, {{0, 0, 1, 2}}, {{0, 1, 1, 4}}, {{1, 1, 1, 1}}, {{1, 0, 1, 1}}});
  const NuisanceModels nm = fit(ds);
  REQUIRE(nm.omega() == doctest::Approx(std::log(2.0)).epsilon(1e-10));
  const UVector u = compute_u(ds, nm, CenteredProduct{});
  for (std::size_t i = 0; i < 10; ++i) CHECK(u.u[i] == 0.0);
  CHECK(u.u[10] == doctest::Approx(0.125).epsilon(1e-10));
  CHECK(u.u[11] == doctest::Approx(-0.25).epsilon(1e-10));
  CHECK(u.method == Method::binary);
}

TEST_CASE("binary contributions equal the per-row hand formula") {
  const Dataset ds = generate_case_control(size_table_grid(0.5, 0.3)[7], 17);
  const NuisanceModels nm = fit(ds);
  const double w = nm.omega();
  const double p1 = 1.0 / (1.0 + std::exp(-nm.a1_model.fit.coefficients[0]));
  const double p2 = 1.0 / (1.0 + std::exp(-nm.a2_model.fit.coefficients[0]));
  const UVector u = compute_u(ds, nm, CenteredProduct{});
  for (std::size_t i = 0; i < ds.n(); ++i) {
    const double a1 = ds.a1()[i], a2 = ds.a2()[i];
    const double hand = std::exp(-a1 * a2 * w) * (a1 - p1) * (a2 - p2) * ds.d()[i];
    REQUIRE(std::abs(u.u[i] - hand) < 1e-14);
  }
}

TEST_CASE("with omega estimated as zero both statistics coincide") {
  // Control table with an exact odds ratio of one.
  const Dataset ds = testing::from_counts(
      {{{0, 0, 0, 30}}, {{0, 1, 0, 10}}, {{0, 0, 1, 15}}, {{0, 1, 1, 5}}, {{1, 1, 1, 6}}, {{1, 0, 0, 8}}, {{1, 1, 0, 3}}});
  const UVector a = compute_u(ds, fit(ds), CenteredProduct{});
  const UVector b = compute_u(ds, fit(ds, true), CenteredProduct{});
  REQUIRE(std::abs(a.omega) < 1e-12);
  for (std::size_t i = 0; i < ds.n(); ++i) CHECK(std::abs(a.u[i] - b.u[i]) < 1e-12);
  CHECK(b.method == Method::binary_independent);
}

TEST_CASE("polytomous form with two levels equals the binary form") {
  const Dataset ds = generate_case_control(size_table_grid(0.5, 0.1)[2], 4);
  const NuisanceModels nm = fit(ds);
  const UVector a = compute_u(ds, nm, CenteredProduct{});
  const UVector b = compute_u(ds, nm, PolytomousCenteredProduct{});
  for (std::size_t i = 0; i < ds.n(); ++i) CHECK(a.u[i] == b.u[i]);
}

TEST_CASE("the full W(g) of the product contrast reduces to the centred product") {
  const Dataset ds = generate_case_control(size_table_grid(0.5, 0.5)[8], 9);
  for (bool ind : {false, true}) {
    const NuisanceModels nm = fit(ds, ind);
    const UVector a = compute_u(ds, nm, CenteredProduct{});
    const UVector b = compute_u(ds, nm, tabulated_contrast((Eigen::MatrixXd(2, 2) << 0, 0, 0, 1).finished()));
    CHECK(b.method == Method::unified);
    for (std::size_t i = 0; i < ds.n(); ++i) REQUIRE(std::abs(a.u[i] - b.u[i]) < 1e-12);
  }
}

TEST_CASE("an all-zero covariate leaves every statistic unchanged") {
  const Dataset ds = generate_case_control(size_table_grid(0.5, 0.3)[5], 21);
  const Dataset padded({ds.d(), ds.a1(), ds.a2(), Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(ds.n()), 1),
                        std::nullopt},
                       ds.a1_kind(), ds.a2_kind());
  for (bool ind : {false, true}) {
    const UVector a = compute_u(ds, fit(ds, ind), CenteredProduct{});
    const UVector b = compute_u(padded, fit(padded, ind), CenteredProduct{});
    for (std::size_t i = 0; i < ds.n(); ++i) REQUIRE(std::abs(a.u[i] - b.u[i]) < 1e-10);
  }
}

TEST_CASE("discrete contrasts need discrete exposures") {
  const Dataset ds = generate_case_control(size_table_grid(0.5)[0], 2);
  std::vector<double> e(ds.a2().begin(), ds.a2().end());
  for (auto& v : e) v += 0.5;
  const Dataset cont = ds.with_exposures(ds.a1(), ds.a1_kind(), e, ExposureKind::continuous());
  ModelPlan p;
  p.independence = true;
  const NuisanceModels nm = fit_nuisance(cont, p);
  CHECK_THROWS_AS(compute_u(cont, nm, tabulated_contrast(Eigen::MatrixXd::Ones(2, 2))), UnsupportedError);
  CHECK_NOTHROW(compute_u(cont, nm, CenteredProduct{}));
}

TEST_CASE("standardized test arithmetic") {
  UVector u;
  u.u = {0.0, 0.0};
  CHECK_THROWS_AS(standardized_test(u, VarianceDecomposition{}, 0), DegenerateVarianceError);
  u.u = {0.2, 0.4};
  VarianceDecomposition v;
  v.total = 0.3 * 0.3;
  const TestResult r = standardized_test(u, v, 2);
  CHECK(r.statistic == doctest::Approx(1.0));
  CHECK(r.p_value == doctest::Approx(0.31731050786291415).epsilon(1e-12));
}

TEST_CASE("non-centrality and scaled interaction") {
  CHECK(noncentrality_kappa(0.5, 0.5, 1.0, 1.0) == doctest::Approx(0.0625));
  CHECK(noncentrality_kappa(0.5, 0.5, 2.0, 1.0) == doctest::Approx(0.125));
  CHECK_THROWS_AS(noncentrality_kappa(0.0, 0.5, 1.0, 1.0), DomainError);
  CHECK_THROWS_AS(noncentrality_kappa(0.5, 0.5, 1.0, 0.0), DomainError);

  // No exposed controls: the baseline frequency is degenerate.
  const Dataset ds = testing::from_counts({{{0, 0, 0, 10}}, {{0, 0, 1, 5}}, {{1, 1, 1, 3}}, {{1, 0, 0, 2}}});
  CHECK_THROWS_AS(compute_u(ds, fit(ds, true), CenteredProduct{}), Error);
}

TEST_CASE("enumeration oracle: worked binary population") {
  DiscretePopulation pop;
  pop.f1 = {(Eigen::VectorXd(2) << 0.5, 0.5).finished()};
  pop.f2 = pop.f1;
  pop.odds_ratio = {Eigen::MatrixXd::Ones(2, 2)};
  pop.risk = {(Eigen::MatrixXd(2, 2) << 0.01, 0.01, 0.01, 0.01).finished()};
  CHECK(brute_force_expectation(pop, CenteredProduct{})[0] == 0.0);
  pop.risk = {(Eigen::MatrixXd(2, 2) << 0.01, 0.01, 0.01, 0.11).finished()};
  CHECK(pop.disease_probability(0) == doctest::Approx(0.035).epsilon(1e-14));
  CHECK(std::abs(brute_force_expectation(pop, CenteredProduct{})[0] - 0.1 * 0.0625 / 0.035) < 1e-12);
}

TEST_CASE("enumeration oracle: dependent exposures with main effects and no interaction") {
  DiscretePopulation pop;
  pop.f1 = {(Eigen::VectorXd(2) << 0.7, 0.3).finished()};
  pop.f2 = {(Eigen::VectorXd(2) << 0.8, 0.2).finished()};
  pop.odds_ratio = {(Eigen::MatrixXd(2, 2) << 1, 1, 1, 2.5).finished()};
  pop.risk = {(Eigen::MatrixXd(2, 2) << 0.02, 0.05, 0.04, 0.07).finished()};
  CHECK(std::abs(brute_force_expectation(pop, CenteredProduct{})[0]) < 1e-15);
}

TEST_CASE("enumeration oracle: random populations") {
  Rng rng(2024);
  for (int rep = 0; rep < 5; ++rep) {
    const int k1 = 2 + static_cast<int>(rng.index(3)), k2 = 2 + static_cast<int>(rng.index(3));
    const auto null = testing::random_population(rng, k1, k2, 3, true);
    const auto g = testing::random_contrast(rng, k1, k2, 3);
    for (double e : brute_force_expectation(null.pop, g)) CHECK(std::abs(e) < 1e-10);
    const auto alt = testing::random_population(rng, k1, k2, 3, false);
    const auto beta3 = alt.beta3;
    const DiscreteContrast gstar{[beta3](int a1, int a2, std::span<const double> x) {
      return beta3[static_cast<std::size_t>(x[0])](a1, a2);
    }};
    for (double e : brute_force_expectation(alt.pop, gstar)) CHECK(e > 0.0);
  }
}
