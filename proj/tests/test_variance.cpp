#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "helpers.hpp"

#include "addgxe/analysis.hpp"
#include "addgxe/errors.hpp"
#include "addgxe/simulation.hpp"
#include "addgxe/variance.hpp"

using namespace addgxe;

namespace {

NuisanceModels fit(const Dataset& ds, bool independence) {
  ModelPlan p;
  p.independence = independence;
  return fit_nuisance(ds, p);
}

Dataset null_study(std::uint64_t seed, std::size_t cell = 8, double p_g = 0.5) {
  Scenario sc = size_table_grid(p_g)[cell];
  return generate_case_control(sc, seed);
}

double sample_var(const std::vector<double>& v) {
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

}  // namespace

TEST_CASE("numeric jacobian") {
  const Eigen::Vector3d theta(0.3, -1.2, 2.0);
  const Eigen::VectorXd lin = numeric_jacobian([](const Eigen::VectorXd& t) { return 2 * t[0] - t[1] + 0.5 * t[2]; }, theta);
  CHECK((lin - Eigen::Vector3d(2, -1, 0.5)).cwiseAbs().maxCoeff() < 1e-8);
  const Eigen::VectorXd quad = numeric_jacobian([](const Eigen::VectorXd& t) { return t.squaredNorm(); }, theta);
  CHECK(quad[2] == doctest::Approx(4.0).epsilon(1e-6));
  CHECK_THROWS_AS(numeric_jacobian([](const Eigen::VectorXd& t) { return t[0] > 0.3 ? NAN : 0.0; }, theta),
                  DomainError);
}

TEST_CASE("sandwich with a zero jacobian is the plain variance of the mean") {
  const Dataset ds = null_study(3);
  const NuisanceModels nm = fit(ds, false);
  const UVector u = compute_u(ds, nm, CenteredProduct{});
  const auto v = sandwich_variance(u, nm, Eigen::VectorXd::Zero(nm.theta_size()));
  const double n = static_cast<double>(ds.n());
  const double m = u.mean();
  double ss = 0.0;
  for (double x : u.u) ss += (x - m) * (x - m);
  CHECK(v.total == doctest::Approx(ss / n / n).epsilon(1e-12));
  CHECK(v.v1 == doctest::Approx(v.total).epsilon(1e-12));
  CHECK(v.v2 == doctest::Approx(0.0));
  CHECK(v.v3 == doctest::Approx(0.0));
}

TEST_CASE("closed form: independence zeroes v3 only") {
  const Dataset ds = null_study(5);
  const auto off = closed_form_binary_variance(ds, false);
  const auto on = closed_form_binary_variance(ds, true);
  CHECK(off.v1 == on.v1);
  CHECK(off.v2 == on.v2);
  CHECK(on.v3 == 0.0);
  CHECK(off.v3 > 0.0);
  CHECK(off.total == doctest::Approx(off.v1 + off.v2 + off.v3).epsilon(1e-14));
  CHECK(on.method == VarianceMethod::closed_form_binary);
}

TEST_CASE("closed form agrees with the sandwich under independence") {
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    const Dataset ds = null_study(seed);
    const NuisanceModels nm = fit(ds, true);
    const UVector u = compute_u(ds, nm, CenteredProduct{});
    const auto s = sandwich_variance(u, nm, w_jacobian(ds, nm, CenteredProduct{}));
    const auto c = closed_form_binary_variance(ds, true);
    CHECK(std::abs(s.total - c.total) / c.total < 1e-2);
    CHECK(s.v3 == 0.0);
  }
}

TEST_CASE("analytic and numeric jacobians agree") {
  for (bool ind : {false, true}) {
    const Dataset ds = null_study(21);
    const NuisanceModels nm = fit(ds, ind);
    const Eigen::VectorXd a = analytic_binary_jacobian(ds, nm);
    const Eigen::VectorXd b = w_jacobian(ds, nm, CenteredProduct{});
    REQUIRE(a.size() == b.size());
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-4);
  }
}

TEST_CASE("sandwich: estimating omega adds a nonnegative odds-ratio term") {
  const Dataset ds = null_study(31);
  const NuisanceModels nm = fit(ds, false);
  const NuisanceModels sub = fit(ds, true);
  const UVector u = compute_u(ds, nm, CenteredProduct{});
  const auto v = sandwich_variance(u, nm, w_jacobian(ds, nm, CenteredProduct{}), &sub.influence);
  CHECK(v.v3 > 0.0);
  CHECK(v.v1 > 0.0);
  CHECK(v.total == doctest::Approx(v.v1 + v.v2 + v.v3).epsilon(1e-12));
}

TEST_CASE("variance is invariant to row order") {
  const Dataset ds = null_study(41);
  std::vector<std::size_t> perm(ds.n());
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(9);
  for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[rng.index(i)]);
  const Dataset shuffled = ds.subset(perm);
  for (bool ind : {false, true}) {
    TestOptions opt;
    opt.plan.independence = ind;
    opt.variance = VarianceChoice::sandwich;
    const TestResult a = run_test(ds, opt);
    const TestResult b = run_test(shuffled, opt);
    CHECK(a.variance.total == doctest::Approx(b.variance.total).epsilon(1e-9));
    CHECK(a.statistic == doctest::Approx(b.statistic).epsilon(1e-9));
  }
}

TEST_CASE("automatic routing") {
  const Dataset ds = null_study(51);
  TestOptions opt;
  opt.plan.independence = true;
  CHECK(analyze(ds, opt).result.variance.method == VarianceMethod::closed_form_binary);
  opt.plan.independence = false;
  CHECK(analyze(ds, opt).result.variance.method == VarianceMethod::sandwich);
  opt.variance = VarianceChoice::closed_form;
  CHECK(analyze(ds, opt).result.variance.method == VarianceMethod::closed_form_binary);
  CHECK(parse_variance_choice("closed-form") == VarianceChoice::closed_form);
  CHECK_THROWS(parse_variance_choice("exact"));
}

TEST_CASE("type 7 quantiles") {
  const std::vector<double> v{1, 2, 3, 4};
  CHECK(quantile_sorted(v, 0.25) == doctest::Approx(1.75));
  CHECK(quantile_sorted(v, 0.0) == 1.0);
  CHECK(quantile_sorted(v, 1.0) == 4.0);
  CHECK(quantile_sorted(v, 0.5) == doctest::Approx(2.5));
}

TEST_CASE("bootstrap summary conventions") {
  std::vector<double> reps;
  for (int k = 0; k < 100; ++k) reps.push_back(10.0 + k - 49.5);
  const auto s = summarize_bootstrap(reps, 10.0);
  CHECK(s.p_value == doctest::Approx(0.8));
  CHECK(s.variance == doctest::Approx(sample_var(reps)));
  CHECK(s.replicates == 100);
  CHECK(s.ci_lower == doctest::Approx(10.0 - 49.5 + 0.025 * 99));

  const auto extreme = summarize_bootstrap(reps, 1000.0);
  CHECK(extreme.p_value == doctest::Approx(0.01));

  reps[0] = NAN;
  reps[1] = NAN;
  CHECK(summarize_bootstrap(reps, 10.0).dropped == 2);
  for (int k = 2; k < 5; ++k) reps[k] = NAN;
  CHECK(summarize_bootstrap(reps, 10.0).dropped == 5);
  reps[5] = NAN;
  CHECK_THROWS_AS(summarize_bootstrap(reps, 10.0), DegenerateVarianceError);
}

TEST_CASE("bootstrap replicates are reproducible and identical across execution modes") {
  const Dataset ds = null_study(61);
  ModelPlan plan;
  plan.independence = true;
  const Pipeline pipe = [plan](const Dataset& d) { return mean_contribution(d, plan, CenteredProduct{}); };
  BootstrapOptions opt;
  opt.replicates = 200;
  opt.seed = 77;
  opt.execution = Execution::serial;
  const auto a = bootstrap_replicates(ds, pipe, opt);
  const auto b = bootstrap_replicates(ds, pipe, opt);
  opt.execution = Execution::parallel;
  const auto c = bootstrap_replicates(ds, pipe, opt);
  REQUIRE(a.size() == 200);
  for (std::size_t r = 0; r < a.size(); ++r) {
    CHECK(a[r] == b[r]);
    CHECK(a[r] == c[r]);
  }
  opt.seed = 78;
  CHECK(bootstrap_replicates(ds, pipe, opt)[0] != a[0]);
}

TEST_CASE("constant pipeline gives a degenerate interval") {
  const Dataset ds = null_study(62);
  BootstrapOptions opt;
  opt.replicates = 100;
  const auto s = bootstrap(ds, [](const Dataset&) { return 0.25; }, opt);
  CHECK(s.variance == 0.0);
  CHECK(s.ci_lower == 0.25);
  CHECK(s.ci_upper == 0.25);
}

TEST_CASE("stratified resampling keeps the case count; pooled resampling does not") {
  const Dataset ds = null_study(63);
  const auto cases = [](const Dataset& d) { return static_cast<double>(d.n_cases()); };
  BootstrapOptions opt;
  opt.replicates = 100;
  for (double c : bootstrap_replicates(ds, cases, opt)) CHECK(c == static_cast<double>(ds.n_cases()));
  opt.stratified = false;
  const auto pooled = bootstrap_replicates(ds, cases, opt);
  CHECK(std::any_of(pooled.begin(), pooled.end(), [&](double c) { return c != static_cast<double>(ds.n_cases()); }));
}

TEST_CASE("frequent pipeline failures abort the bootstrap") {
  const Dataset ds = null_study(64);
  const double first = ds.a1()[0];
  const Pipeline flaky = [first](const Dataset& d) {
    if (d.a1()[0] != first) throw DomainError("flaky");
    return 0.0;
  };
  BootstrapOptions opt;
  opt.replicates = 100;
  CHECK_THROWS_AS(bootstrap(ds, flaky, opt), DegenerateVarianceError);
}

TEST_CASE("bootstrap and closed-form standard errors agree at n = 8000") {
  const Dataset ds = null_study(65);
  ModelPlan plan;
  plan.independence = true;
  BootstrapOptions opt;
  opt.seed = 12;
  const auto b = bootstrap(ds, [plan](const Dataset& d) { return mean_contribution(d, plan, CenteredProduct{}); }, opt);
  const auto c = closed_form_binary_variance(ds, true);
  CHECK(std::abs(std::sqrt(b.variance / c.total) - 1.0) < 0.15);
}
