#include <cmath>
#include <vector>

#include "doctest.h"

#include "addgxe/errors.hpp"
#include "addgxe/glm.hpp"

using namespace addgxe;

namespace {

// Small fixture shared with the frozen statsmodels fits below.
const std::vector<double> kX = {0.5, -1.2, 0.3, 2.0, -0.7, 1.1, 0.0, -1.9, 0.8, 1.5, -0.4, 0.9};
const std::vector<double> kZ = {1, 0, 0, 1, 1, 0, 1, 0, 0, 1, 1, 0};

Eigen::MatrixXd design() {
  Eigen::MatrixXd X(12, 3);
  for (int i = 0; i < 12; ++i) X.row(i) << 1.0, kX[static_cast<std::size_t>(i)], kZ[static_cast<std::size_t>(i)];
  return X;
}

/// Finite-difference Hessian of the log-likelihood from the analytic score.
Eigen::MatrixXd fd_information(const Eigen::MatrixXd& X, const std::vector<double>& y, const std::vector<double>& w,
                               const GlmSpec& spec, const Eigen::VectorXd& coef) {
  const auto q = coef.size();
  Eigen::MatrixXd h(q, q);
  for (Eigen::Index k = 0; k < q; ++k) {
    Eigen::VectorXd up = coef, down = coef;
    const double step = 1e-5;
    up[k] += step;
    down[k] -= step;
    h.col(k) = -(evaluate_glm(X, y, w, spec, up).score - evaluate_glm(X, y, w, spec, down).score) / (2 * step);
  }
  return h;
}

void check_coefficients(const Eigen::VectorXd& got, const std::vector<double>& want, double tol) {
  REQUIRE(got.size() == static_cast<Eigen::Index>(want.size()));
  for (std::size_t k = 0; k < want.size(); ++k) CHECK(got[static_cast<Eigen::Index>(k)] == doctest::Approx(want[k]).epsilon(tol));
}

}  // namespace

TEST_CASE("intercept-only logistic and Poisson fits hit the closed forms") {
  const std::vector<double> yb = {1, 0, 0, 1, 1, 0, 1, 0, 1, 1, 0, 1};
  const std::vector<double> yc = {2, 0, 1, 6, 1, 2, 2, 0, 1, 5, 1, 3};
  const Eigen::MatrixXd one = Eigen::MatrixXd::Ones(12, 1);
  const auto lf = fit_glm(one, yb, {}, {Family::bernoulli_logit, 2});
  CHECK(std::abs(lf.coefficients[0] - std::log(7.0 / 5.0)) < 1e-8);
  const auto pf = fit_glm(one, yc, {}, {Family::poisson_log, 2});
  CHECK(std::abs(pf.coefficients[0] - std::log(24.0 / 12.0)) < 1e-8);
}

TEST_CASE("saturated 2x2 logistic recovers the table log odds") {
  // d by exposure: exposed 30/70, unexposed 10/90
  Eigen::MatrixXd X(200, 2);
  std::vector<double> y(200);
  for (int i = 0; i < 200; ++i) {
    const bool exposed = i < 100;
    X.row(i) << 1.0, exposed ? 1.0 : 0.0;
    y[static_cast<std::size_t>(i)] = exposed ? (i < 30 ? 1 : 0) : (i < 110 ? 1 : 0);
  }
  const auto f = fit_glm(X, y, {}, {Family::bernoulli_logit, 2});
  CHECK(std::abs(f.coefficients[0] - std::log(10.0 / 90.0)) < 1e-8);
  CHECK(std::abs(f.coefficients[1] - (std::log(30.0 / 70.0) - std::log(10.0 / 90.0))) < 1e-8);
}

TEST_CASE("fits match frozen statsmodels estimates") {
  const Eigen::MatrixXd X = design();
  SUBCASE("poisson") {
    const std::vector<double> y = {2, 0, 1, 6, 1, 2, 2, 0, 1, 5, 1, 3};
    const auto f = fit_glm(X, y, {}, {Family::poisson_log, 2});
    check_coefficients(f.coefficients, {-0.14824442105463753, 0.7786887843907251, 0.5175881693397928}, 1e-8);
    CHECK(f.log_likelihood == doctest::Approx(-14.218116068710422).epsilon(1e-10));
  }
  SUBCASE("logistic") {
    const std::vector<double> y = {1, 0, 0, 1, 1, 0, 1, 0, 1, 1, 0, 1};
    const auto f = fit_glm(X, y, {}, {Family::bernoulli_logit, 2});
    check_coefficients(f.coefficients, {-1.731234293817331, 2.1927473310901258, 3.408393980953394}, 1e-8);
    CHECK(f.log_likelihood == doctest::Approx(-4.697802703749707).epsilon(1e-10));
  }
  SUBCASE("weighted logistic") {
    const std::vector<double> y = {1, 0, 0, 1, 1, 0, 1, 0, 1, 1, 0, 1};
    const std::vector<double> w = {1, 2, 1, 0.5, 1, 3, 1, 1, 2, 1, 1, 0.5};
    const auto f = fit_glm(X, y, w, {Family::bernoulli_logit, 2});
    check_coefficients(f.coefficients, {-1.7748251698834163, 1.421337588563687, 3.2361523825704834}, 1e-8);
    CHECK(f.log_likelihood == doctest::Approx(-6.764949890453025).epsilon(1e-10));
  }
  SUBCASE("multinomial") {
    const std::vector<double> y = {0, 1, 2, 2, 1, 0, 2, 0, 1, 2, 1, 0};
    const auto f = fit_glm(X, y, {}, {Family::multinomial_logit, 3});
    check_coefficients(f.coefficients,
                       {-0.5270659819358597, -0.5650590863457184, 1.2157995946618958, -1.6435526600649464,
                        1.0203677609399864, 2.165720967924997},
                       1e-7);
    CHECK(f.log_likelihood == doctest::Approx(-10.512210175888066).epsilon(1e-10));
    const Eigen::VectorXd p = predict_probabilities(f, X.row(0));
    CHECK(p.sum() == doctest::Approx(1.0));
  }
}

TEST_CASE("gaussian identity fit is ordinary least squares") {
  const Eigen::MatrixXd X = design();
  std::vector<double> y(12);
  for (std::size_t i = 0; i < 12; ++i) y[i] = 0.3 + 1.7 * kX[i] - 0.4 * kZ[i] + 0.1 * std::sin(static_cast<double>(i));
  const auto f = fit_glm(X, y, {}, {Family::gaussian_identity, 2});
  const Eigen::Map<const Eigen::VectorXd> yv(y.data(), 12);
  const Eigen::VectorXd ols = (X.transpose() * X).ldlt().solve(X.transpose() * yv);
  CHECK((f.coefficients - ols).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("score vanishes at the optimum and the information matches a finite-difference Hessian") {
  const Eigen::MatrixXd X = design();
  const std::vector<double> yb = {1, 0, 0, 1, 1, 0, 1, 0, 1, 1, 0, 1};
  const std::vector<double> yc = {2, 0, 1, 6, 1, 2, 2, 0, 1, 5, 1, 3};
  const std::vector<double> ym = {0, 1, 2, 2, 1, 0, 2, 0, 1, 2, 1, 0};
  const std::vector<double> w = {1, 2, 1, 0.5, 1, 3, 1, 1, 2, 1, 1, 0.5};
  struct Case {
    GlmSpec spec;
    const std::vector<double>* y;
  };
  for (const Case& c : {Case{{Family::bernoulli_logit, 2}, &yb}, Case{{Family::poisson_log, 2}, &yc},
                        Case{{Family::gaussian_identity, 2}, &yc}, Case{{Family::multinomial_logit, 3}, &ym}}) {
    CAPTURE(to_string(c.spec.family));
    const auto f = fit_glm(X, *c.y, w, c.spec);
    const auto ev = evaluate_glm(X, *c.y, w, c.spec, f.coefficients);
    CHECK(ev.score.cwiseAbs().maxCoeff() <= 1e-8);
    CHECK(f.score_norm <= 1e-8);
    CHECK(std::abs(f.scores.colwise().sum().maxCoeff()) <= 1e-8);
    const Eigen::MatrixXd fd = fd_information(X, *c.y, w, c.spec, f.coefficients);
    CHECK((fd - f.information).cwiseAbs().maxCoeff() / f.information.cwiseAbs().maxCoeff() < 1e-4);
  }
}

TEST_CASE("degenerate fits raise typed errors") {
  SUBCASE("rank-deficient design") {
    Eigen::MatrixXd X(6, 3);
    X << 1, 0, 0, 1, 1, 2, 1, 0, 0, 1, 1, 2, 1, 0, 0, 1, 1, 2;
    const std::vector<double> y = {0, 1, 1, 0, 1, 0};
    CHECK_THROWS_AS(fit_glm(X, y, {}, {Family::bernoulli_logit, 2}), SingularMatrixError);
  }
  SUBCASE("constant binary response") {
    const std::vector<double> y(5, 0.0);
    CHECK_THROWS_AS(fit_glm(Eigen::MatrixXd::Ones(5, 1), y, {}, {Family::bernoulli_logit, 2}), DivergenceError);
  }
  SUBCASE("complete separation") {
    Eigen::MatrixXd X(6, 2);
    X << 1, -3, 1, -2, 1, -1, 1, 1, 1, 2, 1, 3;
    const std::vector<double> y = {0, 0, 0, 1, 1, 1};
    CHECK_THROWS_AS(fit_glm(X, y, {}, {Family::bernoulli_logit, 2}), DivergenceError);
  }
  SUBCASE("response outside the family support") {
    const std::vector<double> y = {0, 1, 2};
    CHECK_THROWS_AS(fit_glm(Eigen::MatrixXd::Ones(3, 1), y, {}, {Family::bernoulli_logit, 2}), ValidationError);
  }
}

TEST_CASE("worked intercept-only fixtures") {
  std::vector<double> y(100, 0.0);
  for (int i = 0; i < 20; ++i) y[static_cast<std::size_t>(i)] = 1.0;
  const Eigen::MatrixXd one = Eigen::MatrixXd::Ones(100, 1);
  CHECK(std::abs(fit_glm(one, y, {}, {Family::bernoulli_logit, 2}).coefficients[0] - std::log(0.25)) < 1e-8);
  std::vector<double> c(100);
  for (std::size_t i = 0; i < 100; ++i) c[i] = static_cast<double>(i % 7);  // mean 3 over full cycles
  c.resize(98);
  const Eigen::MatrixXd one98 = Eigen::MatrixXd::Ones(98, 1);
  CHECK(std::abs(fit_glm(one98, c, {}, {Family::poisson_log, 2}).coefficients[0] - std::log(3.0)) < 1e-8);
}
