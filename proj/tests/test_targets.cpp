// Copyright 2026 The MCIS Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "mcis/error.hpp"
#include "mcis/rng.hpp"
#include "mcis/target.hpp"
#include "mcis/test_function.hpp"

using namespace mcis;

namespace {

Target two_mode_mixture(int d) {
  return Target::mixture({{0.5, Eigen::VectorXd::Constant(d, 3.0), Eigen::VectorXd::Constant(d, 0.7)},
                          {0.5, Eigen::VectorXd::Constant(d, 7.0), Eigen::VectorXd::Constant(d, 1.5)}});
}

double normal_log_pdf(double x, double m, double s) {
  return -0.5 * std::log(2.0 * std::numbers::pi * s * s) - 0.5 * (x - m) * (x - m) / (s * s);
}

void check_gradient(const Target& t, const Eigen::VectorXd& x) {
  const Eigen::VectorXd g = t.grad_log_density(x);
  const Eigen::VectorXd fd = finite_difference_gradient(
      [&](const Eigen::Ref<const Eigen::VectorXd>& p) { return t.log_density(p); }, x, 1e-5);
  CHECK((g - fd).norm() <= 1e-5 * std::max(1.0, g.norm()));
}

}  // namespace

TEST_CASE("gaussian log density at the mode") {
  const auto t = Target::isotropic_gaussian(3, 5.0, 0.7);
  const double expected = 3.0 * std::log(1.0 / (0.7 * std::sqrt(2.0 * std::numbers::pi)));
  CHECK(t.log_density(Eigen::Vector3d(5, 5, 5)) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(t.known_log_normalizer().value() == 0.0);
}

TEST_CASE("mixture log density is a log-sum-exp of component densities") {
  const auto t = two_mode_mixture(3);
  const Eigen::Vector3d x(3, 3, 3);
  const double a = std::log(0.5) + 3 * normal_log_pdf(3, 3, 0.7);
  const double b = std::log(0.5) + 3 * normal_log_pdf(3, 7, 1.5);
  const double m = std::max(a, b);
  const double expected = m + std::log(std::exp(a - m) + std::exp(b - m));
  CHECK(t.log_density(x) == doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("mixture log density stays finite far from both modes") {
  const auto t = two_mode_mixture(3);
  const double v = t.log_density(Eigen::Vector3d(1e3, -1e3, 5e2));
  CHECK(std::isfinite(v));
  CHECK(v < -1e5);
}

TEST_CASE("input validation") {
  const auto t = Target::isotropic_gaussian(3, 5.0, 0.7);
  CHECK_THROWS_AS(t.log_density(Eigen::Vector2d(1, 2)), InputError);
  CHECK_THROWS_AS(t.log_density(Eigen::Vector3d(1, std::numeric_limits<double>::quiet_NaN(), 2)),
                  InputError);
  CHECK_THROWS_AS(t.grad_log_density(Eigen::Vector2d(1, 2)), InputError);
  CHECK_THROWS_AS(Target::isotropic_gaussian(0, 0.0, 1.0), InputError);
  CHECK_THROWS_AS(Target::isotropic_gaussian(2, 0.0, 0.0), InputError);
  CHECK_THROWS_AS(Target::mixture({{0.6, Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1)},
                                   {0.6, Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1)}}),
                  InputError);
  CHECK_THROWS_AS(Target::mixture({{-0.5, Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1)},
                                   {1.5, Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1)}}),
                  InputError);
}

TEST_CASE("gaussian gradient") {
  const auto t = Target::isotropic_gaussian(3, 5.0, 0.7);
  CHECK(t.grad_log_density(Eigen::Vector3d(5, 5, 5)).norm() == 0.0);
  const Eigen::Vector3d x(4.0, 5.5, 7.0);
  const Eigen::VectorXd g = t.grad_log_density(x);
  for (int i = 0; i < 3; ++i) CHECK(g[i] == doctest::Approx(-(x[i] - 5.0) / 0.49).epsilon(1e-14));
}

TEST_CASE("analytic gradients match central differences at 100 random points") {
  RngStream rng(7);
  const auto gauss = Target::gaussian(Eigen::Vector3d(1.0, -2.0, 0.5), Eigen::Vector3d(0.5, 1.0, 2.0));
  const auto mix = two_mode_mixture(3);
  for (int i = 0; i < 100; ++i) {
    Eigen::Vector3d x;
    for (int j = 0; j < 3; ++j) x[j] = 5.0 + 3.0 * rng.normal();
    check_gradient(gauss, x);
    check_gradient(mix, x);
  }
}

TEST_CASE("custom targets fall back to finite differences") {
  const auto t = Target::custom(2, [](const Eigen::Ref<const Eigen::VectorXd>& x) {
    return -0.5 * x.squaredNorm() - 0.25 * std::pow(x[0], 4);
  });
  CHECK(t.gradient_is_numeric());
  const Eigen::Vector2d x(0.7, -1.2);
  const Eigen::VectorXd g = t.grad_log_density(x);
  CHECK(g[0] == doctest::Approx(-0.7 - std::pow(0.7, 3)).epsilon(1e-8));
  CHECK(g[1] == doctest::Approx(1.2).epsilon(1e-8));
  CHECK_FALSE(t.known_log_normalizer().has_value());
}

TEST_CASE("analytic moments") {
  const auto g = Target::isotropic_gaussian(3, 5.0, 0.7);
  CHECK(analytic_moment(g, TestFunction::cube) == doctest::Approx(132.35).epsilon(1e-14));
  CHECK(analytic_moment(g, TestFunction::identity) == doctest::Approx(5.0));
  CHECK(analytic_moment(g, TestFunction::square) == doctest::Approx(25.49));
  CHECK(analytic_moment(g, TestFunction::exp) == doctest::Approx(std::exp(5.0 + 0.245)));
  const auto m = two_mode_mixture(3);
  CHECK(analytic_moment(m, TestFunction::identity) == doctest::Approx(5.0));
  CHECK(analytic_moment(m, TestFunction::cube) == doctest::Approx(210.83).epsilon(1e-14));
  const auto c = Target::custom(1, [](const Eigen::Ref<const Eigen::VectorXd>& x) { return -x[0] * x[0]; });
  CHECK_THROWS_AS(analytic_moment(c, TestFunction::identity), UnsupportedOracleError);
}

TEST_CASE("1-d gaussian integrates to one") {
  const double mu = 5.0, sigma = 0.7;
  const auto t = Target::isotropic_gaussian(1, mu, sigma);
  const int n = 20000;
  const double a = mu - 10 * sigma, b = mu + 10 * sigma, h = (b - a) / n;
  double sum = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double w = (i == 0 || i == n) ? 0.5 : 1.0;
    sum += w * std::exp(t.log_density(Eigen::VectorXd::Constant(1, a + i * h)));
  }
  CHECK(std::abs(sum * h - 1.0) < 1e-6);
}

TEST_CASE("scaling shifts the log density and the normalizer") {
  const auto t = two_mode_mixture(2);
  const auto s = t.scaled(std::log(3.0));
  const Eigen::Vector2d x(4.0, 6.0);
  CHECK(s.log_density(x) == doctest::Approx(t.log_density(x) + std::log(3.0)).epsilon(1e-15));
  CHECK(s.known_log_normalizer().value() == doctest::Approx(std::log(3.0)));
}

TEST_CASE("evaluation counters and cost multiplier") {
  const auto t = Target::isotropic_gaussian(2, 0.0, 1.0);
  const auto heavy = t.with_cost_multiplier(5);
  const Eigen::Vector2d x(0.3, 0.4);
  CHECK(heavy.log_density(x) == t.log_density(x));
  CHECK(heavy.density_evaluations() == 1);
  CHECK(t.density_evaluations() == 1);
  t.grad_log_density(x);
  CHECK(t.gradient_evaluations() == 1);
  const Target copy = t;
  copy.log_density(x);
  CHECK(t.density_evaluations() == 2);
  t.reset_counters();
  CHECK(copy.density_evaluations() == 0);
}

TEST_CASE("test functions") {
  CHECK(test_function_eval(TestFunction::cube, Eigen::Vector3d(1, 2, 3)) == 12.0);
  CHECK(test_function_eval(TestFunction::identity, Eigen::Vector2d(2, 2)) == 2.0);
  CHECK(test_function_eval(TestFunction::exp, Eigen::Vector3d::Zero()) == 1.0);
  CHECK(test_function_eval(TestFunction::square, Eigen::Vector2d(1, 3)) == 5.0);
  CHECK_THROWS_AS(parse_test_function("quartic"), InputError);
  for (auto tf : kAllTestFunctions) CHECK(parse_test_function(to_string(tf)) == tf);
  CHECK(make_integrand(TestFunction::cube)(Eigen::Vector3d(1, 2, 3)) == 12.0);
}
