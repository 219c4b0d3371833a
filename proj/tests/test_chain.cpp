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

#include <array>
#include <cmath>
#include <filesystem>
#include <limits>

#include "mcis/chain.hpp"
#include "mcis/error.hpp"
#include "mcis/proposal.hpp"
#include "mcis/target.hpp"

using namespace mcis;

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
// 0.999 quantile of chi-square with 19 degrees of freedom.
constexpr double kChiSquare19 = 43.8202;

Target two_mode_mixture() {
  return Target::mixture({{0.5, Eigen::VectorXd::Constant(3, 3.0), Eigen::VectorXd::Constant(3, 0.7)},
                          {0.5, Eigen::VectorXd::Constant(3, 7.0), Eigen::VectorXd::Constant(3, 1.5)}});
}

// Pearson statistic of values against N(m, s^2) over 20 equal-probability bins.
double chi_square_20(const std::vector<double>& values, double m, double s) {
  std::array<double, 20> counts{};
  for (double v : values) {
    const double u = 0.5 * std::erfc(-(v - m) / (s * std::sqrt(2.0)));
    const int bin = std::min(19, static_cast<int>(u * 20.0));
    counts[static_cast<std::size_t>(bin)] += 1.0;
  }
  const double expected = static_cast<double>(values.size()) / 20.0;
  double stat = 0.0;
  for (double c : counts) stat += (c - expected) * (c - expected) / expected;
  return stat;
}

}  // namespace

TEST_CASE("acceptance probability") {
  CHECK(mh_acceptance(-1.0, -1.0, -2.0, -2.0) == 1.0);
  CHECK(mh_acceptance(0.0, std::log(0.5), -2.0, -2.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(mh_acceptance(-1.0, kNegInf, -2.0, -2.0) == 0.0);
  CHECK(mh_acceptance(-1.0, 3.0, -2.0, -2.0) == 1.0);
  CHECK(mh_acceptance(0.0, 0.0, std::log(0.25), 0.0) == doctest::Approx(0.25));
  CHECK_THROWS_AS(mh_acceptance(kNegInf, 0.0, 0.0, 0.0), InvalidStateError);
}

TEST_CASE("trace invariants under metropolis-hastings") {
  const auto t = Target::isotropic_gaussian(3, 5.0, 0.7);
  const auto q = ProposalFamily::random_walk(3, 0.5);
  const auto trace = run_chain(t, q, 2000, 17, Eigen::Vector3d(5, 5, 5), AcceptMode::metropolis_hastings);
  REQUIRE(trace.size() == 2000);
  for (Eigen::Index k = 0; k + 1 < 2000; ++k) {
    const auto next = trace.states.col(k + 1);
    if (trace.accepted[static_cast<std::size_t>(k)]) {
      CHECK(next == trace.proposals.col(k));
    } else {
      CHECK(next == trace.states.col(k));
    }
  }
  for (Eigen::Index k = 0; k < 2000; k += 97) {
    CHECK(trace.log_rho_y[k] == t.log_density(trace.proposals.col(k)));
    CHECK(trace.log_rho_x[k] == t.log_density(trace.states.col(k)));
    CHECK(trace.log_q_forward[k] == q.log_pdf(trace.proposals.col(k), trace.states.col(k)));
  }
  CHECK(std::is_sorted(trace.cpu_ns.begin(), trace.cpu_ns.end()));
  CHECK(trace.cpu_ns.front() >= 0);
  CHECK(trace.acceptance_rate() > 0.0);
  CHECK(trace.acceptance_rate() < 1.0);
}

TEST_CASE("always-accept moves to every proposal") {
  const auto t = Target::isotropic_gaussian(2, 5.0, 0.7);
  const auto q = ProposalFamily::langevin(t, 0.1);
  const auto trace = run_chain(t, q, 500, 3, Eigen::Vector2d(4, 6), AcceptMode::always_accept);
  CHECK(trace.acceptance_rate() == 1.0);
  for (Eigen::Index k = 0; k + 1 < 500; ++k) CHECK(trace.states.col(k + 1) == trace.proposals.col(k));
}

TEST_CASE("identical seeds give identical traces") {
  const auto t = two_mode_mixture();
  const auto q = ProposalFamily::random_walk(3, 0.9);
  const Eigen::Vector3d x0(5, 5, 5);
  const auto a = run_chain(t, q, 1000, 42, x0, AcceptMode::metropolis_hastings);
  const auto b = run_chain(t, q, 1000, 42, x0, AcceptMode::metropolis_hastings);
  CHECK(a.states == b.states);
  CHECK(a.proposals == b.proposals);
  CHECK(a.log_rho_y == b.log_rho_y);
  CHECK(a.accepted == b.accepted);
  const auto c = run_chain(t, q, 1000, 43, x0, AcceptMode::metropolis_hastings);
  CHECK(a.proposals != c.proposals);
}

TEST_CASE("target evaluations are K + 1") {
  const auto t = two_mode_mixture();
  const auto q = ProposalFamily::random_walk(3, 0.9);
  t.reset_counters();
  const auto trace = run_chain(t, q, 777, 1, Eigen::Vector3d(5, 5, 5), AcceptMode::metropolis_hastings);
  CHECK(trace.target_evaluations == 778);
  CHECK(t.density_evaluations() == 778);
}

TEST_CASE("chain input errors") {
  const auto t = Target::isotropic_gaussian(2, 0.0, 1.0);
  const auto q = ProposalFamily::random_walk(2, 1.0);
  CHECK_THROWS_AS(run_chain(t, q, 0, 1, Eigen::Vector2d::Zero(), AcceptMode::metropolis_hastings), InputError);
  CHECK_THROWS_AS(run_chain(t, q, 10, 1, Eigen::Vector3d::Zero(), AcceptMode::metropolis_hastings), InputError);
  const auto walled = Target::custom(2, [](const Eigen::Ref<const Eigen::VectorXd>& x) {
    return x[0] < 0.0 ? kNegInf : -0.5 * x.squaredNorm();
  });
  CHECK_THROWS_AS(run_chain(walled, q, 10, 1, Eigen::Vector2d(-1, 0), AcceptMode::metropolis_hastings),
                  InitializationError);
  const auto trace = run_chain(walled, q, 2000, 1, Eigen::Vector2d(1, 0), AcceptMode::metropolis_hastings);
  CHECK((trace.states.row(0).array() >= 0.0).all());
  CHECK_THROWS_AS(parse_accept_mode("sometimes"), InputError);
}

TEST_CASE("tuned mixture chain accepts near 0.234") {
  const auto t = two_mode_mixture();
  const auto q = ProposalFamily::random_walk(3, 0.9);
  const Eigen::Vector3d x0(5, 5, 5);
  const auto tuned = tune_scale(t, q, 0.234, 2000, 5, x0);
  const auto trace = run_chain(t, q.with_theta(tuned.theta), 10000, 6, x0, AcceptMode::metropolis_hastings);
  CHECK(std::abs(trace.acceptance_rate() - 0.234) <= 0.05);
}

TEST_CASE("tuning examples") {
  const auto t = Target::isotropic_gaussian(3, 5.0, 0.7);
  const auto q = ProposalFamily::random_walk(3, 1.0);
  const Eigen::Vector3d x0(5, 5, 5);
  const auto r = tune_scale(t, q, 0.234, 2000, 9, x0);
  CHECK(r.rate >= 0.184);
  CHECK(r.rate <= 0.284);
  CHECK(r.history.size() <= 30);

  const auto hi = tune_scale(t, q, 0.999, 2000, 9, x0);
  CHECK(hi.rate >= 0.95);
  CHECK(hi.theta < 0.1);

  CHECK_THROWS_AS(tune_scale(t, q, 0.0, 2000, 9, x0), InputError);
  CHECK_THROWS_AS(tune_scale(t, q, 1.0, 2000, 9, x0), InputError);
  CHECK_THROWS_AS(tune_scale(t, q, 0.3, 50, 9, x0), InputError);
}

TEST_CASE("tuning that cannot bracket reports its history") {
  // Flat target: every proposal is accepted whatever theta is.
  const auto flat = Target::custom(1, [](const Eigen::Ref<const Eigen::VectorXd>&) { return 0.0; });
  const auto q = ProposalFamily::random_walk(1, 1.0);
  try {
    tune_scale(flat, q, 0.3, 200, 1, Eigen::VectorXd::Zero(1));
    FAIL("expected a tuning error");
  } catch (const TuningError& e) {
    CHECK(e.history().size() == 30);
    CHECK(e.history().front().rate == 1.0);
  }
}

// Thinned by 20 so the Pearson statistic sees nearly independent draws.
TEST_CASE("chain states are stationary for the gaussian target") {
  const double m = 5.0, s = 0.7, theta = 2.4 * 0.7;
  const auto t = Target::isotropic_gaussian(1, m, s);
  const auto q = ProposalFamily::random_walk(1, theta);
  const auto trace = run_chain(t, q, 101000, 2024, Eigen::VectorXd::Constant(1, m),
                               AcceptMode::metropolis_hastings);
  std::vector<double> xs, ys;
  for (Eigen::Index k = 1000; k < 101000; k += 20) {
    xs.push_back(trace.states(0, k));
    ys.push_back(trace.proposals(0, k));
  }
  CHECK(chi_square_20(xs, m, s) < kChiSquare19);
  CHECK(chi_square_20(ys, m, std::sqrt(s * s + theta * theta)) < kChiSquare19);
  // The proposals do not follow the target itself.
  CHECK(chi_square_20(ys, m, s) > kChiSquare19);
}

TEST_CASE("trace CSV round trip") {
  const auto t = Target::isotropic_gaussian(2, 1.0, 2.0);
  const auto q = ProposalFamily::random_walk(2, 1.3);
  const auto trace = run_chain(t, q, 300, 8, Eigen::Vector2d(0.5, 1.5), AcceptMode::metropolis_hastings);
  const auto path = std::filesystem::temp_directory_path() / "mcis_trace_roundtrip.csv";
  write_trace_csv(trace, path);
  auto back = read_trace_csv(path);
  CHECK(back.states == trace.states);
  CHECK(back.proposals == trace.proposals);
  CHECK(back.log_rho_y == trace.log_rho_y);
  CHECK(back.accepted == trace.accepted);
  CHECK(back.cpu_ns == trace.cpu_ns);
  CHECK(back.log_rho_x.tail(299) == trace.log_rho_x.tail(299));
  fill_forward_densities(back, q);
  CHECK(back.log_q_forward == trace.log_q_forward);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(read_trace_csv(path), IoError);
}
