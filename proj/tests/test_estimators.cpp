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

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "mcis/error.hpp"
#include "mcis/estimators.hpp"
#include "mcis/rng.hpp"

using namespace mcis;

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  return m / static_cast<double>(v.size());
}

double stddev(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

const Target& gauss3() {
  static const Target t = Target::isotropic_gaussian(3, 5.0, 0.7);
  return t;
}

}  // namespace

TEST_CASE("self-normalized estimate basics") {
  const Eigen::VectorXd lw = (Eigen::VectorXd(4) << -3.0, 0.5, 2.0, -1.0).finished();
  const Eigen::VectorXd c = Eigen::VectorXd::Constant(4, 0.1);
  CHECK(self_normalized_estimate(lw, c) == 0.1);
  const Eigen::VectorXd f = (Eigen::VectorXd(4) << 1.0, 2.0, 4.0, 9.0).finished();
  CHECK(self_normalized_estimate(Eigen::VectorXd::Constant(4, -7.0), f) == doctest::Approx(4.0).epsilon(1e-15));
  const double e = self_normalized_estimate(lw, f);
  CHECK(e >= 1.0);
  CHECK(e <= 9.0);
  CHECK_THROWS_AS(self_normalized_estimate(Eigen::VectorXd::Constant(3, kNegInf), f.head(3)), EstimatorError);
  CHECK_THROWS_AS(self_normalized_estimate(lw.head(3), f), InputError);
}

TEST_CASE("running estimates are convex combinations and shift invariant") {
  RngStream rng(1);
  Eigen::VectorXd lw(500), f(500);
  for (int k = 0; k < 500; ++k) {
    lw[k] = 3.0 * rng.normal();
    f[k] = rng.normal();
  }
  const auto run = running_self_normalized(lw, f);
  const auto shifted = running_self_normalized((lw.array() + 64.0).matrix(), f);
  for (std::size_t k = 0; k < run.size(); ++k) CHECK(shifted[k] == doctest::Approx(run[k]).epsilon(1e-12));
  for (int k = 0; k < 500; ++k) {
    CHECK(run[static_cast<std::size_t>(k)] >= f.head(k + 1).minCoeff() - 1e-12);
    CHECK(run[static_cast<std::size_t>(k)] <= f.head(k + 1).maxCoeff() + 1e-12);
  }
  CHECK(run.back() == doctest::Approx(self_normalized_estimate(lw, f)).epsilon(1e-12));
  CHECK(self_normalized_estimate(lw, f) ==
        doctest::Approx(self_normalized_estimate((lw.array() + 64.0).matrix(), f)).epsilon(1e-12));

  Eigen::VectorXd lw2 = lw;
  lw2[0] = kNegInf;
  CHECK(std::isnan(running_self_normalized(lw2, f)[0]));
}

TEST_CASE("evidence estimate") {
  CHECK(evidence_estimate(Eigen::VectorXd::Zero(10)) == 0.0);
  const Eigen::VectorXd lw = (Eigen::VectorXd(2) << std::log(1.0), std::log(3.0)).finished();
  CHECK(evidence_estimate(lw) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(evidence_estimate(Eigen::VectorXd::Constant(2, kNegInf)) == kNegInf);
}

TEST_CASE("single step estimates equal f at the proposal") {
  const auto q = ProposalFamily::random_walk(3, 0.6);
  const auto trace = run_chain(gauss3(), q, 1, 3, Eigen::Vector3d(5, 5, 5), AcceptMode::metropolis_hastings);
  const auto f = make_integrand(TestFunction::cube);
  const double fy = f(trace.proposals.col(0));
  const auto m = build_log_matrix(trace, q);
  CHECK(mcis_estimate(trace, m.log_mixture, f).final_estimate() == fy);
  CHECK(smcis_estimate(trace, f).final_estimate() == fy);
  CHECK(exact_mcis_estimate(trace, gauss3(), q, f).final_estimate() == fy);
  CHECK(vanilla_estimate(trace, f).final_estimate() == f(trace.states.col(0)));
}

TEST_CASE("constant integrands are reproduced exactly") {
  const auto q = ProposalFamily::random_walk(3, 0.6);
  const auto trace = run_chain(gauss3(), q, 400, 4, Eigen::Vector3d(5, 5, 5), AcceptMode::metropolis_hastings);
  const Integrand c = [](const Eigen::Ref<const Eigen::VectorXd>&) { return 0.3; };
  const auto m = build_log_matrix(trace, q);
  for (double v : mcis_estimate(trace, m.log_mixture, c).estimates) CHECK(v == 0.3);
  for (double v : exact_mcis_estimate(trace, gauss3(), q, c).estimates) CHECK(v == 0.3);
  for (double v : lais_estimate(trace, gauss3(), q, c, 99).estimates) CHECK(v == 0.3);
}

TEST_CASE("vanilla estimator") {
  const auto q = ProposalFamily::random_walk(3, 0.6);
  const auto trace = run_chain(gauss3(), q, 300, 5, Eigen::Vector3d(5, 5, 5), AcceptMode::metropolis_hastings);
  const auto f = make_integrand(TestFunction::identity);
  const auto s = vanilla_estimate(trace, f);
  double sum = 0.0;
  for (Eigen::Index k = 0; k < 300; ++k) {
    sum += f(trace.states.col(k));
    CHECK(s.estimates[static_cast<std::size_t>(k)] == doctest::Approx(sum / (k + 1)).epsilon(1e-13));
  }
  ChainTrace frozen = trace;
  frozen.states = trace.states.col(0).replicate(1, 300);
  for (double v : vanilla_estimate(frozen, f).estimates) CHECK(v == f(trace.states.col(0)));
}

TEST_CASE("independent proposals collapse to standard importance sampling") {
  const auto q = ProposalFamily::independent(Eigen::Vector3d(5.2, 4.9, 5.0), 0.9);
  const auto trace = run_chain(gauss3(), q, 2000, 6, Eigen::Vector3d(5, 5, 5), AcceptMode::metropolis_hastings);
  const auto f = make_integrand(TestFunction::cube);
  const auto m = build_log_matrix(trace, q);
  const auto a = mcis_estimate(trace, m.log_mixture, f);
  const auto b = exact_mcis_estimate(trace, gauss3(), q, f);
  const auto c = smcis_estimate(trace, f);
  Eigen::VectorXd lw(2000), fv(2000);
  for (Eigen::Index k = 0; k < 2000; ++k) {
    lw[k] = trace.log_rho_y[k] - q.log_pdf(trace.proposals.col(k), Eigen::Vector3d::Zero());
    fv[k] = f(trace.proposals.col(k));
  }
  const auto is = running_self_normalized(lw, fv);
  for (std::size_t k = 0; k < 2000; ++k) {
    CHECK(std::abs(a.estimates[k] - is[k]) <= 1e-12 * std::abs(is[k]));
    CHECK(std::abs(b.estimates[k] - is[k]) <= 1e-12 * std::abs(is[k]));
    CHECK(std::abs(c.estimates[k] - is[k]) <= 1e-12 * std::abs(is[k]));
  }
}

TEST_CASE("independent proposal equal to the target has unit weights") {
  const auto q = ProposalFamily::independent(Eigen::Vector3d(5, 5, 5), 0.7);
  const auto trace = run_chain(gauss3(), q, 1000, 7, Eigen::Vector3d(5, 5, 5), AcceptMode::metropolis_hastings);
  CHECK(trace.acceptance_rate() == 1.0);
  const auto lw = exact_mcis_log_weights(trace, gauss3(), q);
  CHECK(lw.isZero(0.0));
  CHECK(evidence_estimate(lw) == 0.0);
  const auto f = make_integrand(TestFunction::identity);
  const auto m = build_log_matrix(trace, q);
  CHECK(mcis_log_weights(trace, m.log_mixture).isZero(0.0));
  double mean = 0.0;
  for (Eigen::Index k = 0; k < 1000; ++k) mean += f(trace.proposals.col(k));
  CHECK(mcis_estimate(trace, m.log_mixture, f).final_estimate() == doctest::Approx(mean / 1000).epsilon(1e-13));
}

TEST_CASE("scaling the target scales the evidence") {
  const auto q = ProposalFamily::random_walk(3, 0.6);
  const auto trace = run_chain(gauss3(), q, 500, 8, Eigen::Vector3d(5, 5, 5), AcceptMode::metropolis_hastings);
  const auto m = build_log_matrix(trace, q);
  const Eigen::VectorXd lw = mcis_log_weights(trace, m.log_mixture);
  ChainTrace scaled = trace;
  const double log_a = std::log(4.0);
  scaled.log_rho_y = (trace.log_rho_y.array() + log_a).matrix();
  const Eigen::VectorXd lw_scaled = mcis_log_weights(scaled, m.log_mixture);
  CHECK(evidence_estimate(lw_scaled) == doctest::Approx(evidence_estimate(lw) + log_a).epsilon(1e-14));
}

TEST_CASE("estimators do not touch the target and LAIS spends K evaluations") {
  const auto& t = gauss3();
  const auto q = ProposalFamily::random_walk(3, 0.6);
  t.reset_counters();
  const auto trace = run_chain(t, q, 250, 9, Eigen::Vector3d(5, 5, 5), AcceptMode::metropolis_hastings);
  CHECK(t.density_evaluations() == 251);
  const auto f = make_integrand(TestFunction::square);
  const auto m = build_log_matrix(trace, q);
  mcis_estimate(trace, m.log_mixture, f);
  smcis_estimate(trace, f);
  exact_mcis_estimate(trace, t, q, f);
  vanilla_estimate(trace, f);
  CHECK(t.density_evaluations() == 251);
  const auto s = lais_estimate(trace, t, q, f, 1234);
  CHECK(s.extra_target_evaluations == 250);
  CHECK(t.density_evaluations() == 501);
}

TEST_CASE("LAIS is deterministic in its seed") {
  const auto q = ProposalFamily::random_walk(3, 0.6);
  const auto trace = run_chain(gauss3(), q, 200, 10, Eigen::Vector3d(5, 5, 5), AcceptMode::metropolis_hastings);
  const auto a = lais_sample(trace, gauss3(), q, 5);
  const auto b = lais_sample(trace, gauss3(), q, 5);
  CHECK(a.points == b.points);
  CHECK(a.log_weights == b.log_weights);
  CHECK(a.points != trace.proposals);
}

TEST_CASE("exact and estimated MCIS agree across seeds") {
  const auto q = ProposalFamily::random_walk(3, 0.6);
  const auto f = make_integrand(TestFunction::cube);
  std::vector<double> exact, est;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto trace = run_chain(gauss3(), q, 2000, seed, Eigen::Vector3d(5, 5, 5), AcceptMode::metropolis_hastings);
    const auto m = build_log_matrix(trace, q);
    exact.push_back(exact_mcis_estimate(trace, gauss3(), q, f).final_estimate());
    est.push_back(mcis_estimate(trace, m.log_mixture, f).final_estimate());
  }
  const double sd = stddev(exact);
  for (std::size_t i = 0; i < 20; ++i) CHECK(std::abs(exact[i] - est[i]) < 3.0 * sd);
}

TEST_CASE("MCIS beats vanilla on the gaussian cube moment") {
  const auto q = ProposalFamily::random_walk(3, 0.6);
  const auto f = make_integrand(TestFunction::cube);
  int wins = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto trace = run_chain(gauss3(), q, 10000, seed, Eigen::Vector3d(5, 5, 5), AcceptMode::metropolis_hastings);
    const auto m = build_log_matrix(trace, q);
    const double e_m = std::abs(mcis_estimate(trace, m.log_mixture, f).final_estimate() - 132.35);
    const double e_v = std::abs(vanilla_estimate(trace, f).final_estimate() - 132.35);
    wins += e_m < e_v;
  }
  CHECK(wins > 10);
}

TEST_CASE("exact MCIS error shrinks from 100 to 10000 samples") {
  const auto q = ProposalFamily::random_walk(3, 0.6);
  const auto f = make_integrand(TestFunction::identity);
  int better = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto trace = run_chain(gauss3(), q, 10000, seed, Eigen::Vector3d(5, 5, 5), AcceptMode::metropolis_hastings);
    const auto s = exact_mcis_estimate(trace, gauss3(), q, f);
    better += std::abs(s.estimates[9999] - 5.0) < std::abs(s.estimates[99] - 5.0);
  }
  CHECK(better >= 18);
}

TEST_CASE("LAIS and MCIS agree on the mixture target") {
  const auto t = Target::mixture({{0.5, Eigen::VectorXd::Constant(3, 3.0), Eigen::VectorXd::Constant(3, 0.7)},
                                  {0.5, Eigen::VectorXd::Constant(3, 7.0), Eigen::VectorXd::Constant(3, 1.5)}});
  const auto q = ProposalFamily::random_walk(3, 1.2);
  const auto f = make_integrand(TestFunction::identity);
  std::vector<double> lais, mcis;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto trace = run_chain(t, q, 3000, seed, Eigen::Vector3d(5, 5, 5), AcceptMode::metropolis_hastings);
    const auto m = build_log_matrix(trace, q);
    mcis.push_back(mcis_estimate(trace, m.log_mixture, f).final_estimate());
    lais.push_back(lais_estimate(trace, t, q, f, seed + 100).final_estimate());
  }
  std::vector<double> diff;
  for (std::size_t i = 0; i < 20; ++i) diff.push_back(lais[i] - mcis[i]);
  CHECK(std::abs(mean(diff)) < 3.0 * stddev(diff) / std::sqrt(20.0));
}

TEST_CASE("ULA vanilla estimates carry the discretization bias") {
  const auto t = Target::isotropic_gaussian(1, 5.0, 0.7);
  const auto q = ProposalFamily::langevin(t, 0.1);
  // Centered second moment: same bias, far less Monte Carlo noise than E[X^2].
  const Integrand f = [](const Eigen::Ref<const Eigen::VectorXd>& x) { return (x[0] - 5.0) * (x[0] - 5.0); };
  const auto trace = run_chain(t, q, 100000, 1, Eigen::VectorXd::Constant(1, 5.0), AcceptMode::always_accept);
  const double v = vanilla_estimate(trace, f).final_estimate();
  CHECK(std::abs(v - 0.5457) < 0.02);
  const double e = exact_mcis_estimate(trace, t, q, f).final_estimate();
  CHECK(std::abs(e - 0.49) < 0.02);
  // The mixture costs K^2 kernel evaluations on a chain without repeats; use a shorter chain.
  const auto shorter = run_chain(t, q, 20000, 2, Eigen::VectorXd::Constant(1, 5.0), AcceptMode::always_accept);
  const auto m = build_log_matrix(shorter, q);
  const double est = mcis_estimate(shorter, m.log_mixture, f).final_estimate();
  CHECK(std::abs(est - 0.49) < 0.035);
}

TEST_CASE("S-MCIS trails MCIS under ULA") {
  const auto t = Target::isotropic_gaussian(1, 5.0, 0.7);
  const auto q = ProposalFamily::langevin(t, 0.6);
  const auto f = make_integrand(TestFunction::cube);
  std::vector<double> e_s, e_m;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto trace = run_chain(t, q, 10000, seed, Eigen::VectorXd::Constant(1, 5.0), AcceptMode::always_accept);
    const auto m = build_log_matrix(trace, q);
    e_m.push_back(std::abs(mcis_estimate(trace, m.log_mixture, f).final_estimate() - 132.35));
    e_s.push_back(std::abs(smcis_estimate(trace, f).final_estimate() - 132.35));
  }
  CHECK(median(e_m) < median(e_s));
}

TEST_CASE("batch means variance") {
  EstimateSeries constant;
  constant.f_values = Eigen::VectorXd::Constant(1000, 2.0);
  constant.log_weights = Eigen::VectorXd::Zero(1000);
  CHECK(clt_batch_variance(constant, 20) == 0.0);
  CHECK_THROWS_AS(clt_batch_variance(constant, 9), InputError);
  EstimateSeries tiny;
  tiny.f_values = Eigen::VectorXd::Zero(5);
  CHECK_THROWS_AS(clt_batch_variance(tiny, 10), InputError);

  RngStream rng(44);
  std::vector<double> ratios;
  for (int rep = 0; rep < 50; ++rep) {
    EstimateSeries s;
    s.f_values.resize(10000);
    s.log_weights = Eigen::VectorXd::Zero(10000);
    for (int k = 0; k < 10000; ++k) s.f_values[k] = rng.normal();
    ratios.push_back(clt_batch_variance(s, 20));
  }
  const double med = median(ratios);
  CHECK(med > 0.5);
  CHECK(med < 2.0);
}

TEST_CASE("estimator names") {
  for (auto k : kAllEstimators) CHECK(parse_estimator_kind(to_string(k)) == k);
  CHECK_THROWS_AS(parse_estimator_kind("amis"), InputError);
}

TEST_CASE("mismatched inputs are rejected") {
  const auto q = ProposalFamily::random_walk(3, 0.6);
  auto trace = run_chain(gauss3(), q, 20, 1, Eigen::Vector3d(5, 5, 5), AcceptMode::metropolis_hastings);
  CHECK_THROWS_AS(mcis_log_weights(trace, Eigen::VectorXd::Zero(19)), InputError);
  trace.log_q_forward = Eigen::VectorXd::Constant(20, std::numeric_limits<double>::quiet_NaN());
  CHECK_THROWS_AS(smcis_log_weights(trace), InputError);
}
