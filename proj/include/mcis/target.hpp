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

#ifndef MCIS_TARGET_HPP
#define MCIS_TARGET_HPP

#include <Eigen/Core>

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "mcis/test_function.hpp"

namespace mcis {

class GpPosterior;

enum class TargetKind { gaussian, mixture_of_gaussians, gp_posterior, custom };

std::string_view to_string(TargetKind kind);

/// One axis-aligned Gaussian component: weight * prod_i N(x_i; mean_i, stddev_i^2).
struct GaussianComponent {
  double weight = 1.0;
  Eigen::VectorXd mean;
  Eigen::VectorXd stddev;
};

/// Unnormalized target density rho, evaluated in the log domain.
///
/// A Target is a cheap handle: copies share the immutable definition and the evaluation counters.
/// Evaluations are pure apart from the relaxed atomic counter increments and may be issued from
/// any number of threads.
class Target {
 public:
  using LogDensityFn = std::function<double(const Eigen::Ref<const Eigen::VectorXd>&)>;
  using GradientFn = std::function<Eigen::VectorXd(const Eigen::Ref<const Eigen::VectorXd>&)>;

  /// Product of independent normals; normalized, so Z = 1.
  static Target gaussian(Eigen::VectorXd mean, Eigen::VectorXd stddev);
  static Target isotropic_gaussian(int dimension, double mean, double stddev);

  /// Weighted mixture of axis-aligned Gaussians; weights must be positive and sum to 1.
  static Target mixture(std::vector<GaussianComponent> components);

  /// Posterior over unconstrained GP hyperparameters. Gradient is analytic.
  static Target gp_posterior(std::shared_ptr<const GpPosterior> posterior);

  /// User-supplied log density. Without a gradient, central differences are used.
  static Target custom(int dimension, LogDensityFn log_density, GradientFn gradient = nullptr,
                       std::optional<double> log_normalizer = std::nullopt);

  /// Same density multiplied by exp(log_factor). The copy gets fresh counters.
  Target scaled(double log_factor) const;

  /// Same density, but every evaluation repeats the underlying work `multiplier` times.
  /// Used to emulate expensive targets. The copy gets fresh counters.
  Target with_cost_multiplier(int multiplier) const;

  TargetKind kind() const;
  int dimension() const;

  /// log rho(x). Throws InputError on a length mismatch or a non-finite entry.
  double log_density(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  /// grad log rho(x).
  Eigen::VectorXd grad_log_density(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  /// True when grad_log_density falls back to finite differences.
  bool gradient_is_numeric() const;

  /// log Z when rho is known to integrate to exp(log Z).
  std::optional<double> known_log_normalizer() const;

  /// Components of Gaussian and mixture targets (a Gaussian is a single component).
  const std::vector<GaussianComponent>& components() const;

  const GpPosterior* gp() const;

  int cost_multiplier() const;

  std::uint64_t density_evaluations() const;
  std::uint64_t gradient_evaluations() const;
  void reset_counters() const;

 private:
  struct Definition;
  struct Counters {
    std::atomic<std::uint64_t> density{0};
    std::atomic<std::uint64_t> gradient{0};
  };

  explicit Target(std::shared_ptr<const Definition> def);

  double evaluate_once(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Eigen::VectorXd gradient_once(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  void check_point(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  std::shared_ptr<const Definition> def_;
  std::shared_ptr<Counters> counters_;
};

/// E_mu[d^-1 sum_i phi(x_i)] in closed form for Gaussian and mixture targets.
/// Throws UnsupportedOracleError for other kinds.
double analytic_moment(const Target& target, TestFunction test_function);

/// Central differences with a fixed step; used as the gradient fallback and in tests.
Eigen::VectorXd finite_difference_gradient(
    const std::function<double(const Eigen::Ref<const Eigen::VectorXd>&)>& f,
    const Eigen::Ref<const Eigen::VectorXd>& x, double step = 1e-5);

}  // namespace mcis

#endif  // MCIS_TARGET_HPP
