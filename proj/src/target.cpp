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

#include "mcis/target.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "mcis/error.hpp"
#include "mcis/gp.hpp"

namespace mcis {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * log(2 pi)

// Keeps the repeated work of with_cost_multiplier() from being optimized away.
volatile double g_cost_sink = 0.0;

}  // namespace

struct Target::Definition {
  TargetKind kind = TargetKind::custom;
  int dimension = 0;
  std::vector<GaussianComponent> components;
  // Per component: log(weight) - sum_i log(stddev_i) - d/2 log(2 pi), and 1 / stddev.
  std::vector<double> component_log_const;
  std::vector<Eigen::VectorXd> inv_stddev;
  std::shared_ptr<const GpPosterior> gp;
  LogDensityFn custom_density;
  GradientFn custom_gradient;
  std::optional<double> custom_log_normalizer;
  double log_scale = 0.0;
  int cost_multiplier = 1;
};

std::string_view to_string(TargetKind kind) {
  switch (kind) {
    case TargetKind::gaussian:
      return "gaussian";
    case TargetKind::mixture_of_gaussians:
      return "mixture";
    case TargetKind::gp_posterior:
      return "gp";
    case TargetKind::custom:
      return "custom";
  }
  return "unknown";
}

Target::Target(std::shared_ptr<const Definition> def)
    : def_(std::move(def)), counters_(std::make_shared<Counters>()) {}

namespace {

void prepare_components(const std::vector<GaussianComponent>& components,
                        std::vector<double>& log_const, std::vector<Eigen::VectorXd>& inv_stddev) {
  log_const.clear();
  inv_stddev.clear();
  for (const auto& c : components) {
    const auto d = static_cast<double>(c.mean.size());
    log_const.push_back(std::log(c.weight) - c.stddev.array().log().sum() - d * kHalfLog2Pi);
    inv_stddev.push_back(c.stddev.cwiseInverse());
  }
}

}  // namespace

Target Target::gaussian(Eigen::VectorXd mean, Eigen::VectorXd stddev) {
  std::vector<GaussianComponent> components;
  components.push_back({1.0, std::move(mean), std::move(stddev)});
  auto target = mixture(std::move(components));
  auto def = std::make_shared<Definition>(*target.def_);
  def->kind = TargetKind::gaussian;
  return Target(std::move(def));
}

Target Target::isotropic_gaussian(int dimension, double mean, double stddev) {
  if (dimension < 1) throw InputError("target dimension must be at least 1");
  return gaussian(Eigen::VectorXd::Constant(dimension, mean),
                  Eigen::VectorXd::Constant(dimension, stddev));
}

Target Target::mixture(std::vector<GaussianComponent> components) {
  if (components.empty()) throw InputError("mixture needs at least one component");
  const auto d = components.front().mean.size();
  if (d < 1) throw InputError("target dimension must be at least 1");
  double weight_sum = 0.0;
  for (const auto& c : components) {
    if (c.mean.size() != d || c.stddev.size() != d) {
      throw InputError("mixture components must share one dimension");
    }
    if (!(c.weight > 0.0) || !std::isfinite(c.weight)) {
      throw InputError("mixture weights must be positive");
    }
    if (!c.mean.allFinite()) throw InputError("component means must be finite");
    if (!(c.stddev.array() > 0.0).all() || !c.stddev.allFinite()) {
      throw InputError("standard deviations must be positive and finite");
    }
    weight_sum += c.weight;
  }
  if (std::abs(weight_sum - 1.0) > 1e-12) throw InputError("mixture weights must sum to 1");

  auto def = std::make_shared<Definition>();
  def->kind = TargetKind::mixture_of_gaussians;
  def->dimension = static_cast<int>(d);
  def->components = std::move(components);
  prepare_components(def->components, def->component_log_const, def->inv_stddev);
  return Target(std::move(def));
}

Target Target::gp_posterior(std::shared_ptr<const GpPosterior> posterior) {
  if (!posterior) throw InputError("null GP posterior");
  auto def = std::make_shared<Definition>();
  def->kind = TargetKind::gp_posterior;
  def->dimension = posterior->dimension();
  def->gp = std::move(posterior);
  return Target(std::move(def));
}

Target Target::custom(int dimension, LogDensityFn log_density, GradientFn gradient,
                      std::optional<double> log_normalizer) {
  if (dimension < 1) throw InputError("target dimension must be at least 1");
  if (!log_density) throw InputError("custom target needs a log density");
  auto def = std::make_shared<Definition>();
  def->kind = TargetKind::custom;
  def->dimension = dimension;
  def->custom_density = std::move(log_density);
  def->custom_gradient = std::move(gradient);
  def->custom_log_normalizer = log_normalizer;
  return Target(std::move(def));
}

Target Target::scaled(double log_factor) const {
  if (!std::isfinite(log_factor)) throw InputError("log scale factor must be finite");
  auto def = std::make_shared<Definition>(*def_);
  def->log_scale += log_factor;
  return Target(std::move(def));
}

Target Target::with_cost_multiplier(int multiplier) const {
  if (multiplier < 1) throw InputError("cost multiplier must be at least 1");
  auto def = std::make_shared<Definition>(*def_);
  def->cost_multiplier = multiplier;
  return Target(std::move(def));
}

TargetKind Target::kind() const { return def_->kind; }
int Target::dimension() const { return def_->dimension; }
bool Target::gradient_is_numeric() const {
  return def_->kind == TargetKind::custom && !def_->custom_gradient;
}
const std::vector<GaussianComponent>& Target::components() const { return def_->components; }
const GpPosterior* Target::gp() const { return def_->gp.get(); }
int Target::cost_multiplier() const { return def_->cost_multiplier; }

std::optional<double> Target::known_log_normalizer() const {
  switch (def_->kind) {
    case TargetKind::gaussian:
    case TargetKind::mixture_of_gaussians:
      return def_->log_scale;
    case TargetKind::custom:
      if (def_->custom_log_normalizer) return *def_->custom_log_normalizer + def_->log_scale;
      return std::nullopt;
    case TargetKind::gp_posterior:
      return std::nullopt;
  }
  return std::nullopt;
}

std::uint64_t Target::density_evaluations() const {
  return counters_->density.load(std::memory_order_relaxed);
}
std::uint64_t Target::gradient_evaluations() const {
  return counters_->gradient.load(std::memory_order_relaxed);
}
void Target::reset_counters() const {
  counters_->density.store(0, std::memory_order_relaxed);
  counters_->gradient.store(0, std::memory_order_relaxed);
}

void Target::check_point(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != def_->dimension) {
    throw InputError("point has dimension " + std::to_string(x.size()) + ", target expects " +
                     std::to_string(def_->dimension));
  }
  if (!x.allFinite()) throw InputError("point has a non-finite coordinate");
}

double Target::evaluate_once(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  const auto& def = *def_;
  switch (def.kind) {
    case TargetKind::gaussian:
    case TargetKind::mixture_of_gaussians: {
      // log-sum-exp over components; each term is a sum of per-coordinate log pdfs.
      const std::size_t m = def.components.size();
      double terms_buf[8];
      std::vector<double> terms_vec;
      double* terms = terms_buf;
      if (m > 8) {
        terms_vec.resize(m);
        terms = terms_vec.data();
      }
      double max_term = -std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < m; ++c) {
        const auto& comp = def.components[c];
        const double quad = ((x - comp.mean).cwiseProduct(def.inv_stddev[c])).squaredNorm();
        terms[c] = def.component_log_const[c] - 0.5 * quad;
        max_term = std::max(max_term, terms[c]);
      }
      if (m == 1) return terms[0] + def.log_scale;
      double sum = 0.0;
      for (std::size_t c = 0; c < m; ++c) sum += std::exp(terms[c] - max_term);
      return max_term + std::log(sum) + def.log_scale;
    }
    case TargetKind::gp_posterior:
      return def.gp->log_posterior(x) + def.log_scale;
    case TargetKind::custom:
      return def.custom_density(x) + def.log_scale;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double Target::log_density(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  check_point(x);
  counters_->density.fetch_add(1, std::memory_order_relaxed);
  double value = evaluate_once(x);
  for (int rep = 1; rep < def_->cost_multiplier; ++rep) {
    g_cost_sink = g_cost_sink + evaluate_once(x) * 0.0;
  }
  return value;
}

Eigen::VectorXd Target::gradient_once(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  const auto& def = *def_;
  switch (def.kind) {
    case TargetKind::gaussian:
    case TargetKind::mixture_of_gaussians: {
      const std::size_t m = def.components.size();
      if (m == 1) {
        const auto& inv = def.inv_stddev[0];
        return -(x - def.components[0].mean).cwiseProduct(inv).cwiseProduct(inv);
      }
      // Responsibility-weighted sum of component scores.
      std::vector<double> terms(m);
      double max_term = -std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < m; ++c) {
        const auto& comp = def.components[c];
        const double quad = ((x - comp.mean).cwiseProduct(def.inv_stddev[c])).squaredNorm();
        terms[c] = def.component_log_const[c] - 0.5 * quad;
        max_term = std::max(max_term, terms[c]);
      }
      double norm = 0.0;
      for (auto& t : terms) {
        t = std::exp(t - max_term);
        norm += t;
      }
      Eigen::VectorXd grad = Eigen::VectorXd::Zero(x.size());
      for (std::size_t c = 0; c < m; ++c) {
        const auto& inv = def.inv_stddev[c];
        grad -= (terms[c] / norm) *
                (x - def.components[c].mean).cwiseProduct(inv).cwiseProduct(inv);
      }
      return grad;
    }
    case TargetKind::gp_posterior:
      return def.gp->gradient(x);
    case TargetKind::custom:
      if (def.custom_gradient) return def.custom_gradient(x);
      return finite_difference_gradient(def.custom_density, x);
  }
  return Eigen::VectorXd();
}

Eigen::VectorXd Target::grad_log_density(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  check_point(x);
  counters_->gradient.fetch_add(1, std::memory_order_relaxed);
  Eigen::VectorXd g = gradient_once(x);
  for (int rep = 1; rep < def_->cost_multiplier; ++rep) {
    g_cost_sink = g_cost_sink + gradient_once(x)[0] * 0.0;
  }
  if (g.size() != def_->dimension) throw InputError("gradient has the wrong length");
  return g;
}

Eigen::VectorXd finite_difference_gradient(
    const std::function<double(const Eigen::Ref<const Eigen::VectorXd>&)>& f,
    const Eigen::Ref<const Eigen::VectorXd>& x, double step) {
  Eigen::VectorXd grad(x.size());
  Eigen::VectorXd probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    probe[i] = xi + step;
    const double up = f(probe);
    probe[i] = xi - step;
    const double down = f(probe);
    probe[i] = xi;
    grad[i] = (up - down) / (2.0 * step);
  }
  return grad;
}

namespace {

double normal_moment(TestFunction phi, double m, double s) {
  const double v = s * s;
  switch (phi) {
    case TestFunction::identity:
      return m;
    case TestFunction::square:
      return m * m + v;
    case TestFunction::cube:
      return m * m * m + 3.0 * m * v;
    case TestFunction::exp:
      return std::exp(m + 0.5 * v);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

double analytic_moment(const Target& target, TestFunction test_function) {
  if (target.kind() != TargetKind::gaussian && target.kind() != TargetKind::mixture_of_gaussians) {
    throw UnsupportedOracleError("no closed-form moments for a " +
                                 std::string(to_string(target.kind())) + " target");
  }
  const double d = target.dimension();
  double total = 0.0;
  for (const auto& c : target.components()) {
    double per_component = 0.0;
    for (Eigen::Index i = 0; i < c.mean.size(); ++i) {
      per_component += normal_moment(test_function, c.mean[i], c.stddev[i]);
    }
    total += c.weight * per_component / d;
  }
  return total;
}

}  // namespace mcis
