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

#include "mcis/estimators.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "mcis/cpu_time.hpp"
#include "mcis/error.hpp"
#include "mcis/rng.hpp"

namespace mcis {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_lengths(Eigen::Index a, Eigen::Index b) {
  if (a != b) throw InputError("weights and values have different lengths");
  if (a < 1) throw InputError("at least one sample is required");
}

}  // namespace

std::string_view to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::vanilla:
      return "vanilla";
    case EstimatorKind::mcis:
      return "mcis";
    case EstimatorKind::mcis_exact:
      return "mcis-exact";
    case EstimatorKind::smcis:
      return "smcis";
    case EstimatorKind::lais:
      return "lais";
    case EstimatorKind::mcis_cv_linear:
      return "mcis-cv-linear";
    case EstimatorKind::mcis_cv_log:
      return "mcis-cv-log";
  }
  return "unknown";
}

EstimatorKind parse_estimator_kind(std::string_view name) {
  for (auto kind : kAllEstimators) {
    if (to_string(kind) == name) return kind;
  }
  throw InputError("unknown estimator '" + std::string(name) + "'");
}

// Both estimators accumulate f - f_0 so that a constant integrand is reproduced exactly.
double self_normalized_estimate(const Eigen::Ref<const Eigen::VectorXd>& log_weights,
                                const Eigen::Ref<const Eigen::VectorXd>& f_values) {
  check_lengths(log_weights.size(), f_values.size());
  const double top = log_weights.maxCoeff();
  if (top == kNegInf) throw EstimatorError("all importance weights are zero");
  if (std::isnan(top) || top == std::numeric_limits<double>::infinity()) {
    throw InputError("log weights must be finite or -inf");
  }
  const double ref = f_values[0];
  double sw = 0.0;
  double swf = 0.0;
  for (Eigen::Index k = 0; k < log_weights.size(); ++k) {
    const double w = std::exp(log_weights[k] - top);
    sw += w;
    swf += w * (f_values[k] - ref);
  }
  return ref + swf / sw;
}

std::vector<double> running_self_normalized(const Eigen::Ref<const Eigen::VectorXd>& log_weights,
                                            const Eigen::Ref<const Eigen::VectorXd>& f_values) {
  check_lengths(log_weights.size(), f_values.size());
  std::vector<double> out(static_cast<std::size_t>(log_weights.size()));
  const double ref = f_values[0];
  double shift = kNegInf;
  double sw = 0.0;
  double swf = 0.0;
  for (Eigen::Index k = 0; k < log_weights.size(); ++k) {
    const double lw = log_weights[k];
    if (lw > shift) {
      if (sw > 0.0) {
        const double scale = std::exp(shift - lw);
        sw *= scale;
        swf *= scale;
      }
      shift = lw;
    }
    if (lw != kNegInf) {
      const double w = std::exp(lw - shift);
      sw += w;
      swf += w * (f_values[k] - ref);
    }
    out[static_cast<std::size_t>(k)] =
        sw > 0.0 ? ref + swf / sw : std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

double evidence_estimate(const Eigen::Ref<const Eigen::VectorXd>& log_weights) {
  if (log_weights.size() < 1) throw InputError("at least one weight is required");
  const double top = log_weights.maxCoeff();
  const double log_k = std::log(static_cast<double>(log_weights.size()));
  if (top == kNegInf) return kNegInf;
  return top + std::log((log_weights.array() - top).exp().sum()) - log_k;
}

Eigen::VectorXd evaluate_columns(const Eigen::Ref<const Eigen::MatrixXd>& points,
                                 const Integrand& f) {
  Eigen::VectorXd out(points.cols());
  for (Eigen::Index k = 0; k < points.cols(); ++k) out[k] = f(points.col(k));
  return out;
}

EstimateSeries weighted_series(std::string_view name, const ChainTrace& trace,
                               Eigen::VectorXd log_weights, Eigen::VectorXd f_values) {
  EstimateSeries s;
  s.estimator = std::string(name);
  s.estimates = running_self_normalized(log_weights, f_values);
  s.cpu_ns = trace.cpu_ns;
  s.log_evidence = evidence_estimate(log_weights);
  s.log_weights = std::move(log_weights);
  s.f_values = std::move(f_values);
  return s;
}

Eigen::VectorXd mcis_log_weights(const ChainTrace& trace,
                                 const Eigen::Ref<const Eigen::VectorXd>& mixture_log_pdf) {
  if (mixture_log_pdf.size() != trace.log_rho_y.size()) {
    throw InputError("mixture values are not aligned with the trace");
  }
  return trace.log_rho_y - mixture_log_pdf;
}

Eigen::VectorXd exact_mcis_log_weights(const ChainTrace& trace, const Target& target,
                                       const ProposalFamily& proposal) {
  const ExactMarginal marginal(target, proposal, trace.settings.accept_mode);
  Eigen::VectorXd lw(trace.log_rho_y.size());
  for (Eigen::Index k = 0; k < lw.size(); ++k) {
    lw[k] = trace.log_rho_y[k] - marginal.log_pdf(trace.proposals.col(k));
  }
  return lw;
}

Eigen::VectorXd smcis_log_weights(const ChainTrace& trace) {
  if (trace.log_q_forward.size() != trace.log_rho_y.size() || !trace.log_q_forward.allFinite()) {
    throw InputError("trace lacks forward proposal densities");
  }
  return trace.log_rho_y - trace.log_q_forward;
}

EstimateSeries mcis_estimate(const ChainTrace& trace,
                             const Eigen::Ref<const Eigen::VectorXd>& mixture_log_pdf,
                             const Integrand& f) {
  return weighted_series("mcis", trace, mcis_log_weights(trace, mixture_log_pdf),
                         evaluate_columns(trace.proposals, f));
}

EstimateSeries exact_mcis_estimate(const ChainTrace& trace, const Target& target,
                                   const ProposalFamily& proposal, const Integrand& f) {
  return weighted_series("mcis-exact", trace, exact_mcis_log_weights(trace, target, proposal),
                         evaluate_columns(trace.proposals, f));
}

EstimateSeries smcis_estimate(const ChainTrace& trace, const Integrand& f) {
  return weighted_series("smcis", trace, smcis_log_weights(trace),
                         evaluate_columns(trace.proposals, f));
}

EstimateSeries vanilla_estimate(const ChainTrace& trace, const Integrand& f) {
  const auto steps = static_cast<Eigen::Index>(trace.size());
  if (steps < 1) throw InputError("empty trace");
  EstimateSeries s;
  s.estimator = "vanilla";
  s.cpu_ns = trace.cpu_ns;
  s.log_weights = Eigen::VectorXd::Zero(steps);
  s.f_values.resize(steps);
  s.estimates.resize(static_cast<std::size_t>(steps));
  double sum = 0.0;
  double ref = 0.0;
  for (Eigen::Index k = 0; k < steps; ++k) {
    const bool moved = k == 0 || !(trace.states.col(k).array() == trace.states.col(k - 1).array()).all();
    s.f_values[k] = moved ? f(trace.states.col(k)) : s.f_values[k - 1];
    if (k == 0) ref = s.f_values[0];
    sum += s.f_values[k] - ref;
    s.estimates[static_cast<std::size_t>(k)] = ref + sum / static_cast<double>(k + 1);
  }
  return s;
}

LaisSample lais_sample(const ChainTrace& trace, const Target& target,
                       const ProposalFamily& proposal, std::uint64_t fresh_seed,
                       const MixtureOptions& options) {
  const auto steps = static_cast<Eigen::Index>(trace.size());
  if (steps < 1) throw InputError("empty trace");
  LaisSample out;
  out.points.resize(trace.dimension(), steps);
  out.log_rho.resize(steps);
  RngStream rng(fresh_seed, 1);
  CpuStopwatch draw_clock;
  const auto before = target.density_evaluations();
  Eigen::VectorXd center;
  for (Eigen::Index k = 0; k < steps; ++k) {
    if (k == 0 || !(trace.states.col(k).array() == trace.states.col(k - 1).array()).all()) {
      center = proposal.center(trace.states.col(k));
    }
    out.points.col(k) = proposal.propose_from_center(center, rng);
    out.log_rho[k] = target.log_density(out.points.col(k));
  }
  out.target_evaluations = target.density_evaluations() - before;
  out.draw_cpu_ns = draw_clock.elapsed_ns();
  CpuStopwatch mixture_clock;
  MixtureOptions mix = options;
  mix.control_variates = false;
  mix.store_entries = false;
  mix.column_subset.reset();
  const auto matrix = build_log_matrix(out.points, trace.states, proposal, mix);
  out.q_evaluations = matrix.q_evaluations;
  out.log_weights = out.log_rho - matrix.log_mixture;
  out.mixture_cpu_ns = mixture_clock.elapsed_ns();
  return out;
}

EstimateSeries lais_estimate(const ChainTrace& trace, const Target& target,
                             const ProposalFamily& proposal, const Integrand& f,
                             std::uint64_t fresh_seed) {
  auto sample = lais_sample(trace, target, proposal, fresh_seed);
  auto s = weighted_series("lais", trace, std::move(sample.log_weights),
                           evaluate_columns(sample.points, f));
  s.extra_target_evaluations = sample.target_evaluations;
  return s;
}

double clt_batch_variance(const EstimateSeries& series, std::size_t num_batches) {
  if (num_batches < 10) throw InputError("batch means need at least 10 batches");
  const auto n = static_cast<std::size_t>(series.f_values.size());
  if (n < num_batches) throw InputError("series is shorter than the number of batches");
  Eigen::VectorXd lw = series.log_weights.size() == static_cast<Eigen::Index>(n)
                           ? series.log_weights
                           : Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  const double mu = self_normalized_estimate(lw, series.f_values);
  const Eigen::ArrayXd w = (lw.array() - lw.maxCoeff()).exp();
  const Eigen::ArrayXd z = w * (series.f_values.array() - mu) / w.mean();

  const std::size_t batch = n / num_batches;
  const std::size_t skip = n - batch * num_batches;
  Eigen::ArrayXd means(static_cast<Eigen::Index>(num_batches));
  for (std::size_t b = 0; b < num_batches; ++b) {
    means[static_cast<Eigen::Index>(b)] =
        z.segment(static_cast<Eigen::Index>(skip + b * batch), static_cast<Eigen::Index>(batch)).mean();
  }
  const double centre = means.mean();
  const double var = (means - centre).square().sum() / static_cast<double>(num_batches - 1);
  return static_cast<double>(batch) * var;
}

}  // namespace mcis
