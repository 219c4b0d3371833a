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

#ifndef MCIS_ESTIMATORS_HPP
#define MCIS_ESTIMATORS_HPP

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mcis/chain.hpp"
#include "mcis/mixture.hpp"
#include "mcis/proposal.hpp"
#include "mcis/target.hpp"
#include "mcis/test_function.hpp"

namespace mcis {

enum class EstimatorKind { vanilla, mcis, mcis_exact, smcis, lais, mcis_cv_linear, mcis_cv_log };

inline constexpr std::array<EstimatorKind, 7> kAllEstimators = {
    EstimatorKind::vanilla,        EstimatorKind::mcis, EstimatorKind::mcis_exact,
    EstimatorKind::smcis,          EstimatorKind::lais, EstimatorKind::mcis_cv_linear,
    EstimatorKind::mcis_cv_log};

std::string_view to_string(EstimatorKind kind);
EstimatorKind parse_estimator_kind(std::string_view name);

/// Running values of one estimator for one integrand.
struct EstimateSeries {
  std::string estimator;
  std::string test_function;
  /// estimates[k] uses the first k + 1 samples.
  std::vector<double> estimates;
  std::vector<std::int64_t> cpu_ns;
  /// Importance weights (log domain) and integrand values behind the estimate. Vanilla series
  /// carry zero weights.
  Eigen::VectorXd log_weights;
  Eigen::VectorXd f_values;
  std::optional<double> log_evidence;
  /// Target evaluations spent beyond the chain's own.
  std::uint64_t extra_target_evaluations = 0;

  std::size_t size() const { return estimates.size(); }
  double final_estimate() const { return estimates.back(); }
};

/// sum_k w_k f_k / sum_k w_k with weights shifted by their maximum.
/// Throws EstimatorError if every weight is zero and InputError on a length mismatch.
double self_normalized_estimate(const Eigen::Ref<const Eigen::VectorXd>& log_weights,
                                const Eigen::Ref<const Eigen::VectorXd>& f_values);

/// Prefix estimates for k = 1..K. The shift is the running maximum, applied lazily when a new
/// maximum appears. Entries before the first nonzero weight are NaN.
std::vector<double> running_self_normalized(const Eigen::Ref<const Eigen::VectorXd>& log_weights,
                                            const Eigen::Ref<const Eigen::VectorXd>& f_values);

/// log((1/K) sum_k w_k).
double evidence_estimate(const Eigen::Ref<const Eigen::VectorXd>& log_weights);

/// f evaluated at each column.
Eigen::VectorXd evaluate_columns(const Eigen::Ref<const Eigen::MatrixXd>& points, const Integrand& f);

/// Series from precomputed weights; cpu_ns is copied from the trace.
EstimateSeries weighted_series(std::string_view name, const ChainTrace& trace,
                               Eigen::VectorXd log_weights, Eigen::VectorXd f_values);

/// log w_k = log rho(Y_k) - log rho_hat_A(Y_k).
Eigen::VectorXd mcis_log_weights(const ChainTrace& trace,
                                 const Eigen::Ref<const Eigen::VectorXd>& mixture_log_pdf);
/// log w_k = log rho(Y_k) - log rho_A(Y_k) from the closed-form marginal.
Eigen::VectorXd exact_mcis_log_weights(const ChainTrace& trace, const Target& target,
                                       const ProposalFamily& proposal);
/// log w_k = log rho(Y_k) - log q(Y_k | X_k).
Eigen::VectorXd smcis_log_weights(const ChainTrace& trace);

EstimateSeries mcis_estimate(const ChainTrace& trace,
                             const Eigen::Ref<const Eigen::VectorXd>& mixture_log_pdf,
                             const Integrand& f);
EstimateSeries exact_mcis_estimate(const ChainTrace& trace, const Target& target,
                                   const ProposalFamily& proposal, const Integrand& f);
EstimateSeries smcis_estimate(const ChainTrace& trace, const Integrand& f);
EstimateSeries vanilla_estimate(const ChainTrace& trace, const Integrand& f);

/// Fresh points Z_k ~ q(.|X_k) weighted against the mixture over all chain states.
struct LaisSample {
  Eigen::MatrixXd points;
  Eigen::VectorXd log_rho;
  Eigen::VectorXd log_weights;
  std::uint64_t target_evaluations = 0;
  std::uint64_t q_evaluations = 0;
  std::int64_t draw_cpu_ns = 0;     // sampling and target evaluations
  std::int64_t mixture_cpu_ns = 0;  // weights against the mixture
};

/// Draws from stream (fresh_seed, 1). Performs exactly K target evaluations.
LaisSample lais_sample(const ChainTrace& trace, const Target& target,
                       const ProposalFamily& proposal, std::uint64_t fresh_seed,
                       const MixtureOptions& options = {});

EstimateSeries lais_estimate(const ChainTrace& trace, const Target& target,
                             const ProposalFamily& proposal, const Integrand& f,
                             std::uint64_t fresh_seed);

/// Batch-means estimate of the asymptotic variance of sqrt(K) (estimate - truth).
///
/// The self-normalized estimator is linearized around its final value,
/// z_k = w_k (f_k - mu_hat) / mean(w), and the series z is cut into num_batches equal batches
/// (a leading remainder is dropped). Returns batch_size * sample variance of the batch means.
/// Throws InputError if num_batches < 10 or the series is shorter than num_batches.
double clt_batch_variance(const EstimateSeries& series, std::size_t num_batches);

}  // namespace mcis

#endif  // MCIS_ESTIMATORS_HPP
