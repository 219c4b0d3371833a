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

#ifndef MCIS_MIXTURE_HPP
#define MCIS_MIXTURE_HPP

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "mcis/chain.hpp"
#include "mcis/proposal.hpp"
#include "mcis/target.hpp"

namespace mcis {

enum class CvMode { linear, log };

std::string_view to_string(CvMode mode);

struct MixtureOptions {
  /// Columns (chain states) entering the mixture, in chain order. Default: all.
  std::optional<std::vector<std::size_t>> column_subset;
  /// Keep the full rows x columns table of log q(Y_i | X_j). Memory grows as K^2.
  bool store_entries = false;
  std::size_t block_rows = 256;
  /// Also compute both control-variate adjusted mixtures.
  bool control_variates = false;
  /// Overrides the per-row optimal coefficient.
  std::optional<double> fixed_cv_coefficient;
  unsigned threads = 1;
};

/// Row reductions of the table L[i][j] = log q(Y_i | X_j).
///
/// Consecutive columns whose proposal centers are bitwise equal (rejections) share one kernel
/// evaluation and enter with their multiplicity, so the table is never materialized unless
/// requested.
struct ProposalLogMatrix {
  std::size_t rows = 0;
  std::size_t columns = 0;
  /// Distinct consecutive centers among the columns.
  std::size_t runs = 0;
  /// Kernel evaluations actually performed (rows * runs).
  std::uint64_t q_evaluations = 0;
  /// Size of the conceptual table (rows * columns).
  std::uint64_t nominal_q_evaluations = 0;

  /// log rho_hat_A(Y_i) = logsumexp_j L[i][j] - log(columns).
  Eigen::VectorXd log_mixture;
  /// Stored when MixtureOptions::store_entries is set.
  Eigen::MatrixXd entries;

  bool has_control_variates = false;
  Eigen::VectorXd cv_coefficient_linear;
  Eigen::VectorXd cv_coefficient_log;
  Eigen::VectorXd cv_log_mixture_linear;
  Eigen::VectorXd cv_log_mixture_log;
  /// Rows where the linear adjustment was nonpositive and the plain mixture was kept.
  std::vector<std::uint8_t> cv_linear_fallback;
  std::size_t cv_linear_fallback_rows = 0;
};

/// Table over the trace's proposals (rows) and states (columns).
ProposalLogMatrix build_log_matrix(const ChainTrace& trace, const ProposalFamily& proposal,
                                   const MixtureOptions& options = {});

/// Table over arbitrary probe points (columns of `probes`) and states.
ProposalLogMatrix build_log_matrix(const Eigen::Ref<const Eigen::MatrixXd>& probes,
                                   const Eigen::Ref<const Eigen::MatrixXd>& states,
                                   const ProposalFamily& proposal,
                                   const MixtureOptions& options = {});

/// The mixture values of a built matrix.
const Eigen::VectorXd& mixture_log_pdf(const ProposalLogMatrix& matrix);

/// The control-variate adjusted mixture values. Throws InputError if the matrix was built
/// without control variates.
const Eigen::VectorXd& cv_adjusted_mixture(const ProposalLogMatrix& matrix, CvMode mode);

/// c* = sum_k (q_k^2 - q_k q_{k+1}) / sum_k (q_k - q_{k+1})^2 over one row of the table given
/// as log values in chain order; q_k is exp(L) in linear mode (rescaled by the row max, which
/// leaves c* unchanged) and L itself in log mode. Returns 0 if the denominator is below 1e-300.
double cv_coefficient(std::span<const double> log_row, CvMode mode);

/// Closed-form marginal density of the proposals, rho_A.
///
/// Supported combinations:
///   independent proposal (any target, any mode): rho_A = q;
///   Gaussian or mixture target, random walk, Metropolis-Hastings: per-component convolution
///     N(m_c, diag(s_c^2) + theta^2 S);
///   Gaussian target, Langevin, Metropolis-Hastings: per coordinate N(m, a^2 s^2 + 2 theta)
///     with a = 1 - theta / s^2;
///   Gaussian target, Langevin, always-accept: the stationary law of the discretized
///     Ornstein-Uhlenbeck recursion, per coordinate N(m, 2 theta / (1 - a^2)).
/// Everything else throws UnsupportedOracleError.
class ExactMarginal {
 public:
  ExactMarginal(const Target& target, const ProposalFamily& proposal, AcceptMode mode);
  double log_pdf(const Eigen::Ref<const Eigen::VectorXd>& y) const;

 private:
  struct Component {
    double log_weight;
    Eigen::VectorXd mean;
    Eigen::MatrixXd chol;  // lower factor of the covariance
    double log_norm;
  };
  std::optional<ProposalFamily> independent_;
  std::vector<Component> components_;
};

double exact_rho_a_log_pdf(const Target& target, const ProposalFamily& proposal, AcceptMode mode,
                           const Eigen::Ref<const Eigen::VectorXd>& y);

}  // namespace mcis

#endif  // MCIS_MIXTURE_HPP
