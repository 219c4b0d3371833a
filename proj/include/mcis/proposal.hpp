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

#ifndef MCIS_PROPOSAL_HPP
#define MCIS_PROPOSAL_HPP

#include <Eigen/Core>

#include <memory>
#include <optional>
#include <string_view>

#include "mcis/rng.hpp"
#include "mcis/target.hpp"

namespace mcis {

enum class ProposalKind { random_walk, langevin, independent };

std::string_view to_string(ProposalKind kind);
ProposalKind parse_proposal_kind(std::string_view name);

/// Gaussian conditional proposal q(y|x) = N(y; center(x), Sigma).
///
///   random-walk:  center(x) = x,                        Sigma = theta^2 S
///   langevin:     center(x) = x + theta grad log rho(x), Sigma = 2 theta I
///   independent:  center(x) = m,                        Sigma = theta^2 S
///
/// S defaults to the identity. theta is a standard-deviation multiplier for the random-walk and
/// independent kinds and a time step for the Langevin kind.
class ProposalFamily {
 public:
  static ProposalFamily random_walk(int dimension, double theta,
                                    std::optional<Eigen::MatrixXd> scaling = std::nullopt);
  static ProposalFamily langevin(Target target, double theta);
  static ProposalFamily independent(Eigen::VectorXd mean, double theta,
                                    std::optional<Eigen::MatrixXd> scaling = std::nullopt);

  /// Same family with a different theta.
  ProposalFamily with_theta(double theta) const;

  ProposalKind kind() const { return kind_; }
  double theta() const { return theta_; }
  int dimension() const { return dimension_; }
  bool has_scaling() const { return scaling_.has_value(); }
  const std::optional<Eigen::MatrixXd>& scaling() const { return scaling_; }
  const Target* target() const { return target_ ? &*target_ : nullptr; }
  const Eigen::VectorXd& fixed_mean() const { return fixed_mean_; }

  /// Mean of q(.|x). For the Langevin kind this costs one gradient evaluation.
  Eigen::VectorXd center(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  /// log q(y|x).
  double log_pdf(const Eigen::Ref<const Eigen::VectorXd>& y,
                 const Eigen::Ref<const Eigen::VectorXd>& x) const;

  /// log N(y; center, Sigma) with a precomputed center.
  double log_pdf_from_center(const Eigen::Ref<const Eigen::VectorXd>& y,
                             const Eigen::Ref<const Eigen::VectorXd>& center) const;

  /// Y ~ q(.|x). Consumes exactly dimension() normals from the stream.
  Eigen::VectorXd propose(const Eigen::Ref<const Eigen::VectorXd>& x, RngStream& rng) const;
  Eigen::VectorXd propose_from_center(const Eigen::Ref<const Eigen::VectorXd>& center,
                                      RngStream& rng) const;

  /// center + L * noise, the deterministic part of propose().
  Eigen::VectorXd displace(const Eigen::Ref<const Eigen::VectorXd>& center,
                           const Eigen::Ref<const Eigen::VectorXd>& noise) const;

  /// Covariance Sigma and its lower Cholesky factor.
  Eigen::MatrixXd covariance() const;
  const Eigen::MatrixXd& cholesky_factor() const { return chol_; }

  /// Isotropic kinds: Sigma = noise_stddev()^2 I.
  bool isotropic() const { return !scaling_.has_value(); }
  double noise_stddev() const { return noise_sd_; }

  /// -d/2 log(2 pi) - log det(L).
  double log_normalizer() const { return log_norm_; }

  /// L^-1 v (or v / noise_stddev() when isotropic).
  Eigen::VectorXd whiten(const Eigen::Ref<const Eigen::VectorXd>& v) const;

 private:
  ProposalFamily() = default;
  void finalize();
  void check(const Eigen::Ref<const Eigen::VectorXd>& v) const;

  ProposalKind kind_ = ProposalKind::random_walk;
  double theta_ = 1.0;
  int dimension_ = 0;
  std::optional<Eigen::MatrixXd> scaling_;
  std::optional<Target> target_;
  Eigen::VectorXd fixed_mean_;

  Eigen::MatrixXd chol_;
  double noise_sd_ = 1.0;
  double log_norm_ = 0.0;
};

}  // namespace mcis

#endif  // MCIS_PROPOSAL_HPP
