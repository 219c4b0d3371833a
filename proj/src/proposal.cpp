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

#include "mcis/proposal.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <string>

#include "mcis/error.hpp"

namespace mcis {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;

void check_theta(double theta) {
  if (!(theta > 0.0) || !std::isfinite(theta)) throw InputError("theta must be positive and finite");
}

Eigen::MatrixXd checked_cholesky(const Eigen::MatrixXd& s, int d) {
  if (s.rows() != d || s.cols() != d) throw InputError("scaling matrix has the wrong shape");
  if (!s.isApprox(s.transpose(), 1e-12)) throw InputError("scaling matrix must be symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(s);
  if (llt.info() != Eigen::Success) throw InputError("scaling matrix must be positive definite");
  return llt.matrixL();
}

}  // namespace

std::string_view to_string(ProposalKind kind) {
  switch (kind) {
    case ProposalKind::random_walk:
      return "random-walk";
    case ProposalKind::langevin:
      return "langevin";
    case ProposalKind::independent:
      return "independent";
  }
  return "unknown";
}

ProposalKind parse_proposal_kind(std::string_view name) {
  for (auto kind : {ProposalKind::random_walk, ProposalKind::langevin, ProposalKind::independent}) {
    if (to_string(kind) == name) return kind;
  }
  throw InputError("unknown proposal kind '" + std::string(name) + "'");
}

ProposalFamily ProposalFamily::random_walk(int dimension, double theta,
                                           std::optional<Eigen::MatrixXd> scaling) {
  if (dimension < 1) throw InputError("proposal dimension must be at least 1");
  ProposalFamily q;
  q.kind_ = ProposalKind::random_walk;
  q.dimension_ = dimension;
  q.theta_ = theta;
  q.scaling_ = std::move(scaling);
  q.finalize();
  return q;
}

ProposalFamily ProposalFamily::langevin(Target target, double theta) {
  ProposalFamily q;
  q.kind_ = ProposalKind::langevin;
  q.dimension_ = target.dimension();
  q.theta_ = theta;
  q.target_ = std::move(target);
  q.finalize();
  return q;
}

ProposalFamily ProposalFamily::independent(Eigen::VectorXd mean, double theta,
                                           std::optional<Eigen::MatrixXd> scaling) {
  if (mean.size() < 1) throw InputError("proposal dimension must be at least 1");
  if (!mean.allFinite()) throw InputError("independent proposal mean must be finite");
  ProposalFamily q;
  q.kind_ = ProposalKind::independent;
  q.dimension_ = static_cast<int>(mean.size());
  q.theta_ = theta;
  q.fixed_mean_ = std::move(mean);
  q.scaling_ = std::move(scaling);
  q.finalize();
  return q;
}

ProposalFamily ProposalFamily::with_theta(double theta) const {
  ProposalFamily q = *this;
  q.theta_ = theta;
  q.finalize();
  return q;
}

void ProposalFamily::finalize() {
  check_theta(theta_);
  const int d = dimension_;
  if (kind_ == ProposalKind::langevin) {
    scaling_.reset();
    noise_sd_ = std::sqrt(2.0 * theta_);
  } else {
    noise_sd_ = theta_;
  }
  if (scaling_) {
    chol_ = theta_ * checked_cholesky(*scaling_, d);
    log_norm_ = -d * kHalfLog2Pi - chol_.diagonal().array().log().sum();
  } else {
    chol_ = noise_sd_ * Eigen::MatrixXd::Identity(d, d);
    // Same operation order as the Gaussian target, so q and rho agree bitwise when they coincide.
    log_norm_ = -Eigen::VectorXd::Constant(d, noise_sd_).array().log().sum() - d * kHalfLog2Pi;
  }
}

void ProposalFamily::check(const Eigen::Ref<const Eigen::VectorXd>& v) const {
  if (v.size() != dimension_) {
    throw InputError("vector has dimension " + std::to_string(v.size()) + ", proposal expects " +
                     std::to_string(dimension_));
  }
  if (!v.allFinite()) throw InputError("vector has a non-finite coordinate");
}

Eigen::MatrixXd ProposalFamily::covariance() const { return chol_ * chol_.transpose(); }

Eigen::VectorXd ProposalFamily::center(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  check(x);
  switch (kind_) {
    case ProposalKind::random_walk:
      return x;
    case ProposalKind::langevin:
      return x + theta_ * target_->grad_log_density(x);
    case ProposalKind::independent:
      return fixed_mean_;
  }
  return x;
}

Eigen::VectorXd ProposalFamily::whiten(const Eigen::Ref<const Eigen::VectorXd>& v) const {
  if (isotropic()) return v / noise_sd_;
  return chol_.triangularView<Eigen::Lower>().solve(v);
}

double ProposalFamily::log_pdf_from_center(const Eigen::Ref<const Eigen::VectorXd>& y,
                                           const Eigen::Ref<const Eigen::VectorXd>& center) const {
  check(y);
  if (isotropic()) {
    const double inv_sd = 1.0 / noise_sd_;
    return log_norm_ - 0.5 * ((y - center) * inv_sd).squaredNorm();
  }
  return log_norm_ - 0.5 * whiten(y - center).squaredNorm();
}

double ProposalFamily::log_pdf(const Eigen::Ref<const Eigen::VectorXd>& y,
                               const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return log_pdf_from_center(y, center(x));
}

Eigen::VectorXd ProposalFamily::propose_from_center(const Eigen::Ref<const Eigen::VectorXd>& center,
                                                    RngStream& rng) const {
  Eigen::VectorXd noise(dimension_);
  for (int i = 0; i < dimension_; ++i) noise[i] = rng.normal();
  return displace(center, noise);
}

Eigen::VectorXd ProposalFamily::displace(const Eigen::Ref<const Eigen::VectorXd>& center,
                                         const Eigen::Ref<const Eigen::VectorXd>& noise) const {
  if (isotropic()) return center + noise_sd_ * noise;
  return center + chol_.triangularView<Eigen::Lower>() * noise;
}

Eigen::VectorXd ProposalFamily::propose(const Eigen::Ref<const Eigen::VectorXd>& x,
                                        RngStream& rng) const {
  return propose_from_center(center(x), rng);
}

}  // namespace mcis
