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

#ifndef MCIS_CHAIN_HPP
#define MCIS_CHAIN_HPP

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "mcis/error.hpp"
#include "mcis/proposal.hpp"
#include "mcis/target.hpp"

namespace mcis {

enum class AcceptMode { metropolis_hastings, always_accept };

std::string_view to_string(AcceptMode mode);
AcceptMode parse_accept_mode(std::string_view name);

/// Snapshot of the settings that produced a trace.
struct ChainSettings {
  TargetKind target_kind = TargetKind::custom;
  ProposalKind proposal_kind = ProposalKind::random_walk;
  double theta = 0.0;
  AcceptMode accept_mode = AcceptMode::metropolis_hastings;
  std::size_t steps = 0;
  std::uint64_t seed = 0;
  Eigen::VectorXd x0;
};

/// Paired record (X_k, Y_k) of an acceptance-rejection chain, k = 0..K-1.
///
/// States and proposals are stored column-wise (d x K). X_{k+1} equals Y_k bitwise when
/// accepted[k] and X_k otherwise.
struct ChainTrace {
  Eigen::MatrixXd states;     // X
  Eigen::MatrixXd proposals;  // Y
  Eigen::VectorXd log_rho_x;
  Eigen::VectorXd log_rho_y;
  Eigen::VectorXd log_q_forward;  // log q(Y_k | X_k)
  std::vector<std::uint8_t> accepted;
  std::vector<std::int64_t> cpu_ns;  // cumulative thread CPU time after step k
  std::uint64_t target_evaluations = 0;
  ChainSettings settings;

  std::size_t size() const { return accepted.size(); }
  int dimension() const { return static_cast<int>(states.rows()); }
  double acceptance_rate() const;
  std::int64_t total_cpu_ns() const { return cpu_ns.empty() ? 0 : cpu_ns.back(); }
};

/// min{1, exp[(log q(x|y) + log rho(y)) - (log q(y|x) + log rho(x))]}.
/// Throws InvalidStateError when log_rho_x is -inf.
double mh_acceptance(double log_rho_x, double log_rho_y, double log_q_xy, double log_q_yx);

/// Runs K steps of the generic acceptance-rejection chain.
///
/// Each step draws exactly d normals (the proposal) and one uniform (the accept decision) from
/// the stream (seed, stream 0), also in always-accept mode. The target is evaluated K + 1 times.
ChainTrace run_chain(const Target& target, const ProposalFamily& proposal, std::size_t steps,
                     std::uint64_t seed, const Eigen::Ref<const Eigen::VectorXd>& x0,
                     AcceptMode mode);

struct TuneResult {
  double theta = 0.0;
  double rate = 0.0;
  std::vector<TuningError::Attempt> history;
};

/// Searches theta so that pilot chains reach `desired_rate` within +-0.05.
///
/// The search doubles or halves theta until the target rate is bracketed, then bisects in
/// log(theta); it stops early once a pilot lands inside the tolerance and gives up after 30
/// pilots. All pilots share one seed. The returned theta is the one whose pilot rate was closest
/// to the desired rate.
TuneResult tune_scale(const Target& target, const ProposalFamily& proposal, double desired_rate,
                      std::size_t pilot_steps, std::uint64_t seed,
                      const Eigen::Ref<const Eigen::VectorXd>& x0);

/// CSV dump with columns k, x1..xd, y1..yd, log_rho_y, accepted, cpu_ns.
void write_trace_csv(const ChainTrace& trace, const std::filesystem::path& path);
void write_trace_csv(const ChainTrace& trace, std::ostream& out);

/// Reads a dump written by write_trace_csv. log_rho_x is reconstructed from the accept flags;
/// log_rho_x[0] and log_q_forward are not part of the dump and are set to NaN.
ChainTrace read_trace_csv(const std::filesystem::path& path);

/// Recomputes log_q_forward[k] = log q(Y_k | X_k), e.g. after read_trace_csv.
void fill_forward_densities(ChainTrace& trace, const ProposalFamily& proposal);

}  // namespace mcis

#endif  // MCIS_CHAIN_HPP
