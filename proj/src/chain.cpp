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

#include "mcis/chain.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>

#include "mcis/cpu_time.hpp"
#include "mcis/csv.hpp"
#include "mcis/rng.hpp"

namespace mcis {

std::string_view to_string(AcceptMode mode) {
  switch (mode) {
    case AcceptMode::metropolis_hastings:
      return "metropolis-hastings";
    case AcceptMode::always_accept:
      return "always-accept";
  }
  return "unknown";
}

AcceptMode parse_accept_mode(std::string_view name) {
  for (auto mode : {AcceptMode::metropolis_hastings, AcceptMode::always_accept}) {
    if (to_string(mode) == name) return mode;
  }
  throw InputError("unknown accept mode '" + std::string(name) + "'");
}

double ChainTrace::acceptance_rate() const {
  if (accepted.empty()) return 0.0;
  std::size_t n = 0;
  for (auto a : accepted) n += a;
  return static_cast<double>(n) / static_cast<double>(accepted.size());
}

double mh_acceptance(double log_rho_x, double log_rho_y, double log_q_xy, double log_q_yx) {
  if (log_rho_x == -std::numeric_limits<double>::infinity()) {
    throw InvalidStateError("current state has zero target density");
  }
  if (std::isnan(log_rho_y) || log_rho_y == -std::numeric_limits<double>::infinity()) return 0.0;
  const double log_ratio = (log_q_xy + log_rho_y) - (log_q_yx + log_rho_x);
  if (std::isnan(log_ratio)) return 0.0;
  if (log_ratio >= 0.0) return 1.0;
  return std::clamp(std::exp(log_ratio), 0.0, 1.0);
}

ChainTrace run_chain(const Target& target, const ProposalFamily& proposal, std::size_t steps,
                     std::uint64_t seed, const Eigen::Ref<const Eigen::VectorXd>& x0,
                     AcceptMode mode) {
  if (steps < 1) throw InputError("a chain needs at least one step");
  const int d = target.dimension();
  if (proposal.dimension() != d) throw InputError("proposal and target dimensions differ");
  if (x0.size() != d || !x0.allFinite()) throw InputError("x0 must be a finite length-d vector");

  const auto evals_before = target.density_evaluations();
  ChainTrace trace;
  trace.settings = {target.kind(), proposal.kind(), proposal.theta(), mode, steps, seed, x0};
  trace.states.resize(d, static_cast<Eigen::Index>(steps));
  trace.proposals.resize(d, static_cast<Eigen::Index>(steps));
  trace.log_rho_x.resize(static_cast<Eigen::Index>(steps));
  trace.log_rho_y.resize(static_cast<Eigen::Index>(steps));
  trace.log_q_forward.resize(static_cast<Eigen::Index>(steps));
  trace.accepted.resize(steps);
  trace.cpu_ns.resize(steps);

  StepClock clock;
  RngStream rng(seed, 0);
  Eigen::VectorXd x = x0;
  double log_rho_x = target.log_density(x);
  if (!std::isfinite(log_rho_x)) {
    throw InitializationError("initial state has a non-finite log density");
  }
  Eigen::VectorXd center_x = proposal.center(x);

  for (std::size_t k = 0; k < steps; ++k) {
    const auto col = static_cast<Eigen::Index>(k);
    trace.states.col(col) = x;
    trace.log_rho_x[col] = log_rho_x;

    Eigen::VectorXd y = proposal.propose_from_center(center_x, rng);
    const double log_rho_y = target.log_density(y);
    const double log_q_yx = proposal.log_pdf_from_center(y, center_x);

    Eigen::VectorXd center_y;
    bool accept = true;
    if (mode == AcceptMode::metropolis_hastings) {
      double alpha = 0.0;
      if (std::isfinite(log_rho_y)) {
        center_y = proposal.center(y);
        const double log_q_xy = proposal.log_pdf_from_center(x, center_y);
        alpha = mh_acceptance(log_rho_x, log_rho_y, log_q_xy, log_q_yx);
      }
      accept = rng.uniform() < alpha;
    } else {
      rng.uniform();  // keeps the per-step draw count fixed
    }

    trace.proposals.col(col) = y;
    trace.log_rho_y[col] = log_rho_y;
    trace.log_q_forward[col] = log_q_yx;
    trace.accepted[k] = accept ? 1 : 0;

    if (accept) {
      x = y;
      log_rho_x = log_rho_y;
      center_x = mode == AcceptMode::metropolis_hastings ? std::move(center_y) : proposal.center(x);
    }
    trace.cpu_ns[k] = clock.now();
  }
  clock.finish(trace.cpu_ns);
  trace.target_evaluations = target.density_evaluations() - evals_before;
  return trace;
}

TuneResult tune_scale(const Target& target, const ProposalFamily& proposal, double desired_rate,
                      std::size_t pilot_steps, std::uint64_t seed,
                      const Eigen::Ref<const Eigen::VectorXd>& x0) {
  if (!(desired_rate > 0.0 && desired_rate < 1.0)) {
    throw InputError("desired acceptance rate must lie in (0, 1)");
  }
  if (pilot_steps < 100) throw InputError("pilot chains need at least 100 steps");
  constexpr int kMaxPilots = 30;
  constexpr double kTolerance = 0.05;

  TuneResult result;
  std::optional<double> too_small;  // largest theta seen with rate above target
  std::optional<double> too_large;  // smallest theta seen with rate below target
  double theta = proposal.theta();
  double best_gap = std::numeric_limits<double>::infinity();

  for (int pilot = 0; pilot < kMaxPilots; ++pilot) {
    const auto trace = run_chain(target, proposal.with_theta(theta), pilot_steps, seed, x0,
                                 AcceptMode::metropolis_hastings);
    const double rate = trace.acceptance_rate();
    result.history.push_back({theta, rate});
    const double gap = std::abs(rate - desired_rate);
    if (gap < best_gap) {
      best_gap = gap;
      result.theta = theta;
      result.rate = rate;
    }
    if (gap <= kTolerance) return result;

    if (rate > desired_rate) {
      too_small = too_small ? std::max(*too_small, theta) : theta;
    } else {
      too_large = too_large ? std::min(*too_large, theta) : theta;
    }
    if (too_small && too_large) {
      theta = std::sqrt(*too_small * *too_large);
    } else if (too_small) {
      theta *= 2.0;
    } else {
      theta *= 0.5;
    }
  }
  if (!(too_small && too_large)) {
    throw TuningError("could not bracket the desired acceptance rate", result.history);
  }
  return result;
}

void write_trace_csv(const ChainTrace& trace, std::ostream& out) {
  const int d = trace.dimension();
  std::string buf;
  {
    CsvRow row(buf);
    row << "k";
    for (int i = 1; i <= d; ++i) row << "x" + std::to_string(i);
    for (int i = 1; i <= d; ++i) row << "y" + std::to_string(i);
    row << "log_rho_y" << "accepted" << "cpu_ns";
  }
  for (std::size_t k = 0; k < trace.size(); ++k) {
    const auto c = static_cast<Eigen::Index>(k);
    CsvRow row(buf);
    row << static_cast<std::uint64_t>(k);
    for (int i = 0; i < d; ++i) row << trace.states(i, c);
    for (int i = 0; i < d; ++i) row << trace.proposals(i, c);
    row << trace.log_rho_y[c] << static_cast<std::int64_t>(trace.accepted[k]) << trace.cpu_ns[k];
    if (buf.size() > (1u << 20)) {
      out << buf;
      buf.clear();
    }
  }
  out << buf;
}

void write_trace_csv(const ChainTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write trace to '" + path.string() + "'");
  write_trace_csv(trace, out);
  if (!out) throw IoError("failed writing trace to '" + path.string() + "'");
}

ChainTrace read_trace_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open trace '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty trace file", 1, 1);
  const auto header = split_csv_line(line);
  if (header.size() < 6 || (header.size() - 4) % 2 != 0 || header.front() != "k") {
    throw ParseError("unexpected trace header", 1, 1);
  }
  const auto d = static_cast<Eigen::Index>((header.size() - 4) / 2);

  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw ParseError("wrong number of fields", line_no, fields.size());
    }
    std::vector<double> values(fields.size());
    for (std::size_t c = 0; c < fields.size(); ++c) {
      values[c] = parse_double(fields[c], line_no, c + 1);
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw ParseError("trace has no rows", line_no, 1);

  const auto steps = static_cast<Eigen::Index>(rows.size());
  const double nan = std::numeric_limits<double>::quiet_NaN();
  ChainTrace trace;
  trace.states.resize(d, steps);
  trace.proposals.resize(d, steps);
  trace.log_rho_x = Eigen::VectorXd::Constant(steps, nan);
  trace.log_rho_y.resize(steps);
  trace.log_q_forward = Eigen::VectorXd::Constant(steps, nan);
  trace.accepted.resize(rows.size());
  trace.cpu_ns.resize(rows.size());
  for (Eigen::Index k = 0; k < steps; ++k) {
    const auto& r = rows[static_cast<std::size_t>(k)];
    for (Eigen::Index i = 0; i < d; ++i) {
      trace.states(i, k) = r[1 + i];
      trace.proposals(i, k) = r[1 + d + i];
    }
    trace.log_rho_y[k] = r[1 + 2 * d];
    trace.accepted[k] = r[2 + 2 * d] != 0.0 ? 1 : 0;
    trace.cpu_ns[k] = static_cast<std::int64_t>(r[3 + 2 * d]);
    if (k > 0) {
      trace.log_rho_x[k] = trace.accepted[k - 1] ? trace.log_rho_y[k - 1] : trace.log_rho_x[k - 1];
    }
  }
  trace.settings.steps = rows.size();
  trace.settings.x0 = trace.states.col(0);
  return trace;
}

void fill_forward_densities(ChainTrace& trace, const ProposalFamily& proposal) {
  const auto steps = static_cast<Eigen::Index>(trace.size());
  trace.log_q_forward.resize(steps);
  for (Eigen::Index k = 0; k < steps; ++k) {
    trace.log_q_forward[k] = proposal.log_pdf(trace.proposals.col(k), trace.states.col(k));
  }
}

}  // namespace mcis
