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

#ifndef MCIS_BENCH_HPP
#define MCIS_BENCH_HPP

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mcis/chain.hpp"
#include "mcis/config.hpp"
#include "mcis/estimators.hpp"
#include "mcis/gp.hpp"
#include "mcis/proposal.hpp"
#include "mcis/target.hpp"

namespace mcis {

inline constexpr const char* kVersion = "1.0.0";

/// Per-evaluation costs in nanoseconds.
///
/// c_q is the cost of one scalar proposal density call inside the chain; c_q_mixture is the
/// amortized cost of one kernel evaluation inside the blocked mixture engine (defaults to c_q);
/// c_step is the per-step sampling overhead of the chain (drawing normals and the uniform).
struct CostModel {
  double alpha = 0.0;
  std::size_t steps = 0;  // K
  double c_f = 0.0;
  double c_q = 0.0;
  double c_rho = 0.0;
  std::optional<double> c_q_mixture;
  double c_step = 0.0;
};

/// 1 + ((1 - alpha) K c_f + alpha K^2 c_qm) / (alpha K c_f + K c_rho + 2 K c_q + K c_step).
/// Throws InputError for invalid inputs or a zero denominator.
double prolongation_factor(const CostModel& model);

/// Times 10^3 warm evaluations of each operation, median of 5 repeats.
CostModel measure_costs(const Target& target, const ProposalFamily& proposal, TestFunction f,
                        const Eigen::Ref<const Eigen::VectorXd>& x0, double alpha,
                        std::size_t steps);

struct CurvePoint {
  std::size_t step;  // 1-based step at the window center
  std::int64_t cpu_ns;
  double value;
};

/// Centered sliding mean of log10(max(|estimate - truth|, 1e-300)). Only full windows are
/// reported, so the curve has size - window + 1 points.
std::vector<CurvePoint> error_curve(const EstimateSeries& series, double truth, std::size_t window);

/// Target, proposal and starting point after tuning and preconditioning.
struct Setup {
  Target target = Target::isotropic_gaussian(1, 0.0, 1.0);
  std::optional<ProposalFamily> proposal;
  Eigen::VectorXd x0;
  AcceptMode mode = AcceptMode::metropolis_hastings;
  std::shared_ptr<const GpPosterior> gp;
  std::optional<TuneResult> tune;
  std::optional<Eigen::MatrixXd> scaling;
  std::size_t setup_target_evaluations = 0;
};

Target build_target(const ExperimentConfig& config, std::shared_ptr<const GpPosterior>* gp = nullptr);
Setup build_setup(const ExperimentConfig& config);

struct UnsupportedCell {
  std::string estimator;
  std::string test_function;
  std::string reason;
};

struct SeedRun {
  std::uint64_t seed = 0;
  double acceptance_rate = 0.0;
  std::int64_t chain_cpu_ns = 0;
  std::vector<EstimateSeries> series;
  std::map<std::string, std::uint64_t> target_evaluations;  // per estimator, chain included
  std::map<std::string, std::int64_t> total_cpu_ns;         // per estimator, chain included
  std::map<std::string, double> log_evidence;
  std::size_t mixture_runs = 0;
  std::uint64_t mixture_q_evaluations = 0;
  std::size_t cv_linear_fallback_rows = 0;
  std::optional<ChainTrace> trace;
};

struct RunOptions {
  bool write_files = true;
  bool keep_traces = false;
  std::optional<std::filesystem::path> output;
  /// Overrides config.repetitions when set.
  std::optional<std::size_t> repetitions;
};

struct ExperimentResult {
  Setup setup;
  std::map<std::string, double> truth;  // by test function name; missing when unavailable
  std::vector<SeedRun> runs;
  std::vector<UnsupportedCell> unsupported;
  std::string metadata_json;

  /// Final estimate of (estimator, test function) for every seed, in seed order.
  std::vector<double> finals(std::string_view estimator, std::string_view test_function) const;
};

/// Chain seed of repetition r.
std::uint64_t repetition_seed(const ExperimentConfig& config, std::size_t r);

/// Runs every repetition and, unless disabled, writes raw.csv, curves.csv and metadata.json.
ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

/// Raw schema: seed, step, cpu_ns, estimator, test_function, estimate, abs_error.
void write_raw_csv(const ExperimentResult& result, std::ostream& out);
/// Curve schema: estimator, test_function, step, cpu_ns, mean_log10_abs_error (seed average).
void write_curves_csv(const ExperimentResult& result, std::size_t window, std::ostream& out);

struct SweepRow {
  double theta;
  double acceptance_rate;
  std::string estimator;
  std::string test_function;
  double mean_abs_error;
};

/// Geometric theta ladder from acceptance near 1 down to config.sweep.min_rate. Rows are sorted
/// by acceptance rate (ascending) and smoothed by a centered rolling mean over rungs.
std::vector<SweepRow> scaling_sweep(const ExperimentConfig& config, const RunOptions& options = {});

/// Sweep schema: theta, acceptance_rate, estimator, test_function, mean_abs_error.
void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out);

}  // namespace mcis

#endif  // MCIS_BENCH_HPP
