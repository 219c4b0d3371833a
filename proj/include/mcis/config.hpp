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

#ifndef MCIS_CONFIG_HPP
#define MCIS_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mcis/chain.hpp"
#include "mcis/estimators.hpp"
#include "mcis/proposal.hpp"
#include "mcis/test_function.hpp"

namespace mcis {

struct ComponentConfig {
  double weight = 1.0;
  std::vector<double> mean;
  std::vector<double> stddev;
};

struct TargetConfig {
  std::string kind = "gaussian";  // gaussian | mixture | gp
  int dimension = 1;
  std::vector<double> mean{0.0};
  std::vector<double> stddev{1.0};
  std::vector<ComponentConfig> components;
  double log_scale = 0.0;
  int cost_multiplier = 1;
  // gp
  std::filesystem::path data;
  std::vector<int> predictors{2, 3, 4, 5};
  int response = 6;
  std::size_t max_rows = 200;
  bool standardize_response = true;
};

struct TuneConfig {
  double rate = 0.234;
  std::size_t pilot_steps = 2000;
};

/// Preliminary random-walk run whose sample covariance becomes the scaling matrix S.
struct PreconditionConfig {
  std::size_t steps = 5000;
  double rate = 0.234;
};

struct ProposalConfig {
  ProposalKind kind = ProposalKind::random_walk;
  double theta = 1.0;
  std::optional<TuneConfig> tune;
  std::optional<PreconditionConfig> precondition;
  std::vector<double> mean;  // independent kind; defaults to the target mean
};

struct ChainConfig {
  AcceptMode accept = AcceptMode::metropolis_hastings;
  std::size_t steps = 10000;
  std::vector<double> x0;  // defaults per target kind
  std::size_t burn_in = 0;
};

struct TruthConfig {
  std::string kind = "analytic";  // analytic | reference | values
  std::size_t reference_chains = 3;
  std::size_t reference_steps = 100000;
  std::map<std::string, double> values;
};

struct MixtureConfig {
  std::size_t block_rows = 256;
  unsigned threads = 1;
  std::optional<double> cv_coefficient;
};

enum class TimingMode { cpu, model };

/// Nominal per-operation costs for TimingMode::model, in nanoseconds.
struct TimingConfig {
  TimingMode mode = TimingMode::cpu;
  double c_rho = 100.0;
  double c_q = 20.0;
  double c_q_mixture = 2.0;
  double c_f = 10.0;
  double c_step = 50.0;
};

struct SweepConfig {
  double factor = 1.3;
  double min_rate = 0.02;
  std::optional<double> start_theta;
  double start_rate = 0.99;
  std::size_t rolling = 3;
  std::size_t max_rungs = 80;
};

struct ExperimentConfig {
  std::string name = "experiment";
  TargetConfig target;
  ProposalConfig proposal;
  ChainConfig chain;
  std::size_t repetitions = 20;
  std::uint64_t seed = 1;
  std::vector<EstimatorKind> estimators{EstimatorKind::vanilla, EstimatorKind::mcis};
  std::vector<TestFunction> test_functions{TestFunction::identity};
  TruthConfig truth;
  std::size_t window = 50;
  TimingConfig timing;
  MixtureConfig mixture;
  SweepConfig sweep;
  std::filesystem::path output = "out";
  /// Directory relative paths are resolved against.
  std::filesystem::path base_dir = ".";
  std::string source_text;
};

/// Parses a YAML experiment description. Unknown keys are rejected.
/// Throws ParseError for malformed YAML and InputError for invalid values.
ExperimentConfig parse_config(const std::string& text,
                              const std::filesystem::path& base_dir = ".");
ExperimentConfig load_config(const std::filesystem::path& path);

/// Resolves a data path: as given if absolute or existing relative to base_dir, otherwise
/// relative to the bundled data directory.
std::filesystem::path resolve_data_path(const ExperimentConfig& config,
                                        const std::filesystem::path& path);

}  // namespace mcis

#endif  // MCIS_CONFIG_HPP
