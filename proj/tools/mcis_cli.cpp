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

// Command line front end: run, sweep, bench-costs, dump-trace.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "mcis/bench.hpp"
#include "mcis/chain.hpp"
#include "mcis/config.hpp"
#include "mcis/error.hpp"

namespace {

struct Common {
  std::string config;
  std::string output;
  std::size_t repetitions = 0;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("config", c.config, "Experiment YAML file")->required()->check(CLI::ExistingFile);
  cmd->add_option("-o,--output", c.output, "Output directory (overrides the config)");
  cmd->add_option("-r,--repetitions", c.repetitions, "Number of seeds (overrides the config)");
}

mcis::RunOptions options_from(const Common& c) {
  mcis::RunOptions opts;
  if (!c.output.empty()) opts.output = c.output;
  if (c.repetitions > 0) opts.repetitions = c.repetitions;
  return opts;
}

std::filesystem::path resolved_output(const mcis::ExperimentConfig& cfg, const Common& c) {
  if (!c.output.empty()) return c.output;
  return cfg.output.is_relative() ? cfg.base_dir / cfg.output : cfg.output;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Markov chain importance sampling benchmark harness"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(mcis::kVersion));

  Common run_args, sweep_args, cost_args, dump_args;
  auto* run = app.add_subcommand("run", "Run repetitions and write raw.csv, curves.csv, metadata.json");
  add_common(run, run_args);
  auto* sweep = app.add_subcommand("sweep", "Acceptance-rate sweep, writes sweep.csv");
  add_common(sweep, sweep_args);
  auto* costs = app.add_subcommand("bench-costs", "Measure c_f, c_q, c_rho and the predicted prolongation");
  add_common(costs, cost_args);
  auto* dump = app.add_subcommand("dump-trace", "Run one chain and write trace.csv");
  add_common(dump, dump_args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      const auto cfg = mcis::load_config(run_args.config);
      const auto result = mcis::run_experiment(cfg, options_from(run_args));
      std::size_t rows = 0;
      for (const auto& r : result.runs) {
        for (const auto& s : r.series) rows += s.size();
      }
      std::cout << "wrote " << rows << " estimate rows for " << result.runs.size() << " seeds to "
                << resolved_output(cfg, run_args).string() << "\n";
      for (const auto& cell : result.unsupported) {
        std::cout << "unsupported: " << cell.estimator << " / " << cell.test_function << ": "
                  << cell.reason << "\n";
      }
    } else if (sweep->parsed()) {
      const auto cfg = mcis::load_config(sweep_args.config);
      const auto rows = mcis::scaling_sweep(cfg, options_from(sweep_args));
      std::cout << "wrote " << rows.size() << " sweep rows to "
                << resolved_output(cfg, sweep_args).string() << "\n";
    } else if (costs->parsed()) {
      const auto cfg = mcis::load_config(cost_args.config);
      const auto setup = mcis::build_setup(cfg);
      const auto pilot = mcis::run_chain(setup.target, *setup.proposal, cfg.chain.steps, cfg.seed,
                                         setup.x0, setup.mode);
      const auto model =
          mcis::measure_costs(setup.target, *setup.proposal, cfg.test_functions.front(), setup.x0,
                              pilot.acceptance_rate(), cfg.chain.steps);
      std::printf("alpha        %.4f\n", model.alpha);
      std::printf("K            %zu\n", model.steps);
      std::printf("c_f          %.2f ns\n", model.c_f);
      std::printf("c_q          %.2f ns\n", model.c_q);
      std::printf("c_q_mixture  %.3f ns\n", *model.c_q_mixture);
      std::printf("c_rho        %.2f ns\n", model.c_rho);
      std::printf("c_step       %.2f ns\n", model.c_step);
      std::printf("prolongation %.4f\n", mcis::prolongation_factor(model));
    } else if (dump->parsed()) {
      const auto cfg = mcis::load_config(dump_args.config);
      const auto setup = mcis::build_setup(cfg);
      const auto trace = mcis::run_chain(setup.target, *setup.proposal, cfg.chain.steps, cfg.seed,
                                         setup.x0, setup.mode);
      const auto dir = resolved_output(cfg, dump_args);
      std::filesystem::create_directories(dir);
      mcis::write_trace_csv(trace, dir / "trace.csv");
      std::cout << "wrote " << trace.size() << " steps to " << (dir / "trace.csv").string()
                << " (acceptance rate " << trace.acceptance_rate() << ")\n";
    }
  } catch (const mcis::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
