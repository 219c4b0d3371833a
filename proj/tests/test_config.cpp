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

#include <doctest.h>

#include <filesystem>
#include <string>

#include "mcis/config.hpp"
#include "mcis/error.hpp"

using namespace mcis;

TEST_CASE("defaults") {
  const auto c = parse_config("name: plain\n");
  CHECK(c.name == "plain");
  CHECK(c.target.kind == "gaussian");
  CHECK(c.chain.steps == 10000);
  CHECK(c.repetitions == 20);
  CHECK(c.window == 50);
  CHECK(c.timing.mode == TimingMode::cpu);
  CHECK(c.sweep.factor == 1.3);
  CHECK(c.source_text == "name: plain\n");
}

TEST_CASE("full gaussian config with broadcasting") {
  const auto c = parse_config(R"(
name: ula
target: {kind: gaussian, dimension: 3, mean: 5.0, stddev: 0.7}
proposal: {kind: langevin, theta: 0.6}
chain: {accept: always-accept, steps: 500, x0: 5.0, burn_in: 10}
repetitions: 4
seed: 77
estimators: [vanilla, mcis, mcis-exact, smcis, lais, mcis-cv-linear, mcis-cv-log]
test_functions: [cube, exp]
truth: analytic
window: 7
timing: {mode: model, c_rho: 300}
mixture: {block_rows: 32, threads: 2, cv_coefficient: 0.5}
output: results/ula
)");
  CHECK(c.target.mean == std::vector<double>{5.0, 5.0, 5.0});
  CHECK(c.target.stddev == std::vector<double>{0.7, 0.7, 0.7});
  CHECK(c.proposal.kind == ProposalKind::langevin);
  CHECK(c.chain.accept == AcceptMode::always_accept);
  CHECK(c.chain.x0 == std::vector<double>{5.0, 5.0, 5.0});
  CHECK(c.chain.burn_in == 10);
  CHECK(c.seed == 77);
  CHECK(c.estimators.size() == 7);
  CHECK(c.test_functions == std::vector<TestFunction>{TestFunction::cube, TestFunction::exp});
  CHECK(c.timing.mode == TimingMode::model);
  CHECK(c.timing.c_rho == 300.0);
  CHECK(c.timing.c_q == 20.0);
  CHECK(c.mixture.block_rows == 32);
  CHECK(c.mixture.threads == 2);
  CHECK(c.mixture.cv_coefficient.value() == 0.5);
  CHECK(c.output == std::filesystem::path("results/ula"));
}

TEST_CASE("mixture, tuning, sweep and truth sections") {
  const auto c = parse_config(R"(
target:
  kind: mixture
  dimension: 3
  components:
    - {weight: 0.5, mean: 3, stddev: 0.7}
    - {weight: 0.5, mean: [7, 7, 7], stddev: 1.5}
proposal:
  kind: random-walk
  tune: {rate: 0.234, pilot_steps: 3000}
truth:
  values: {cube: 210.83}
sweep: {factor: 1.5, min_rate: 0.05, start_theta: 0.01, rolling: 5}
)");
  REQUIRE(c.target.components.size() == 2);
  CHECK(c.target.components[0].mean == std::vector<double>{3, 3, 3});
  CHECK(c.target.components[1].stddev == std::vector<double>{1.5, 1.5, 1.5});
  REQUIRE(c.proposal.tune.has_value());
  CHECK(c.proposal.tune->pilot_steps == 3000);
  CHECK(c.truth.kind == "values");
  CHECK(c.truth.values.at("cube") == 210.83);
  CHECK(c.sweep.factor == 1.5);
  CHECK(c.sweep.start_theta.value() == 0.01);
  CHECK(c.sweep.rolling == 5);
}

TEST_CASE("gp section sets the dimension from the predictors") {
  const auto c = parse_config(R"(
target: {kind: gp, data: airfoil.dat, predictors: [1, 2, 3], response: 6, max_rows: 50}
proposal: {precondition: {steps: 2000}, tune: {}}
truth: {kind: reference, chains: 2, steps: 1000}
)",
                              "/tmp/cfg");
  CHECK(c.target.dimension == 5);
  CHECK(c.target.max_rows == 50);
  CHECK(c.target.standardize_response);
  CHECK(c.proposal.precondition->steps == 2000);
  CHECK(c.proposal.tune->rate == 0.234);
  CHECK(c.truth.kind == "reference");
  CHECK(c.truth.reference_chains == 2);
  CHECK(resolve_data_path(c, "/abs/file.dat") == std::filesystem::path("/abs/file.dat"));
}

TEST_CASE("unknown keys are reported with their position") {
  try {
    parse_config("name: x\nchain:\n  stepz: 10\n");
    FAIL("expected an input error");
  } catch (const InputError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("stepz") != std::string::npos);
    CHECK(msg.find("line 3") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config("colour: red\n"), InputError);
}

TEST_CASE("invalid values") {
  CHECK_THROWS_AS(parse_config("estimators: [vanilla, amis]\n"), InputError);
  CHECK_THROWS_AS(parse_config("test_functions: [quartic]\n"), InputError);
  CHECK_THROWS_AS(parse_config("chain: {steps: 0}\n"), InputError);
  CHECK_THROWS_AS(parse_config("chain: {steps: 10, burn_in: 10}\n"), InputError);
  CHECK_THROWS_AS(parse_config("proposal: {theta: -1}\n"), InputError);
  CHECK_THROWS_AS(parse_config("target: {kind: banana}\n"), InputError);
  CHECK_THROWS_AS(parse_config("target: {kind: gaussian, dimension: 2, mean: [1, 2, 3]}\n"), InputError);
  CHECK_THROWS_AS(parse_config("target: {kind: mixture, dimension: 2}\n"), InputError);
  CHECK_THROWS_AS(parse_config("timing: fast\n"), InputError);
  CHECK_THROWS_AS(parse_config("repetitions: many\n"), InputError);
  CHECK_THROWS_AS(parse_config("window: 0\n"), InputError);
  CHECK_THROWS_AS(parse_config("- a\n- b\n"), InputError);
  CHECK_THROWS_AS(parse_config("name: [unclosed\n"), ParseError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.yaml"), IoError);
}

TEST_CASE("bundled configs parse") {
  for (const auto& entry : std::filesystem::directory_iterator(MCIS_CONFIG_DIR)) {
    if (entry.path().extension() != ".yaml") continue;
    CAPTURE(entry.path().string());
    const auto c = load_config(entry.path());
    CHECK(c.repetitions >= 1);
  }
}
