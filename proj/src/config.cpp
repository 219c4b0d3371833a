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

#include "mcis/config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string_view>

#include "mcis/error.hpp"

#ifndef MCIS_DATA_DIR
#define MCIS_DATA_DIR "data"
#endif

namespace mcis {

namespace {

[[noreturn]] void fail(const YAML::Node& node, const std::string& what) {
  const auto mark = node.Mark();
  if (mark.is_null()) throw InputError(what);
  throw InputError(what + " (line " + std::to_string(mark.line + 1) + ", column " +
                   std::to_string(mark.column + 1) + ")");
}

void allow_keys(const YAML::Node& node, std::string_view section,
                std::initializer_list<std::string_view> keys) {
  if (!node.IsMap()) fail(node, "section '" + std::string(section) + "' must be a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      fail(kv.first, "unknown key '" + key + "' in section '" + std::string(section) + "'");
    }
  }
}

template <typename T>
T scalar(const YAML::Node& node, std::string_view what) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    fail(node, "invalid value for '" + std::string(what) + "'");
  }
}

template <typename T>
void read(const YAML::Node& parent, const char* key, T& out) {
  if (const auto n = parent[key]) out = scalar<T>(n, key);
}

// A scalar or a list of reals.
std::vector<double> reals(const YAML::Node& node, std::string_view what) {
  if (node.IsScalar()) return {scalar<double>(node, what)};
  if (!node.IsSequence()) fail(node, "'" + std::string(what) + "' must be a number or a list");
  std::vector<double> out;
  for (const auto& v : node) out.push_back(scalar<double>(v, what));
  return out;
}

std::vector<double> broadcast(std::vector<double> v, int d, const YAML::Node& node,
                              std::string_view what) {
  if (v.size() == 1 && d > 1) return std::vector<double>(static_cast<std::size_t>(d), v[0]);
  if (static_cast<int>(v.size()) != d) {
    fail(node, "'" + std::string(what) + "' must have " + std::to_string(d) + " entries");
  }
  return v;
}

void parse_target(const YAML::Node& n, TargetConfig& t) {
  allow_keys(n, "target",
             {"kind", "dimension", "mean", "stddev", "components", "log_scale", "cost_multiplier",
              "data", "predictors", "response", "max_rows", "standardize_response"});
  read(n, "kind", t.kind);
  read(n, "dimension", t.dimension);
  read(n, "log_scale", t.log_scale);
  read(n, "cost_multiplier", t.cost_multiplier);
  if (t.kind != "gaussian" && t.kind != "mixture" && t.kind != "gp") {
    fail(n["kind"], "target kind must be gaussian, mixture or gp");
  }
  if (t.dimension < 1) fail(n["dimension"], "dimension must be at least 1");
  if (t.cost_multiplier < 1) fail(n["cost_multiplier"], "cost_multiplier must be at least 1");

  if (t.kind == "gaussian") {
    if (const auto m = n["mean"]) t.mean = reals(m, "mean");
    if (const auto s = n["stddev"]) t.stddev = reals(s, "stddev");
    t.mean = broadcast(t.mean, t.dimension, n["mean"], "mean");
    t.stddev = broadcast(t.stddev, t.dimension, n["stddev"], "stddev");
  } else if (t.kind == "mixture") {
    const auto comps = n["components"];
    if (!comps || !comps.IsSequence() || comps.size() == 0) {
      fail(n, "mixture target needs a non-empty 'components' list");
    }
    t.components.clear();
    for (const auto& c : comps) {
      allow_keys(c, "target.components", {"weight", "mean", "stddev"});
      ComponentConfig cc;
      read(c, "weight", cc.weight);
      if (!c["mean"] || !c["stddev"]) fail(c, "each component needs mean and stddev");
      cc.mean = broadcast(reals(c["mean"], "mean"), t.dimension, c["mean"], "mean");
      cc.stddev = broadcast(reals(c["stddev"], "stddev"), t.dimension, c["stddev"], "stddev");
      t.components.push_back(std::move(cc));
    }
  } else {
    if (const auto d = n["data"]) t.data = scalar<std::string>(d, "data");
    if (t.data.empty()) fail(n, "gp target needs a 'data' file");
    if (const auto p = n["predictors"]) {
      t.predictors.clear();
      for (const auto& v : p) t.predictors.push_back(scalar<int>(v, "predictors"));
    }
    read(n, "response", t.response);
    read(n, "max_rows", t.max_rows);
    read(n, "standardize_response", t.standardize_response);
    t.dimension = static_cast<int>(t.predictors.size()) + 2;
  }
}

void parse_proposal(const YAML::Node& n, ProposalConfig& p) {
  allow_keys(n, "proposal", {"kind", "theta", "tune", "precondition", "mean"});
  if (const auto k = n["kind"]) {
    try {
      p.kind = parse_proposal_kind(scalar<std::string>(k, "kind"));
    } catch (const InputError& e) {
      fail(k, e.what());
    }
  }
  read(n, "theta", p.theta);
  if (!(p.theta > 0.0)) fail(n["theta"], "theta must be positive");
  if (const auto t = n["tune"]) {
    allow_keys(t, "proposal.tune", {"rate", "pilot_steps"});
    TuneConfig tc;
    read(t, "rate", tc.rate);
    read(t, "pilot_steps", tc.pilot_steps);
    p.tune = tc;
  }
  if (const auto pc = n["precondition"]) {
    allow_keys(pc, "proposal.precondition", {"steps", "rate"});
    PreconditionConfig c;
    read(pc, "steps", c.steps);
    read(pc, "rate", c.rate);
    p.precondition = c;
  }
  if (const auto m = n["mean"]) p.mean = reals(m, "mean");
}

void parse_chain(const YAML::Node& n, ChainConfig& c) {
  allow_keys(n, "chain", {"accept", "steps", "x0", "burn_in"});
  if (const auto a = n["accept"]) {
    try {
      c.accept = parse_accept_mode(scalar<std::string>(a, "accept"));
    } catch (const InputError& e) {
      fail(a, e.what());
    }
  }
  read(n, "steps", c.steps);
  if (c.steps < 1) fail(n["steps"], "steps must be at least 1");
  if (const auto x = n["x0"]) c.x0 = reals(x, "x0");
  read(n, "burn_in", c.burn_in);
}

void parse_truth(const YAML::Node& n, TruthConfig& t) {
  if (n.IsScalar()) {
    t.kind = scalar<std::string>(n, "truth");
  } else {
    allow_keys(n, "truth", {"kind", "chains", "steps", "values"});
    read(n, "kind", t.kind);
    read(n, "chains", t.reference_chains);
    read(n, "steps", t.reference_steps);
    if (const auto v = n["values"]) {
      if (!v.IsMap()) fail(v, "'values' must map test functions to numbers");
      for (const auto& kv : v) {
        const auto name = kv.first.as<std::string>();
        try {
          parse_test_function(name);
        } catch (const InputError& e) {
          fail(kv.first, e.what());
        }
        t.values[name] = scalar<double>(kv.second, name);
      }
      if (!n["kind"]) t.kind = "values";
    }
  }
  if (t.kind != "analytic" && t.kind != "reference" && t.kind != "values") {
    fail(n, "truth kind must be analytic, reference or values");
  }
  if (t.kind == "reference" && (t.reference_chains < 1 || t.reference_steps < 1)) {
    fail(n, "reference truth needs positive chains and steps");
  }
}

void parse_timing(const YAML::Node& n, TimingConfig& t) {
  std::string mode;
  if (n.IsScalar()) {
    mode = scalar<std::string>(n, "timing");
  } else {
    allow_keys(n, "timing", {"mode", "c_rho", "c_q", "c_q_mixture", "c_f", "c_step"});
    mode = "cpu";
    read(n, "mode", mode);
    read(n, "c_rho", t.c_rho);
    read(n, "c_q", t.c_q);
    read(n, "c_q_mixture", t.c_q_mixture);
    read(n, "c_f", t.c_f);
    read(n, "c_step", t.c_step);
  }
  if (mode == "cpu") {
    t.mode = TimingMode::cpu;
  } else if (mode == "model") {
    t.mode = TimingMode::model;
  } else {
    fail(n, "timing mode must be cpu or model");
  }
}

void parse_sweep(const YAML::Node& n, SweepConfig& s) {
  allow_keys(n, "sweep", {"factor", "min_rate", "start_theta", "start_rate", "rolling", "max_rungs"});
  read(n, "factor", s.factor);
  read(n, "min_rate", s.min_rate);
  if (const auto t = n["start_theta"]) s.start_theta = scalar<double>(t, "start_theta");
  read(n, "start_rate", s.start_rate);
  read(n, "rolling", s.rolling);
  read(n, "max_rungs", s.max_rungs);
  if (!(s.factor > 1.0)) fail(n["factor"], "sweep factor must exceed 1");
  if (s.rolling < 1) fail(n["rolling"], "rolling width must be at least 1");
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ParseError(e.msg, static_cast<std::size_t>(e.mark.line + 1),
                     static_cast<std::size_t>(e.mark.column + 1));
  }
  if (!root.IsMap()) throw InputError("config must be a mapping");
  allow_keys(root, "top level",
             {"name", "target", "proposal", "chain", "repetitions", "seed", "estimators",
              "test_functions", "truth", "window", "timing", "mixture", "sweep", "output"});

  ExperimentConfig c;
  c.base_dir = base_dir;
  c.source_text = text;
  read(root, "name", c.name);
  if (const auto t = root["target"]) parse_target(t, c.target);
  if (const auto p = root["proposal"]) parse_proposal(p, c.proposal);
  if (const auto ch = root["chain"]) parse_chain(ch, c.chain);
  read(root, "repetitions", c.repetitions);
  read(root, "seed", c.seed);
  read(root, "window", c.window);
  if (c.repetitions < 1) fail(root["repetitions"], "repetitions must be at least 1");
  if (c.window < 1) fail(root["window"], "window must be at least 1");

  if (const auto e = root["estimators"]) {
    c.estimators.clear();
    for (const auto& v : e) {
      try {
        c.estimators.push_back(parse_estimator_kind(scalar<std::string>(v, "estimators")));
      } catch (const InputError& err) {
        fail(v, err.what());
      }
    }
    if (c.estimators.empty()) fail(e, "at least one estimator is required");
  }
  if (const auto f = root["test_functions"]) {
    c.test_functions.clear();
    for (const auto& v : f) {
      try {
        c.test_functions.push_back(parse_test_function(scalar<std::string>(v, "test_functions")));
      } catch (const InputError& err) {
        fail(v, err.what());
      }
    }
    if (c.test_functions.empty()) fail(f, "at least one test function is required");
  }
  if (const auto t = root["truth"]) parse_truth(t, c.truth);
  if (const auto t = root["timing"]) parse_timing(t, c.timing);
  if (const auto m = root["mixture"]) {
    allow_keys(m, "mixture", {"block_rows", "threads", "cv_coefficient"});
    read(m, "block_rows", c.mixture.block_rows);
    read(m, "threads", c.mixture.threads);
    if (const auto cv = m["cv_coefficient"]) c.mixture.cv_coefficient = scalar<double>(cv, "cv_coefficient");
    if (c.mixture.block_rows < 1) fail(m["block_rows"], "block_rows must be positive");
  }
  if (const auto s = root["sweep"]) parse_sweep(s, c.sweep);
  if (const auto o = root["output"]) c.output = scalar<std::string>(o, "output");

  const int d = c.target.dimension;
  if (!c.chain.x0.empty()) c.chain.x0 = broadcast(c.chain.x0, d, root["chain"]["x0"], "x0");
  if (!c.proposal.mean.empty()) {
    c.proposal.mean = broadcast(c.proposal.mean, d, root["proposal"]["mean"], "mean");
  }
  if (c.chain.burn_in >= c.chain.steps) fail(root["chain"], "burn_in must be smaller than steps");
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  auto base = path.parent_path();
  if (base.empty()) base = ".";
  return parse_config(buf.str(), base);
}

std::filesystem::path resolve_data_path(const ExperimentConfig& config,
                                        const std::filesystem::path& path) {
  if (path.is_absolute()) return path;
  const auto local = config.base_dir / path;
  if (std::filesystem::exists(local)) return local;
  const auto bundled = std::filesystem::path(MCIS_DATA_DIR) / path;
  if (std::filesystem::exists(bundled)) return bundled;
  return local;
}

}  // namespace mcis
