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

#include "mcis/bench.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "mcis/cpu_time.hpp"
#include "mcis/csv.hpp"
#include "mcis/error.hpp"
#include "mcis/mixture.hpp"
#include "mcis/rng.hpp"

namespace mcis {

namespace {

using json = nlohmann::json;

constexpr std::uint64_t kSetupStream = 0x5e7u;
constexpr std::uint64_t kReferenceOffset = 1000003u;

std::vector<double> to_std(const Eigen::Ref<const Eigen::VectorXd>& v) {
  return {v.data(), v.data() + v.size()};
}

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Eigen::VectorXd target_mean(const Target& target) {
  if (target.kind() == TargetKind::gaussian || target.kind() == TargetKind::mixture_of_gaussians) {
    Eigen::VectorXd m = Eigen::VectorXd::Zero(target.dimension());
    for (const auto& c : target.components()) m += c.weight * c.mean;
    return m;
  }
  return Eigen::VectorXd::Zero(target.dimension());
}

ChainTrace drop_burn_in(ChainTrace trace, std::size_t burn_in) {
  if (burn_in == 0) return trace;
  const auto b = static_cast<Eigen::Index>(burn_in);
  const auto n = static_cast<Eigen::Index>(trace.size()) - b;
  trace.states = trace.states.rightCols(n).eval();
  trace.proposals = trace.proposals.rightCols(n).eval();
  trace.log_rho_x = trace.log_rho_x.tail(n).eval();
  trace.log_rho_y = trace.log_rho_y.tail(n).eval();
  trace.log_q_forward = trace.log_q_forward.tail(n).eval();
  trace.accepted.erase(trace.accepted.begin(), trace.accepted.begin() + b);
  trace.cpu_ns.erase(trace.cpu_ns.begin(), trace.cpu_ns.begin() + b);
  return trace;
}

// Virtual chain time from evaluation counts.
void model_chain_time(ChainTrace& trace, const TimingConfig& t) {
  const double q_per_step = trace.settings.accept_mode == AcceptMode::metropolis_hastings ? 2.0 : 1.0;
  const double per_step = t.c_step + t.c_rho + q_per_step * t.c_q;
  for (std::size_t k = 0; k < trace.size(); ++k) {
    trace.cpu_ns[k] = std::llround(t.c_rho + static_cast<double>(k + 1) * per_step);
  }
}

std::vector<std::int64_t> attribute(const std::vector<std::int64_t>& chain, double linear_ns,
                                    double quadratic_ns) {
  const double n = static_cast<double>(chain.size());
  std::vector<std::int64_t> out(chain.size());
  for (std::size_t k = 0; k < chain.size(); ++k) {
    const double frac = static_cast<double>(k + 1) / n;
    out[k] = chain[k] + std::llround(linear_ns * frac + quadratic_ns * frac * frac);
  }
  return out;
}

template <typename Fn>
double timed_ns(Fn&& fn) {
  CpuStopwatch sw;
  fn();
  return static_cast<double>(sw.elapsed_ns());
}

Eigen::MatrixXd sample_covariance(const Eigen::Ref<const Eigen::MatrixXd>& samples) {
  const Eigen::VectorXd mean = samples.rowwise().mean();
  const Eigen::MatrixXd centered = samples.colwise() - mean;
  return centered * centered.transpose() / static_cast<double>(samples.cols() - 1);
}

}  // namespace

double prolongation_factor(const CostModel& m) {
  if (!(m.alpha >= 0.0 && m.alpha <= 1.0)) throw InputError("alpha must lie in [0, 1]");
  if (m.steps < 1) throw InputError("K must be positive");
  const double cqm = m.c_q_mixture.value_or(m.c_q);
  for (double c : {m.c_f, m.c_q, m.c_rho, cqm, m.c_step}) {
    if (!(c >= 0.0) || !std::isfinite(c)) throw InputError("costs must be nonnegative and finite");
  }
  const double k = static_cast<double>(m.steps);
  const double denom = m.alpha * k * m.c_f + k * m.c_rho + 2.0 * k * m.c_q + k * m.c_step;
  if (!(denom > 0.0)) throw InputError("prolongation factor has a zero denominator");
  const double extra = (1.0 - m.alpha) * k * m.c_f + m.alpha * k * k * cqm;
  return 1.0 + extra / denom;
}

CostModel measure_costs(const Target& target, const ProposalFamily& proposal, TestFunction f,
                        const Eigen::Ref<const Eigen::VectorXd>& x0, double alpha,
                        std::size_t steps) {
  constexpr int kEvaluations = 1000;
  constexpr int kRepeats = 5;
  constexpr int kMixtureProbes = 256;
  RngStream rng(0xc057, 0);
  Eigen::MatrixXd points(x0.size(), kEvaluations);
  const Eigen::VectorXd center = proposal.center(x0);
  for (int i = 0; i < kEvaluations; ++i) points.col(i) = proposal.propose_from_center(center, rng);
  volatile double sink = 0.0;

  auto per_eval = [&](auto&& body, double count) {
    body();  // warm-up
    std::vector<double> samples;
    for (int r = 0; r < kRepeats; ++r) samples.push_back(timed_ns(body) / count);
    return median(samples);
  };

  CostModel m;
  m.alpha = alpha;
  m.steps = steps;
  m.c_rho = per_eval(
      [&] {
        for (int i = 0; i < kEvaluations; ++i) sink = sink + target.log_density(points.col(i));
      },
      kEvaluations);
  m.c_q = per_eval(
      [&] {
        for (int i = 0; i < kEvaluations; ++i) sink = sink + proposal.log_pdf(points.col(i), x0);
      },
      kEvaluations);
  m.c_f = per_eval(
      [&] {
        for (int i = 0; i < kEvaluations; ++i) sink = sink + test_function_eval(f, points.col(i));
      },
      kEvaluations);
  const Eigen::MatrixXd probes = points.leftCols(kMixtureProbes);
  m.c_q_mixture = per_eval(
      [&] {
        const auto mat = build_log_matrix(probes, points, proposal);
        sink = sink + mat.log_mixture[0];
      },
      static_cast<double>(kMixtureProbes) * kEvaluations);
  StepClock clock;
  std::vector<std::int64_t> stamps(kEvaluations);
  m.c_step = per_eval(
      [&] {
        for (int i = 0; i < kEvaluations; ++i) {
          const Eigen::VectorXd y = proposal.propose_from_center(center, rng);
          sink = sink + y[0] + rng.uniform();
          stamps[static_cast<std::size_t>(i)] = clock.now();
        }
      },
      kEvaluations);
  return m;
}

std::vector<CurvePoint> error_curve(const EstimateSeries& series, double truth,
                                    std::size_t window) {
  if (window < 1) throw InputError("window must be at least 1");
  if (!std::isfinite(truth)) throw InputError("truth must be finite");
  const std::size_t n = series.size();
  std::vector<double> logs(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double err = std::abs(series.estimates[k] - truth);
    logs[k] = std::log10(std::max(err, 1e-300));
  }
  std::vector<CurvePoint> out;
  if (window > n) return out;
  double sum = std::accumulate(logs.begin(), logs.begin() + static_cast<std::ptrdiff_t>(window), 0.0);
  const std::size_t half = (window - 1) / 2;
  for (std::size_t start = 0; start + window <= n; ++start) {
    if (start > 0) {
      // Fresh sums every 4096 points keep the running sum from drifting.
      if (start % 4096 == 0) {
        sum = std::accumulate(logs.begin() + static_cast<std::ptrdiff_t>(start),
                              logs.begin() + static_cast<std::ptrdiff_t>(start + window), 0.0);
      } else {
        sum += logs[start + window - 1] - logs[start - 1];
      }
    }
    const std::size_t center = start + half;
    const auto cpu = center < series.cpu_ns.size() ? series.cpu_ns[center] : 0;
    out.push_back({center + 1, cpu, sum / static_cast<double>(window)});
  }
  return out;
}

Target build_target(const ExperimentConfig& config, std::shared_ptr<const GpPosterior>* gp_out) {
  const auto& t = config.target;
  Target target = Target::isotropic_gaussian(1, 0.0, 1.0);
  if (t.kind == "gaussian") {
    target = Target::gaussian(to_eigen(t.mean), to_eigen(t.stddev));
  } else if (t.kind == "mixture") {
    std::vector<GaussianComponent> comps;
    for (const auto& c : t.components) comps.push_back({c.weight, to_eigen(c.mean), to_eigen(c.stddev)});
    target = Target::mixture(std::move(comps));
  } else if (t.kind == "gp") {
    LoadOptions opts;
    opts.max_rows = t.max_rows;
    opts.standardize_response = t.standardize_response;
    auto data = load_dataset(resolve_data_path(config, t.data), t.predictors, t.response, opts);
    auto gp = std::make_shared<const GpPosterior>(std::move(data));
    if (gp_out) *gp_out = gp;
    target = Target::gp_posterior(std::move(gp));
  } else {
    throw InputError("unknown target kind '" + t.kind + "'");
  }
  if (t.log_scale != 0.0) target = target.scaled(t.log_scale);
  if (t.cost_multiplier > 1) target = target.with_cost_multiplier(t.cost_multiplier);
  return target;
}

Setup build_setup(const ExperimentConfig& config) {
  Setup s;
  s.target = build_target(config, &s.gp);
  const int d = s.target.dimension();
  s.mode = config.chain.accept;
  s.x0 = config.chain.x0.empty() ? target_mean(s.target) : to_eigen(config.chain.x0);
  if (s.x0.size() != d) throw InputError("x0 has the wrong dimension");
  const auto& pc = config.proposal;
  const std::uint64_t setup_seed = splitmix64(config.seed ^ kSetupStream);

  switch (pc.kind) {
    case ProposalKind::random_walk:
      s.proposal = ProposalFamily::random_walk(d, pc.theta);
      break;
    case ProposalKind::langevin:
      s.proposal = ProposalFamily::langevin(s.target, pc.theta);
      break;
    case ProposalKind::independent:
      s.proposal = ProposalFamily::independent(
          pc.mean.empty() ? target_mean(s.target) : to_eigen(pc.mean), pc.theta);
      break;
  }

  if (pc.precondition) {
    if (pc.kind != ProposalKind::random_walk) {
      throw InputError("preconditioning applies to random-walk proposals only");
    }
    const auto pilot_steps = pc.tune ? pc.tune->pilot_steps : std::size_t{1000};
    auto tuned = tune_scale(s.target, *s.proposal, pc.precondition->rate, pilot_steps, setup_seed, s.x0);
    const auto pre = run_chain(s.target, s.proposal->with_theta(tuned.theta), pc.precondition->steps,
                               setup_seed + 1, s.x0, AcceptMode::metropolis_hastings);
    const auto half = pre.states.cols() / 2;
    Eigen::MatrixXd cov = sample_covariance(pre.states.rightCols(pre.states.cols() - half));
    cov = 0.5 * (cov + cov.transpose());
    cov.diagonal().array() += 1e-10 * cov.diagonal().mean();
    s.scaling = cov;
    s.x0 = pre.states.col(pre.states.cols() - 1);
    s.proposal = ProposalFamily::random_walk(d, 1.0, cov);
  }
  if (pc.tune) {
    s.tune = tune_scale(s.target, *s.proposal, pc.tune->rate, pc.tune->pilot_steps, setup_seed + 2,
                        s.x0);
    s.proposal = s.proposal->with_theta(s.tune->theta);
  }
  s.setup_target_evaluations = s.target.density_evaluations();
  s.target.reset_counters();
  return s;
}

std::uint64_t repetition_seed(const ExperimentConfig& config, std::size_t r) {
  return config.seed + r;
}

std::vector<double> ExperimentResult::finals(std::string_view estimator,
                                             std::string_view test_function) const {
  std::vector<double> out;
  for (const auto& run : runs) {
    for (const auto& s : run.series) {
      if (s.estimator == estimator && s.test_function == test_function) out.push_back(s.final_estimate());
    }
  }
  return out;
}

namespace {

std::map<std::string, double> compute_truth(const ExperimentConfig& config, const Setup& setup) {
  std::map<std::string, double> truth;
  const auto& tc = config.truth;
  if (tc.kind == "values") {
    for (const auto& [k, v] : tc.values) truth[k] = v;
    return truth;
  }
  if (tc.kind == "analytic") {
    for (auto tf : config.test_functions) {
      try {
        truth[std::string(to_string(tf))] = analytic_moment(setup.target, tf);
      } catch (const UnsupportedOracleError&) {
      }
    }
    return truth;
  }
  // Long vanilla runs, averaged.
  std::map<std::string, double> sums;
  for (std::size_t c = 0; c < tc.reference_chains; ++c) {
    const auto trace = drop_burn_in(
        run_chain(setup.target, *setup.proposal, tc.reference_steps + config.chain.burn_in,
                  config.seed + kReferenceOffset + c, setup.x0, setup.mode),
        config.chain.burn_in);
    for (auto tf : config.test_functions) {
      sums[std::string(to_string(tf))] += vanilla_estimate(trace, make_integrand(tf)).final_estimate();
    }
  }
  for (const auto& [k, v] : sums) truth[k] = v / static_cast<double>(tc.reference_chains);
  setup.target.reset_counters();
  return truth;
}

struct SeedContext {
  const ExperimentConfig& config;
  const Setup& setup;
  std::vector<UnsupportedCell>& unsupported;
  bool first_seed;
};

SeedRun run_seed(const SeedContext& ctx, std::uint64_t seed, bool keep_trace) {
  const auto& config = ctx.config;
  const auto& setup = ctx.setup;
  const auto& target = setup.target;
  const auto& proposal = *setup.proposal;
  const auto& timing = config.timing;
  const bool model = timing.mode == TimingMode::model;

  SeedRun run;
  run.seed = seed;
  target.reset_counters();
  ChainTrace trace = run_chain(target, proposal, config.chain.steps, seed, setup.x0, setup.mode);
  const std::uint64_t chain_evals = target.density_evaluations();
  trace = drop_burn_in(std::move(trace), config.chain.burn_in);
  if (model) model_chain_time(trace, timing);
  const auto steps = static_cast<Eigen::Index>(trace.size());
  const double kd = static_cast<double>(steps);
  run.acceptance_rate = trace.acceptance_rate();
  run.chain_cpu_ns = trace.total_cpu_ns();

  const auto wants = [&](EstimatorKind k) {
    return std::find(config.estimators.begin(), config.estimators.end(), k) != config.estimators.end();
  };
  const bool need_cv = wants(EstimatorKind::mcis_cv_linear) || wants(EstimatorKind::mcis_cv_log);
  const bool need_mixture = need_cv || wants(EstimatorKind::mcis);

  // Integrand values at the proposals, shared by the weighted estimators.
  std::map<TestFunction, Eigen::VectorXd> f_y;
  std::map<TestFunction, double> f_y_ns;
  auto f_at_proposals = [&](TestFunction tf) -> const Eigen::VectorXd& {
    auto it = f_y.find(tf);
    if (it == f_y.end()) {
      Eigen::VectorXd v;
      const double ns = timed_ns([&] { v = evaluate_columns(trace.proposals, make_integrand(tf)); });
      f_y_ns[tf] = model ? kd * timing.c_f : ns;
      it = f_y.emplace(tf, std::move(v)).first;
    }
    return it->second;
  };

  std::optional<ProposalLogMatrix> matrix;
  double mixture_ns = 0.0;
  if (need_mixture) {
    MixtureOptions opts;
    opts.block_rows = config.mixture.block_rows;
    opts.threads = config.mixture.threads;
    opts.control_variates = need_cv;
    opts.fixed_cv_coefficient = config.mixture.cv_coefficient;
    const double ns = timed_ns([&] { matrix = build_log_matrix(trace, proposal, opts); });
    mixture_ns = model ? static_cast<double>(matrix->q_evaluations) * timing.c_q_mixture : ns;
    run.mixture_runs = matrix->runs;
    run.mixture_q_evaluations = matrix->q_evaluations;
    run.cv_linear_fallback_rows = matrix->cv_linear_fallback_rows;
  }

  auto add_weighted = [&](EstimatorKind kind, const Eigen::VectorXd& log_weights, double weight_ns,
                          double quadratic_ns, std::uint64_t extra_evals,
                          const Eigen::MatrixXd* points) {
    const std::string name(to_string(kind));
    run.log_evidence[name] = evidence_estimate(log_weights);
    run.target_evaluations[name] = chain_evals + extra_evals;
    for (auto tf : config.test_functions) {
      Eigen::VectorXd fv;
      double f_ns = 0.0;
      if (points) {
        f_ns = timed_ns([&] { fv = evaluate_columns(*points, make_integrand(tf)); });
        if (model) f_ns = kd * timing.c_f;
      } else {
        fv = f_at_proposals(tf);
        f_ns = f_y_ns[tf];
      }
      EstimateSeries s;
      const double run_ns = timed_ns([&] { s = weighted_series(name, trace, log_weights, std::move(fv)); });
      s.test_function = std::string(to_string(tf));
      s.extra_target_evaluations = extra_evals;
      const double linear = f_ns + weight_ns + (model ? 0.0 : run_ns);
      s.cpu_ns = attribute(trace.cpu_ns, linear, quadratic_ns);
      run.total_cpu_ns[name] = s.cpu_ns.back();
      run.series.push_back(std::move(s));
    }
  };

  for (auto kind : config.estimators) {
    const std::string name(to_string(kind));
    const auto before = target.density_evaluations();
    try {
      switch (kind) {
        case EstimatorKind::vanilla: {
          run.target_evaluations[name] = chain_evals;
          for (auto tf : config.test_functions) {
            EstimateSeries s;
            const double ns = timed_ns([&] { s = vanilla_estimate(trace, make_integrand(tf)); });
            s.test_function = std::string(to_string(tf));
            double linear = ns;
            if (model) {
              std::size_t moves = 1;
              for (Eigen::Index k = 0; k + 1 < steps; ++k) moves += trace.accepted[static_cast<std::size_t>(k)];
              linear = static_cast<double>(moves) * timing.c_f;
            }
            s.cpu_ns = attribute(trace.cpu_ns, linear, 0.0);
            run.total_cpu_ns[name] = s.cpu_ns.back();
            run.series.push_back(std::move(s));
          }
          break;
        }
        case EstimatorKind::mcis: {
          Eigen::VectorXd lw;
          const double ns = timed_ns([&] { lw = mcis_log_weights(trace, matrix->log_mixture); });
          add_weighted(kind, lw, model ? 0.0 : ns, mixture_ns, 0, nullptr);
          break;
        }
        case EstimatorKind::mcis_cv_linear:
        case EstimatorKind::mcis_cv_log: {
          const auto mode = kind == EstimatorKind::mcis_cv_linear ? CvMode::linear : CvMode::log;
          Eigen::VectorXd lw;
          const double ns =
              timed_ns([&] { lw = mcis_log_weights(trace, cv_adjusted_mixture(*matrix, mode)); });
          add_weighted(kind, lw, model ? 0.0 : ns, mixture_ns, 0, nullptr);
          break;
        }
        case EstimatorKind::mcis_exact: {
          Eigen::VectorXd lw;
          const double ns = timed_ns([&] { lw = exact_mcis_log_weights(trace, target, proposal); });
          add_weighted(kind, lw, model ? kd * timing.c_q : ns, 0.0, 0, nullptr);
          break;
        }
        case EstimatorKind::smcis: {
          Eigen::VectorXd lw;
          const double ns = timed_ns([&] { lw = smcis_log_weights(trace); });
          add_weighted(kind, lw, model ? 0.0 : ns, 0.0, 0, nullptr);
          break;
        }
        case EstimatorKind::lais: {
          MixtureOptions opts;
          opts.block_rows = config.mixture.block_rows;
          opts.threads = config.mixture.threads;
          const auto sample = lais_sample(trace, target, proposal, seed, opts);
          const double draw_ns =
              model ? kd * (timing.c_step + timing.c_rho) : static_cast<double>(sample.draw_cpu_ns);
          const double mix_ns = model ? static_cast<double>(sample.q_evaluations) * timing.c_q_mixture
                                      : static_cast<double>(sample.mixture_cpu_ns);
          add_weighted(kind, sample.log_weights, draw_ns, mix_ns, sample.target_evaluations,
                       &sample.points);
          break;
        }
      }
    } catch (const UnsupportedOracleError& e) {
      if (ctx.first_seed) {
        for (auto tf : config.test_functions) {
          ctx.unsupported.push_back({name, std::string(to_string(tf)), e.what()});
        }
      }
    }
    // Estimators other than LAIS must not touch the target.
    if (kind != EstimatorKind::lais && target.density_evaluations() != before) {
      throw Error("estimator '" + name + "' evaluated the target");
    }
  }
  if (keep_trace) run.trace = std::move(trace);
  return run;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json metadata(const ExperimentConfig& config, const ExperimentResult& result) {
  const auto& setup = result.setup;
  json j;
  j["name"] = config.name;
  j["version"] = kVersion;
  j["timestamp"] = utc_timestamp();
  j["config"] = config.source_text;
  j["error_log_base"] = 10;
  j["error_floor"] = 1e-300;
  j["window"] = config.window;
  j["window_averaging"] = "mean of log10 absolute errors";
  j["timing_mode"] = config.timing.mode == TimingMode::cpu ? "cpu" : "model";
  j["target"] = {{"kind", to_string(setup.target.kind())},
                 {"dimension", setup.target.dimension()},
                 {"gradient_numeric", setup.target.gradient_is_numeric()},
                 {"cost_multiplier", setup.target.cost_multiplier()}};
  if (auto z = setup.target.known_log_normalizer()) j["target"]["log_normalizer"] = *z;
  const auto& q = *setup.proposal;
  j["proposal"] = {{"kind", to_string(q.kind())}, {"theta", q.theta()}, {"preconditioned", setup.scaling.has_value()}};
  if (setup.tune) {
    json hist = json::array();
    for (const auto& a : setup.tune->history) hist.push_back({{"theta", a.theta}, {"rate", a.rate}});
    j["proposal"]["tuning"] = {{"theta", setup.tune->theta}, {"rate", setup.tune->rate}, {"history", hist}};
  }
  j["accept_mode"] = to_string(setup.mode);
  j["x0"] = to_std(setup.x0);
  j["burn_in"] = config.chain.burn_in;
  j["steps"] = config.chain.steps - config.chain.burn_in;
  j["setup_target_evaluations"] = setup.setup_target_evaluations;
  if (setup.gp) {
    const auto& data = setup.gp->data();
    j["gp"] = {{"rows", data.rows()},
               {"column_names", data.column_names},
               {"predictor_mean", to_std(data.predictor_mean)},
               {"predictor_stddev", to_std(data.predictor_stddev)},
               {"constant_column", data.constant_column},
               {"response_mean", data.response_mean},
               {"response_scale", data.response_scale}};
  }
  j["truth"] = result.truth;
  json seeds = json::array();
  for (const auto& r : result.runs) {
    seeds.push_back({{"seed", r.seed},
                     {"acceptance_rate", r.acceptance_rate},
                     {"chain_cpu_ns", r.chain_cpu_ns},
                     {"target_evaluations", r.target_evaluations},
                     {"total_cpu_ns", r.total_cpu_ns},
                     {"log_evidence", r.log_evidence},
                     {"mixture_runs", r.mixture_runs},
                     {"mixture_q_evaluations", r.mixture_q_evaluations},
                     {"cv_linear_fallback_rows", r.cv_linear_fallback_rows}});
  }
  j["seeds"] = seeds;
  json cells = json::array();
  for (const auto& c : result.unsupported) {
    cells.push_back({{"estimator", c.estimator}, {"test_function", c.test_function}, {"reason", c.reason}});
  }
  j["unsupported"] = cells;
  j["cv_linear_fallback_policy"] = "rows with a nonpositive adjusted density keep the unadjusted mixture";
  return j;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::filesystem::path output_dir(const ExperimentConfig& config, const RunOptions& options) {
  auto dir = options.output ? *options.output : config.output;
  if (dir.is_relative() && !options.output) dir = config.base_dir / dir;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "'");
  return dir;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  ExperimentResult result;
  result.setup = build_setup(config);
  result.truth = compute_truth(config, result.setup);
  const std::size_t reps = options.repetitions.value_or(config.repetitions);
  for (std::size_t r = 0; r < reps; ++r) {
    SeedContext ctx{config, result.setup, result.unsupported, r == 0};
    result.runs.push_back(run_seed(ctx, repetition_seed(config, r), options.keep_traces));
  }

  json meta = metadata(config, result);
  if (config.timing.mode == TimingMode::cpu && !result.runs.empty()) {
    const auto& q = *result.setup.proposal;
    double alpha = 0.0;
    for (const auto& r : result.runs) alpha += r.acceptance_rate;
    alpha /= static_cast<double>(result.runs.size());
    const auto tf = config.test_functions.front();
    const auto cost = measure_costs(result.setup.target, q, tf, result.setup.x0, alpha,
                                    config.chain.steps - config.chain.burn_in);
    result.setup.target.reset_counters();
    json cm = {{"alpha", cost.alpha},     {"steps", cost.steps},   {"c_f", cost.c_f},
               {"c_q", cost.c_q},         {"c_rho", cost.c_rho},   {"c_q_mixture", *cost.c_q_mixture},
               {"c_step", cost.c_step},   {"predicted_prolongation", prolongation_factor(cost)}};
    std::vector<double> ratios;
    for (const auto& r : result.runs) {
      const auto v = r.total_cpu_ns.find("vanilla");
      const auto m = r.total_cpu_ns.find("mcis");
      if (v != r.total_cpu_ns.end() && m != r.total_cpu_ns.end() && v->second > 0) {
        ratios.push_back(static_cast<double>(m->second) / static_cast<double>(v->second));
      }
    }
    if (!ratios.empty()) cm["measured_prolongation"] = median(ratios);
    meta["cost_model"] = cm;
  } else {
    const auto& t = config.timing;
    meta["cost_model"] = {{"c_f", t.c_f}, {"c_q", t.c_q}, {"c_rho", t.c_rho},
                          {"c_q_mixture", t.c_q_mixture}, {"c_step", t.c_step}, {"nominal", true}};
  }
  result.metadata_json = meta.dump(2);

  if (options.write_files) {
    const auto dir = output_dir(config, options);
    std::ostringstream raw;
    write_raw_csv(result, raw);
    write_file(dir / "raw.csv", raw.str());
    std::ostringstream curves;
    write_curves_csv(result, config.window, curves);
    write_file(dir / "curves.csv", curves.str());
    write_file(dir / "metadata.json", result.metadata_json + "\n");
  }
  return result;
}

void write_raw_csv(const ExperimentResult& result, std::ostream& out) {
  std::string buf;
  { CsvRow(buf) << "seed" << "step" << "cpu_ns" << "estimator" << "test_function" << "estimate" << "abs_error"; }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& run : result.runs) {
    for (const auto& s : run.series) {
      const auto it = result.truth.find(s.test_function);
      const double truth = it == result.truth.end() ? nan : it->second;
      for (std::size_t k = 0; k < s.size(); ++k) {
        CsvRow row(buf);
        row << run.seed << static_cast<std::uint64_t>(k + 1) << s.cpu_ns[k] << s.estimator
            << s.test_function << s.estimates[k] << std::abs(s.estimates[k] - truth);
      }
      out << buf;
      buf.clear();
    }
  }
  out << buf;
}

void write_curves_csv(const ExperimentResult& result, std::size_t window, std::ostream& out) {
  std::string buf;
  { CsvRow(buf) << "estimator" << "test_function" << "step" << "cpu_ns" << "mean_log10_abs_error"; }
  // Group series by (estimator, test function) in first-seen order.
  std::vector<std::pair<std::string, std::string>> keys;
  for (const auto& run : result.runs) {
    for (const auto& s : run.series) {
      std::pair<std::string, std::string> key{s.estimator, s.test_function};
      if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
    }
  }
  for (const auto& [est, tf] : keys) {
    const auto it = result.truth.find(tf);
    if (it == result.truth.end()) continue;
    std::vector<double> value_sum;
    std::vector<long double> cpu_sum;
    std::vector<std::size_t> step;
    std::size_t count = 0;
    for (const auto& run : result.runs) {
      for (const auto& s : run.series) {
        if (s.estimator != est || s.test_function != tf) continue;
        const auto curve = error_curve(s, it->second, window);
        if (count == 0) {
          value_sum.assign(curve.size(), 0.0);
          cpu_sum.assign(curve.size(), 0.0L);
          for (const auto& p : curve) step.push_back(p.step);
        }
        for (std::size_t i = 0; i < curve.size() && i < value_sum.size(); ++i) {
          value_sum[i] += curve[i].value;
          cpu_sum[i] += static_cast<long double>(curve[i].cpu_ns);
        }
        ++count;
      }
    }
    for (std::size_t i = 0; i < value_sum.size(); ++i) {
      CsvRow row(buf);
      row << est << tf << static_cast<std::uint64_t>(step[i])
          << static_cast<std::int64_t>(std::llround(static_cast<double>(cpu_sum[i] / count)))
          << value_sum[i] / static_cast<double>(count);
    }
    out << buf;
    buf.clear();
  }
}

std::vector<SweepRow> scaling_sweep(const ExperimentConfig& config, const RunOptions& options) {
  if (config.chain.accept != AcceptMode::metropolis_hastings) {
    throw InputError("the scaling sweep needs Metropolis-Hastings chains");
  }
  ExperimentConfig base = config;
  base.proposal.tune.reset();
  Setup setup = build_setup(base);
  const auto truth = compute_truth(base, setup);
  const auto& sw = config.sweep;

  double theta = 0.0;
  if (sw.start_theta) {
    theta = *sw.start_theta;
  } else {
    const auto pilot = config.proposal.tune ? config.proposal.tune->pilot_steps : std::size_t{2000};
    theta = tune_scale(setup.target, *setup.proposal, sw.start_rate, pilot,
                       splitmix64(config.seed ^ kSetupStream), setup.x0)
                .theta;
  }
  const std::size_t reps = options.repetitions.value_or(config.repetitions);

  struct Rung {
    double theta;
    double rate;
    std::map<std::pair<std::string, std::string>, double> error;
  };
  std::vector<Rung> rungs;
  std::vector<UnsupportedCell> ignored;
  for (std::size_t i = 0; i < sw.max_rungs; ++i, theta *= sw.factor) {
    Setup rung_setup = setup;
    rung_setup.proposal = setup.proposal->with_theta(theta);
    Rung rung{theta, 0.0, {}};
    std::map<std::pair<std::string, std::string>, std::size_t> counts;
    for (std::size_t r = 0; r < reps; ++r) {
      SeedContext ctx{base, rung_setup, ignored, false};
      const auto run = run_seed(ctx, repetition_seed(config, r), false);
      rung.rate += run.acceptance_rate;
      for (const auto& s : run.series) {
        const auto t = truth.find(s.test_function);
        if (t == truth.end()) continue;
        const std::pair<std::string, std::string> key{s.estimator, s.test_function};
        rung.error[key] += std::abs(s.final_estimate() - t->second);
        ++counts[key];
      }
    }
    rung.rate /= static_cast<double>(reps);
    for (auto& [key, v] : rung.error) v /= static_cast<double>(counts[key]);
    rungs.push_back(std::move(rung));
    if (rungs.back().rate < sw.min_rate) break;
  }

  std::stable_sort(rungs.begin(), rungs.end(),
                   [](const Rung& a, const Rung& b) { return a.rate < b.rate; });
  std::vector<SweepRow> rows;
  const auto half = static_cast<std::ptrdiff_t>((sw.rolling - 1) / 2);
  const auto n = static_cast<std::ptrdiff_t>(rungs.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    for (const auto& [key, unused] : rungs[static_cast<std::size_t>(i)].error) {
      double sum = 0.0;
      int cnt = 0;
      for (std::ptrdiff_t j = std::max<std::ptrdiff_t>(0, i - half);
           j <= std::min<std::ptrdiff_t>(n - 1, i + static_cast<std::ptrdiff_t>(sw.rolling) - 1 - half); ++j) {
        const auto& e = rungs[static_cast<std::size_t>(j)].error;
        if (auto it = e.find(key); it != e.end()) {
          sum += it->second;
          ++cnt;
        }
      }
      const auto& r = rungs[static_cast<std::size_t>(i)];
      rows.push_back({r.theta, r.rate, key.first, key.second, sum / cnt});
    }
  }
  if (options.write_files) {
    const auto dir = output_dir(config, options);
    std::ostringstream out;
    write_sweep_csv(rows, out);
    write_file(dir / "sweep.csv", out.str());
  }
  return rows;
}

void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out) {
  std::string buf;
  { CsvRow(buf) << "theta" << "acceptance_rate" << "estimator" << "test_function" << "mean_abs_error"; }
  for (const auto& r : rows) {
    CsvRow(buf) << r.theta << r.acceptance_rate << r.estimator << r.test_function << r.mean_abs_error;
  }
  out << buf;
}

}  // namespace mcis
