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

#include "mcis/mixture.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <thread>

#include "mcis/error.hpp"

namespace mcis {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;
constexpr double kMinDenominator = 1e-300;

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

bool same_column(const Eigen::Ref<const Eigen::MatrixXd>& m, Eigen::Index a, Eigen::Index b) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (std::bit_cast<std::uint64_t>(m(i, a)) != std::bit_cast<std::uint64_t>(m(i, b))) {
      return false;
    }
  }
  return true;
}

// Whitened, deduplicated mixture components.
struct Components {
  RowMajor centers;                    // d x R, whitened
  Eigen::ArrayXd log_fraction;         // log(n_r / K)
  std::vector<std::size_t> counts;     // n_r
  std::vector<std::size_t> column_run; // run index of each column
  std::size_t columns = 0;
  Eigen::VectorXd first_center;        // unwhitened
};

Components prepare(const Eigen::Ref<const Eigen::MatrixXd>& states,
                   const std::vector<std::size_t>& columns, const ProposalFamily& proposal) {
  const int d = proposal.dimension();
  Components out;
  out.columns = columns.size();
  out.column_run.resize(columns.size());

  // Runs of bitwise-identical states share one center evaluation.
  std::vector<Eigen::VectorXd> centers;
  std::vector<std::size_t> counts;
  for (std::size_t j = 0; j < columns.size(); ++j) {
    const auto col = static_cast<Eigen::Index>(columns[j]);
    if (j > 0 && same_column(states, static_cast<Eigen::Index>(columns[j - 1]), col)) {
      ++counts.back();
    } else {
      Eigen::VectorXd c = proposal.center(states.col(col));
      if (!centers.empty() && c == centers.back()) {
        ++counts.back();
      } else {
        centers.push_back(std::move(c));
        counts.push_back(1);
      }
    }
    out.column_run[j] = centers.size() - 1;
  }

  const auto runs = static_cast<Eigen::Index>(centers.size());
  out.centers.resize(d, runs);
  out.log_fraction.resize(runs);
  const double total = static_cast<double>(columns.size());
  out.first_center = centers.front();
  for (Eigen::Index r = 0; r < runs; ++r) {
    out.centers.col(r) = proposal.whiten(centers[static_cast<std::size_t>(r)]);
    out.log_fraction[r] = std::log(static_cast<double>(counts[static_cast<std::size_t>(r)]) / total);
  }
  out.counts = std::move(counts);
  return out;
}

double log_sum_exp(const Eigen::Ref<const Eigen::ArrayXd>& terms) {
  const double m = terms.maxCoeff();
  if (m == -std::numeric_limits<double>::infinity()) return m;
  return m + std::log((terms - m).exp().sum());
}

// c* over run values v_0..v_{R-1}; only run boundaries contribute.
double run_coefficient(const Eigen::Ref<const Eigen::ArrayXd>& v) {
  double num = 0.0;
  double den = 0.0;
  for (Eigen::Index r = 0; r + 1 < v.size(); ++r) {
    const double diff = v[r] - v[r + 1];
    num += v[r] * diff;
    den += diff * diff;
  }
  return den < kMinDenominator ? 0.0 : num / den;
}

struct RowOutputs {
  ProposalLogMatrix* m;
  const Components* comp;
  const MixtureOptions* options;
  double log_norm;
  const ProposalFamily* proposal;
  const Eigen::Ref<const Eigen::MatrixXd>* raw_probes;
};

void reduce_row(const RowOutputs& out, Eigen::Index i, const Eigen::ArrayXd& values) {
  auto& m = *out.m;
  const auto& comp = *out.comp;
  const double log_mix = log_sum_exp(values + comp.log_fraction);
  m.log_mixture[i] = log_mix;

  if (m.entries.size() > 0) {
    for (std::size_t j = 0; j < comp.columns; ++j) {
      m.entries(i, static_cast<Eigen::Index>(j)) = values[static_cast<Eigen::Index>(comp.column_run[j])];
    }
  }
  if (!out.options->control_variates) return;

  const auto runs = values.size();
  const double total = static_cast<double>(comp.columns);
  const auto& fixed = out.options->fixed_cv_coefficient;

  // Linear mode: the adjusted mixture telescopes to mixture - c (q_first - q_last) / K.
  const double vmax = values.maxCoeff();
  const Eigen::ArrayXd scaled = (values - vmax).exp();
  const double c_lin = fixed ? *fixed : run_coefficient(scaled);
  m.cv_coefficient_linear[i] = c_lin;
  if (c_lin == 0.0) {
    m.cv_log_mixture_linear[i] = log_mix;
  } else {
    double plain = 0.0;
    for (Eigen::Index r = 0; r < runs; ++r) {
      plain += static_cast<double>(comp.counts[static_cast<std::size_t>(r)]) * scaled[r];
    }
    const double adjusted = (plain - c_lin * (scaled[0] - scaled[runs - 1])) / total;
    if (adjusted > 0.0 && std::isfinite(adjusted)) {
      m.cv_log_mixture_linear[i] = vmax + std::log(adjusted);
    } else {
      m.cv_log_mixture_linear[i] = log_mix;
      m.cv_linear_fallback[static_cast<std::size_t>(i)] = 1;
    }
  }

  // Log mode: the last element of each run except the final one is shifted towards its successor.
  const double c_log = fixed ? *fixed : run_coefficient(values);
  m.cv_coefficient_log[i] = c_log;
  Eigen::ArrayXd terms(2 * runs);
  Eigen::Index t = 0;
  const double log_single = -std::log(total);
  for (Eigen::Index r = 0; r < runs; ++r) {
    const double shift = r + 1 < runs ? c_log * (values[r] - values[r + 1]) : 0.0;
    const auto n = comp.counts[static_cast<std::size_t>(r)];
    if (shift == 0.0) {
      terms[t++] = values[r] + comp.log_fraction[r];
      continue;
    }
    if (n > 1) terms[t++] = values[r] + std::log(static_cast<double>(n - 1) / total);
    terms[t++] = values[r] - shift + log_single;
  }
  m.cv_log_mixture_log[i] = log_sum_exp(terms.head(t));
}

void fill_rows(const RowOutputs& out, const RowMajor& probes, Eigen::Index begin,
               Eigen::Index end) {
  const auto& centers = out.comp->centers;
  const auto d = centers.rows();
  Eigen::ArrayXd sq(centers.cols());
  if (centers.cols() == 1) {
    // One component: the mixture is q itself, evaluated exactly as the proposal does.
    const auto& raw = *out.raw_probes;
    for (Eigen::Index i = begin; i < end; ++i) {
      const Eigen::ArrayXd values =
          Eigen::ArrayXd::Constant(1, out.proposal->log_pdf_from_center(raw.col(i), out.comp->first_center));
      reduce_row(out, i, values);
    }
    return;
  }
  for (Eigen::Index i = begin; i < end; ++i) {
    sq = (centers.row(0).transpose().array() - probes(0, i)).square();
    for (Eigen::Index k = 1; k < d; ++k) sq += (centers.row(k).transpose().array() - probes(k, i)).square();
    const Eigen::ArrayXd values = out.log_norm - 0.5 * sq;
    reduce_row(out, i, values);
  }
}

}  // namespace

std::string_view to_string(CvMode mode) { return mode == CvMode::linear ? "linear" : "log"; }

ProposalLogMatrix build_log_matrix(const Eigen::Ref<const Eigen::MatrixXd>& probes,
                                   const Eigen::Ref<const Eigen::MatrixXd>& states,
                                   const ProposalFamily& proposal, const MixtureOptions& options) {
  const int d = proposal.dimension();
  if (probes.rows() != d || states.rows() != d) {
    throw InputError("probe and state dimensions must match the proposal");
  }
  if (states.cols() < 1) throw InputError("the mixture needs at least one state");
  if (options.block_rows < 1) throw InputError("block_rows must be positive");

  std::vector<std::size_t> columns;
  if (options.column_subset) {
    columns = *options.column_subset;
    if (columns.empty()) throw InputError("column subset is empty");
    for (auto j : columns) {
      if (j >= static_cast<std::size_t>(states.cols())) throw InputError("column index out of range");
    }
    if (options.control_variates && !options.fixed_cv_coefficient) {
      bool contiguous = columns.size() == static_cast<std::size_t>(states.cols());
      for (std::size_t j = 0; contiguous && j < columns.size(); ++j) contiguous = columns[j] == j;
      if (!contiguous) throw InputError("control variates need all columns in chain order");
    }
  } else {
    columns.resize(static_cast<std::size_t>(states.cols()));
    for (std::size_t j = 0; j < columns.size(); ++j) columns[j] = j;
  }

  const Components comp = prepare(states, columns, proposal);
  const auto rows = probes.cols();
  RowMajor white(d, rows);
  for (Eigen::Index i = 0; i < rows; ++i) white.col(i) = proposal.whiten(probes.col(i));

  ProposalLogMatrix m;
  m.rows = static_cast<std::size_t>(rows);
  m.columns = columns.size();
  m.runs = comp.counts.size();
  m.q_evaluations = static_cast<std::uint64_t>(m.rows) * m.runs;
  m.nominal_q_evaluations = static_cast<std::uint64_t>(m.rows) * m.columns;
  m.log_mixture.resize(rows);
  if (options.store_entries) m.entries.resize(rows, static_cast<Eigen::Index>(m.columns));
  if (options.control_variates) {
    m.has_control_variates = true;
    m.cv_coefficient_linear.resize(rows);
    m.cv_coefficient_log.resize(rows);
    m.cv_log_mixture_linear.resize(rows);
    m.cv_log_mixture_log.resize(rows);
    m.cv_linear_fallback.assign(m.rows, 0);
  }

  const RowOutputs out{&m, &comp, &options, proposal.log_normalizer(), &proposal, &probes};
  const auto block = static_cast<Eigen::Index>(options.block_rows);
  const Eigen::Index blocks = (rows + block - 1) / block;
  const auto threads = static_cast<Eigen::Index>(
      std::clamp<unsigned>(options.threads, 1u, static_cast<unsigned>(std::max<Eigen::Index>(blocks, 1))));
  if (threads <= 1) {
    fill_rows(out, white, 0, rows);
  } else {
    std::vector<std::thread> pool;
    for (Eigen::Index t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        for (Eigen::Index b = t; b < blocks; b += threads) {
          fill_rows(out, white, b * block, std::min(rows, (b + 1) * block));
        }
      });
    }
    for (auto& th : pool) th.join();
  }
  if (options.control_variates) {
    m.cv_linear_fallback_rows = static_cast<std::size_t>(
        std::count(m.cv_linear_fallback.begin(), m.cv_linear_fallback.end(), 1));
  }
  return m;
}

ProposalLogMatrix build_log_matrix(const ChainTrace& trace, const ProposalFamily& proposal,
                                   const MixtureOptions& options) {
  if (trace.size() == 0) throw InputError("empty trace");
  return build_log_matrix(trace.proposals, trace.states, proposal, options);
}

const Eigen::VectorXd& mixture_log_pdf(const ProposalLogMatrix& matrix) {
  return matrix.log_mixture;
}

const Eigen::VectorXd& cv_adjusted_mixture(const ProposalLogMatrix& matrix, CvMode mode) {
  if (!matrix.has_control_variates) {
    throw InputError("matrix was built without control variates");
  }
  return mode == CvMode::linear ? matrix.cv_log_mixture_linear : matrix.cv_log_mixture_log;
}

double cv_coefficient(std::span<const double> log_row, CvMode mode) {
  if (log_row.size() < 2) return 0.0;
  std::vector<double> q(log_row.begin(), log_row.end());
  if (mode == CvMode::linear) {
    const double top = *std::max_element(q.begin(), q.end());
    for (auto& v : q) v = std::exp(v - top);
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t k = 0; k + 1 < q.size(); ++k) {
    num += q[k] * q[k] - q[k] * q[k + 1];
    den += (q[k] - q[k + 1]) * (q[k] - q[k + 1]);
  }
  return den < kMinDenominator ? 0.0 : num / den;
}

ExactMarginal::ExactMarginal(const Target& target, const ProposalFamily& proposal,
                             AcceptMode mode) {
  const int d = proposal.dimension();
  if (target.dimension() != d) throw InputError("target and proposal dimensions differ");
  if (proposal.kind() == ProposalKind::independent) {
    independent_ = proposal;
    return;
  }
  const bool gaussian_family = target.kind() == TargetKind::gaussian ||
                               target.kind() == TargetKind::mixture_of_gaussians;
  if (!gaussian_family) {
    throw UnsupportedOracleError("no closed-form proposal marginal for a " +
                                 std::string(to_string(target.kind())) + " target");
  }

  const double theta = proposal.theta();
  auto add = [&](double weight, const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov) {
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) throw NumericalError("marginal covariance is not SPD", {});
    Component c{std::log(weight), mean, llt.matrixL(), 0.0};
    c.log_norm = -d * kHalfLog2Pi - c.chol.diagonal().array().log().sum();
    components_.push_back(std::move(c));
  };

  if (proposal.kind() == ProposalKind::random_walk && mode == AcceptMode::metropolis_hastings) {
    const Eigen::MatrixXd kernel = proposal.covariance();
    for (const auto& comp : target.components()) {
      Eigen::MatrixXd cov = kernel;
      cov.diagonal() += comp.stddev.array().square().matrix();
      add(comp.weight, comp.mean, cov);
    }
    return;
  }
  if (proposal.kind() == ProposalKind::langevin && target.kind() == TargetKind::gaussian) {
    const auto& comp = target.components().front();
    const Eigen::ArrayXd var = comp.stddev.array().square();
    const Eigen::ArrayXd a = 1.0 - theta / var;
    Eigen::ArrayXd marginal;
    if (mode == AcceptMode::metropolis_hastings) {
      marginal = a.square() * var + 2.0 * theta;
    } else {
      if ((a.abs() >= 1.0).any()) {
        throw UnsupportedOracleError("Langevin step too large: the recursion has no stationary law");
      }
      marginal = 2.0 * theta / (1.0 - a.square());
    }
    add(1.0, comp.mean, marginal.matrix().asDiagonal());
    return;
  }
  throw UnsupportedOracleError("no closed-form proposal marginal for " +
                               std::string(to_string(proposal.kind())) + " proposals on a " +
                               std::string(to_string(target.kind())) + " target in " +
                               std::string(to_string(mode)) + " mode");
}

double ExactMarginal::log_pdf(const Eigen::Ref<const Eigen::VectorXd>& y) const {
  if (independent_) return independent_->log_pdf_from_center(y, independent_->fixed_mean());
  Eigen::ArrayXd terms(static_cast<Eigen::Index>(components_.size()));
  for (std::size_t c = 0; c < components_.size(); ++c) {
    const auto& comp = components_[c];
    if (y.size() != comp.mean.size()) throw InputError("point has the wrong dimension");
    const Eigen::VectorXd z = comp.chol.triangularView<Eigen::Lower>().solve(y - comp.mean);
    terms[static_cast<Eigen::Index>(c)] = comp.log_weight + comp.log_norm - 0.5 * z.squaredNorm();
  }
  if (terms.size() == 1) return terms[0];
  return log_sum_exp(terms);
}

double exact_rho_a_log_pdf(const Target& target, const ProposalFamily& proposal, AcceptMode mode,
                           const Eigen::Ref<const Eigen::VectorXd>& y) {
  return ExactMarginal(target, proposal, mode).log_pdf(y);
}

}  // namespace mcis
