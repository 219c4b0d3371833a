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

#include "mcis/gp.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "mcis/error.hpp"

namespace mcis {

namespace {

constexpr double kLog2Pi = 1.83787706640934548356;

enum class Delimiter { tab, comma, whitespace };

Delimiter detect_delimiter(std::string_view line) {
  if (line.find('\t') != std::string_view::npos) return Delimiter::tab;
  if (line.find(',') != std::string_view::npos) return Delimiter::comma;
  return Delimiter::whitespace;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_fields(std::string_view line, Delimiter delim) {
  std::vector<std::string_view> fields;
  if (delim == Delimiter::whitespace) {
    std::size_t pos = 0;
    while (pos < line.size()) {
      pos = line.find_first_not_of(" \t\r", pos);
      if (pos == std::string_view::npos) break;
      auto end = line.find_first_of(" \t\r", pos);
      if (end == std::string_view::npos) end = line.size();
      fields.push_back(line.substr(pos, end - pos));
      pos = end;
    }
    return fields;
  }
  const char sep = delim == Delimiter::tab ? '\t' : ',';
  std::size_t pos = 0;
  while (true) {
    const auto end = line.find(sep, pos);
    fields.push_back(trim(line.substr(pos, end == std::string_view::npos ? end : end - pos)));
    if (end == std::string_view::npos) break;
    pos = end + 1;
  }
  return fields;
}

double parse_cell(std::string_view text, std::size_t line, std::size_t column) {
  double value = 0.0;
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw ParseError("non-numeric cell '" + std::string(text) + "'", line, column);
  }
  if (!std::isfinite(value)) throw ParseError("non-finite cell", line, column);
  return value;
}

double sigmoid(double a) {
  if (a >= 0.0) return 1.0 / (1.0 + std::exp(-a));
  const double e = std::exp(a);
  return e / (1.0 + e);
}

}  // namespace

RegressionDataset load_dataset(const std::filesystem::path& path,
                               std::span<const int> predictor_columns, int response_column,
                               const LoadOptions& options) {
  if (predictor_columns.empty()) throw InputError("no predictor columns selected");
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset '" + path.string() + "'");

  std::vector<std::vector<double>> rows;
  std::optional<Delimiter> delim;
  std::size_t width = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto content = trim(line);
    if (content.empty() || content.front() == '#') continue;
    if (options.max_rows && rows.size() >= *options.max_rows) break;
    if (!delim) delim = detect_delimiter(content);
    const auto fields = split_fields(content, *delim);
    if (width == 0) {
      width = fields.size();
      const auto max_col = std::max(*std::max_element(predictor_columns.begin(),
                                                      predictor_columns.end()),
                                    response_column);
      const auto min_col = std::min(*std::min_element(predictor_columns.begin(),
                                                      predictor_columns.end()),
                                    response_column);
      if (min_col < 1 || static_cast<std::size_t>(max_col) > width) {
        throw InputError("column index out of range: file has " + std::to_string(width) +
                         " columns");
      }
    } else if (fields.size() != width) {
      throw ParseError("expected " + std::to_string(width) + " fields, found " +
                           std::to_string(fields.size()),
                       line_no, std::min(fields.size(), width) + 1);
    }
    std::vector<double> values(width);
    for (std::size_t c = 0; c < width; ++c) values[c] = parse_cell(fields[c], line_no, c + 1);
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw InputError("dataset '" + path.string() + "' has no data rows");

  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto p = static_cast<Eigen::Index>(predictor_columns.size());
  RegressionDataset data;
  data.predictors.resize(n, p);
  data.responses.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) data.predictors(i, j) = rows[i][predictor_columns[j] - 1];
    data.responses[i] = rows[i][response_column - 1];
  }
  for (auto c : predictor_columns) data.column_names.push_back("column_" + std::to_string(c));
  data.column_names.push_back("column_" + std::to_string(response_column));

  // Population standard deviation; a constant column is centered but divided by 1.
  data.predictor_mean = data.predictors.colwise().mean().transpose();
  data.predictor_stddev.resize(p);
  data.constant_column.assign(p, false);
  for (Eigen::Index j = 0; j < p; ++j) {
    auto col = data.predictors.col(j).array() - data.predictor_mean[j];
    const double sd = std::sqrt(col.square().sum() / static_cast<double>(n));
    data.predictor_stddev[j] = sd;
    const bool constant = !(sd > 0.0);
    data.constant_column[j] = constant;
    data.predictors.col(j) = (col / (constant ? 1.0 : sd)).matrix();
  }
  if (options.standardize_response) {
    data.response_mean = data.responses.mean();
    const double sd =
        std::sqrt((data.responses.array() - data.response_mean).square().sum() /
                  static_cast<double>(n));
    data.response_scale = sd > 0.0 ? sd : 1.0;
    data.responses = (data.responses.array() - data.response_mean) / data.response_scale;
  }
  return data;
}

double softplus(double a) {
  if (a > 30.0) return a + std::log1p(std::exp(-a));
  return std::log1p(std::exp(a));
}

double inverse_softplus(double v) {
  if (!(v > 0.0)) throw InputError("softplus inverse needs a positive value");
  if (v > 30.0) return v + std::log(-std::expm1(-v));
  return std::log(std::expm1(v));
}

Eigen::VectorXd GpHyperparameters::ard_variances() const {
  return log_ard.unaryExpr([](double a) { return softplus(a); });
}

double GpHyperparameters::likelihood_scale() const { return std::exp(log_likelihood_scale); }

Eigen::VectorXd GpHyperparameters::to_vector() const {
  Eigen::VectorXd v(log_ard.size() + 2);
  v << log_ard, log_likelihood_scale, mean;
  return v;
}

GpHyperparameters GpHyperparameters::from_vector(const Eigen::Ref<const Eigen::VectorXd>& v) {
  if (v.size() < 3) throw InputError("GP parameter vector needs at least three entries");
  GpHyperparameters params;
  const auto p = v.size() - 2;
  params.log_ard = v.head(p);
  params.log_likelihood_scale = v[p];
  params.mean = v[p + 1];
  return params;
}

GpHyperparameters GpHyperparameters::from_natural(
    const Eigen::Ref<const Eigen::VectorXd>& ard_variances, double likelihood_scale, double mean) {
  if (!(likelihood_scale > 0.0)) throw InputError("likelihood scale must be positive");
  GpHyperparameters params;
  params.log_ard = ard_variances.unaryExpr([](double v) { return inverse_softplus(v); });
  params.log_likelihood_scale = std::log(likelihood_scale);
  params.mean = mean;
  return params;
}

double standard_normal_log_prior(const Eigen::Ref<const Eigen::VectorXd>& theta) {
  return -0.5 * theta.squaredNorm() - 0.5 * kLog2Pi * static_cast<double>(theta.size());
}

GpPosterior::GpPosterior(RegressionDataset data) : data_(std::move(data)) {
  if (data_.predictors.rows() != data_.responses.size()) {
    throw InputError("predictor and response row counts differ");
  }
  if (data_.predictors.cols() < 1) throw InputError("GP needs at least one predictor");
  if (!data_.predictors.allFinite() || !data_.responses.allFinite()) {
    throw InputError("dataset has non-finite entries");
  }
  const auto n = data_.rows();
  for (Eigen::Index m = 0; m < data_.predictor_count(); ++m) {
    const auto col = data_.predictors.col(m);
    Eigen::MatrixXd d2(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      d2.col(j) = (col.array() - col[j]).square().matrix();
    }
    sq_diff_.push_back(std::move(d2));
  }
}

namespace {

struct Factorization {
  Eigen::LLT<Eigen::MatrixXd> llt;
  Eigen::MatrixXd kernel;  // K_ard without the diagonal terms
  double jitter = 0.0;
};

Factorization factorize(const std::vector<Eigen::MatrixXd>& sq_diff,
                        const GpHyperparameters& params, Eigen::Index n) {
  const Eigen::VectorXd var = params.ard_variances();
  const double lambda = params.likelihood_scale();
  Factorization f;
  Eigen::MatrixXd scaled = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t m = 0; m < sq_diff.size(); ++m) scaled += sq_diff[m] / var[m];
  f.kernel = (-0.5 * scaled.array()).exp().matrix();

  Eigen::MatrixXd cov = f.kernel;
  cov.diagonal().array() += lambda;
  const double mean_diag = cov.diagonal().mean();

  std::vector<double> attempted;
  f.llt.compute(cov);
  if (f.llt.info() == Eigen::Success) return f;
  attempted.push_back(0.0);
  for (double level : GpPosterior::kJitterLevels) {
    const double jitter = level * mean_diag;
    attempted.push_back(jitter);
    Eigen::MatrixXd jittered = cov;
    jittered.diagonal().array() += jitter;
    f.llt.compute(jittered);
    if (f.llt.info() == Eigen::Success) {
      f.jitter = jitter;
      return f;
    }
  }
  throw NumericalError("GP covariance is not positive definite after jitter escalation",
                       std::move(attempted));
}

}  // namespace

GpEvaluation GpPosterior::evaluate(const GpHyperparameters& params) const {
  const Eigen::VectorXd theta = params.to_vector();
  if (params.log_ard.size() != data_.predictor_count()) {
    throw InputError("GP parameters do not match the predictor count");
  }
  if (!theta.allFinite()) throw InputError("GP parameters must be finite");

  GpEvaluation out;
  out.log_posterior = standard_normal_log_prior(theta);
  const auto n = data_.rows();
  if (n == 0) return out;

  const auto f = factorize(sq_diff_, params, n);
  const Eigen::VectorXd resid = data_.responses.array() - params.mean;
  const Eigen::VectorXd alpha = f.llt.solve(resid);
  const double log_det = 2.0 * f.llt.matrixLLT().diagonal().array().log().sum();
  out.log_posterior += -0.5 * resid.dot(alpha) - 0.5 * log_det - 0.5 * kLog2Pi * n;
  out.jitter = f.jitter;
  return out;
}

double GpPosterior::log_posterior(const Eigen::Ref<const Eigen::VectorXd>& theta) const {
  return evaluate(GpHyperparameters::from_vector(theta)).log_posterior;
}

Eigen::VectorXd GpPosterior::gradient(const Eigen::Ref<const Eigen::VectorXd>& theta) const {
  const auto params = GpHyperparameters::from_vector(theta);
  if (params.log_ard.size() != data_.predictor_count()) {
    throw InputError("GP parameters do not match the predictor count");
  }
  Eigen::VectorXd grad = -theta;  // standard normal prior
  const auto n = data_.rows();
  if (n == 0) return grad;

  const auto f = factorize(sq_diff_, params, n);
  const Eigen::VectorXd resid = data_.responses.array() - params.mean;
  const Eigen::VectorXd alpha = f.llt.solve(resid);
  const Eigen::MatrixXd inv = f.llt.solve(Eigen::MatrixXd::Identity(n, n));
  // d logML / d C = 1/2 (alpha alpha^T - C^-1)
  const Eigen::MatrixXd outer = alpha * alpha.transpose() - inv;

  const Eigen::VectorXd var = params.ard_variances();
  const auto p = data_.predictor_count();
  for (Eigen::Index m = 0; m < p; ++m) {
    // dK/dvar_m = K .* D_m / (2 var_m^2); dvar_m/da_m = sigmoid(a_m)
    const double dvar = sigmoid(params.log_ard[m]);
    const double s = (outer.array() * f.kernel.array() * sq_diff_[m].array()).sum();
    grad[m] += 0.5 * s / (2.0 * var[m] * var[m]) * dvar;
  }
  const double lambda = params.likelihood_scale();
  grad[p] += 0.5 * lambda * outer.trace();
  grad[p + 1] += alpha.sum();
  return grad;
}

}  // namespace mcis
