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

#ifndef MCIS_GP_HPP
#define MCIS_GP_HPP

#include <Eigen/Core>

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mcis {

/// Regression data with standardized predictors.
struct RegressionDataset {
  Eigen::MatrixXd predictors;  // n x p
  Eigen::VectorXd responses;   // n
  std::vector<std::string> column_names;  // predictors first, response last

  // Standardization applied to each predictor column: z = (x - mean) / scale, where scale is the
  // sample standard deviation, or 1 for a constant column.
  Eigen::VectorXd predictor_mean;
  Eigen::VectorXd predictor_stddev;  // raw standard deviation (0 for constant columns)
  std::vector<bool> constant_column;

  // Response standardization (identity unless requested).
  double response_mean = 0.0;
  double response_scale = 1.0;

  Eigen::Index rows() const { return responses.size(); }
  Eigen::Index predictor_count() const { return predictors.cols(); }
};

struct LoadOptions {
  std::optional<std::size_t> max_rows;
  bool standardize_response = false;
};

/// Reads delimiter-separated numeric text (tab, comma or whitespace, detected from the first data
/// line). Column indices are 1-based, as in the usual description of such files. Lines that are
/// blank or start with '#' are skipped. With max_rows, the first max_rows data rows are kept.
RegressionDataset load_dataset(const std::filesystem::path& path,
                               std::span<const int> predictor_columns, int response_column,
                               const LoadOptions& options = {});

/// Unconstrained GP hyperparameters.
///
/// ARD variances are softplus(log_ard) (so log_ard = log(exp(var) - 1)), the likelihood scale is
/// exp(log_likelihood_scale). The flat vector layout is [log_ard..., log_likelihood_scale, mean].
struct GpHyperparameters {
  Eigen::VectorXd log_ard;
  double log_likelihood_scale = 0.0;
  double mean = 0.0;

  Eigen::VectorXd ard_variances() const;
  double likelihood_scale() const;

  Eigen::VectorXd to_vector() const;
  static GpHyperparameters from_vector(const Eigen::Ref<const Eigen::VectorXd>& v);

  /// Inverse transform from natural (positive) parameters.
  static GpHyperparameters from_natural(const Eigen::Ref<const Eigen::VectorXd>& ard_variances,
                                        double likelihood_scale, double mean);
};

double softplus(double a);
double inverse_softplus(double v);

struct GpEvaluation {
  double log_posterior = 0.0;
  double jitter = 0.0;  // absolute jitter that made the factorization succeed
};

/// Log posterior of a unit-amplitude squared-exponential ARD GP regression model:
/// standard normal priors on every unconstrained coordinate, Gaussian marginal likelihood
/// y ~ N(mean * 1, K_ard + lambda I + jitter I) with K_ard[i,j] = exp(-1/2 sum_m d_m^2 / var_m).
class GpPosterior {
 public:
  /// Relative jitter levels tried after a failed plain factorization, scaled by the mean
  /// diagonal of K_ard + lambda I.
  static constexpr std::array<double, 3> kJitterLevels = {1e-8, 1e-6, 1e-4};

  explicit GpPosterior(RegressionDataset data);

  const RegressionDataset& data() const { return data_; }
  int dimension() const { return static_cast<int>(data_.predictor_count()) + 2; }

  /// Throws NumericalError if every jitter level fails.
  GpEvaluation evaluate(const GpHyperparameters& params) const;
  double log_posterior(const Eigen::Ref<const Eigen::VectorXd>& theta) const;

  /// Analytic gradient with respect to the unconstrained vector.
  Eigen::VectorXd gradient(const Eigen::Ref<const Eigen::VectorXd>& theta) const;

 private:
  RegressionDataset data_;
  // Pairwise squared differences per predictor, each n x n.
  std::vector<Eigen::MatrixXd> sq_diff_;
};

/// Standard normal log density summed over all coordinates.
double standard_normal_log_prior(const Eigen::Ref<const Eigen::VectorXd>& theta);

}  // namespace mcis

#endif  // MCIS_GP_HPP
