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

#include "mcis/test_function.hpp"

#include <cmath>

#include "mcis/error.hpp"

namespace mcis {

std::string_view to_string(TestFunction kind) {
  switch (kind) {
    case TestFunction::identity:
      return "identity";
    case TestFunction::square:
      return "square";
    case TestFunction::cube:
      return "cube";
    case TestFunction::exp:
      return "exp";
  }
  return "unknown";
}

TestFunction parse_test_function(std::string_view name) {
  for (auto kind : kAllTestFunctions) {
    if (to_string(kind) == name) return kind;
  }
  throw InputError("unknown test function '" + std::string(name) + "'");
}

double test_function_eval(TestFunction kind, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() == 0) throw InputError("test function needs a non-empty point");
  double sum = 0.0;
  switch (kind) {
    case TestFunction::identity:
      sum = x.sum();
      break;
    case TestFunction::square:
      sum = x.squaredNorm();
      break;
    case TestFunction::cube:
      for (Eigen::Index i = 0; i < x.size(); ++i) sum += x[i] * x[i] * x[i];
      break;
    case TestFunction::exp:
      for (Eigen::Index i = 0; i < x.size(); ++i) sum += std::exp(x[i]);
      break;
  }
  return sum / static_cast<double>(x.size());
}

Integrand make_integrand(TestFunction kind) {
  return [kind](const Eigen::Ref<const Eigen::VectorXd>& x) { return test_function_eval(kind, x); };
}

}  // namespace mcis
