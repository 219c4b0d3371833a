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

#ifndef MCIS_TEST_FUNCTION_HPP
#define MCIS_TEST_FUNCTION_HPP

#include <Eigen/Core>

#include <array>
#include <functional>
#include <string>
#include <string_view>

namespace mcis {

/// Coordinate-averaged integrands f(x) = d^-1 sum_i phi(x_i).
enum class TestFunction { identity, square, cube, exp };

inline constexpr std::array<TestFunction, 4> kAllTestFunctions = {
    TestFunction::identity, TestFunction::square, TestFunction::cube, TestFunction::exp};

std::string_view to_string(TestFunction kind);

/// Throws InputError on an unknown name.
TestFunction parse_test_function(std::string_view name);

double test_function_eval(TestFunction kind, const Eigen::Ref<const Eigen::VectorXd>& x);

/// Generic integrand used by the estimators.
using Integrand = std::function<double(const Eigen::Ref<const Eigen::VectorXd>&)>;

Integrand make_integrand(TestFunction kind);

}  // namespace mcis

#endif  // MCIS_TEST_FUNCTION_HPP
