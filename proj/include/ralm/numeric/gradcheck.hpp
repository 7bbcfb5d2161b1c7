// Copyright 2026 The RALM Authors. All Rights Reserved.
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

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ralm/numeric/tape.hpp"

namespace ralm::nn {

struct NamedParameter {
  std::string group;
  Parameter* parameter;
};

/// Builds the scalar objective on the given tape from the current values of
/// the parameters. Must be deterministic.
using ForwardFn = std::function<Var(Tape&)>;

struct GradCheckOptions {
  double delta = 1e-4;
  double tolerance = 1e-4;
  /// Gradients smaller than this are compared on an absolute scale.
  double magnitude_floor = 1e-3;
};

struct GroupError {
  std::string group;
  double max_relative_error = 0.0;
  std::size_t coefficients = 0;
};

struct GradCheckReport {
  std::vector<GroupError> groups;
  double max_relative_error = 0.0;
  bool passed = true;
};

/// Runs forward + backward once and returns a copy of each parameter's
/// gradient. Parameter gradients are left zeroed.
std::vector<DenseMatrix> analytic_gradients(const ForwardFn& forward,
                                            const std::vector<NamedParameter>& params);

/// Compares supplied gradients against central differences
/// (f(x+d) - f(x-d)) / 2d, coefficient by coefficient.
GradCheckReport compare_with_finite_differences(const ForwardFn& forward,
                                                const std::vector<NamedParameter>& params,
                                                const std::vector<DenseMatrix>& analytic,
                                                const GradCheckOptions& options = {});

inline GradCheckReport finite_difference_check(const ForwardFn& forward,
                                               const std::vector<NamedParameter>& params,
                                               const GradCheckOptions& options = {}) {
  return compare_with_finite_differences(forward, params, analytic_gradients(forward, params),
                                         options);
}

}  // namespace ralm::nn
