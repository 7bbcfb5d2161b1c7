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

#include "ralm/numeric/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace ralm::nn {

namespace {

double evaluate(const ForwardFn& forward) {
  Tape tape(false);
  return forward(tape).scalar();
}

}  // namespace

std::vector<DenseMatrix> analytic_gradients(const ForwardFn& forward,
                                            const std::vector<NamedParameter>& params) {
  for (const auto& np : params) np.parameter->zero_grad();
  {
    Tape tape;
    Var loss = forward(tape);
    tape.backward(loss);
  }
  std::vector<DenseMatrix> out;
  out.reserve(params.size());
  for (const auto& np : params) {
    out.push_back(np.parameter->gradient);
    np.parameter->zero_grad();
  }
  return out;
}

GradCheckReport compare_with_finite_differences(const ForwardFn& forward,
                                                const std::vector<NamedParameter>& params,
                                                const std::vector<DenseMatrix>& analytic,
                                                const GradCheckOptions& options) {
  if (analytic.size() != params.size()) {
    throw ArgumentError("finite_difference_check: one gradient per parameter required");
  }
  std::map<std::string, GroupError> groups;
  std::vector<std::string> order;
  for (std::size_t p = 0; p < params.size(); ++p) {
    Parameter& param = *params[p].parameter;
    const DenseMatrix& grad = analytic[p];
    if (grad.rows() != param.rows() || grad.cols() != param.cols()) {
      throw DimensionError("finite_difference_check: gradient shape mismatch");
    }
    auto [it, fresh] = groups.try_emplace(params[p].group);
    if (fresh) {
      it->second.group = params[p].group;
      order.push_back(params[p].group);
    }
    GroupError& ge = it->second;
    for (Eigen::Index i = 0; i < param.value.size(); ++i) {
      double& x = param.value.data()[i];
      const double saved = x;
      x = saved + options.delta;
      const double up = evaluate(forward);
      x = saved - options.delta;
      const double down = evaluate(forward);
      x = saved;
      const double numeric = (up - down) / (2.0 * options.delta);
      const double a = grad.data()[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), options.magnitude_floor});
      ge.max_relative_error = std::max(ge.max_relative_error, std::abs(a - numeric) / denom);
      ++ge.coefficients;
    }
  }
  GradCheckReport report;
  for (const auto& name : order) {
    const GroupError& ge = groups.at(name);
    report.max_relative_error = std::max(report.max_relative_error, ge.max_relative_error);
    report.groups.push_back(ge);
  }
  report.passed = report.max_relative_error < options.tolerance;
  return report;
}

}  // namespace ralm::nn
