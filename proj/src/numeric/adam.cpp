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

#include "ralm/numeric/adam.hpp"

#include <cmath>

namespace ralm::nn {

void adam_step(Parameter& p, const AdamConfig& config) {
  if (!(config.learning_rate > 0.0)) throw ArgumentError("adam_step: learning rate must be > 0");
  if (!p.gradient.allFinite()) {
    throw TrainingDivergenceError("adam_step: non-finite gradient for " +
                                  shape_string(p.gradient) + " parameter");
  }
  ++p.step_count;
  const double t = static_cast<double>(p.step_count);
  p.adam_m = config.beta1 * p.adam_m + (1.0 - config.beta1) * p.gradient;
  p.adam_v = config.beta2 * p.adam_v + (1.0 - config.beta2) * p.gradient.cwiseAbs2();
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  p.value.array() -= config.learning_rate * (p.adam_m.array() / c1) /
                     ((p.adam_v.array() / c2).sqrt() + config.epsilon);
  p.gradient.setZero();
}

DenseMatrix glorot_uniform(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-limit, limit);
  DenseMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

}  // namespace ralm::nn
