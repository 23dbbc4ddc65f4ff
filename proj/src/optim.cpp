// Copyright 2026 The TWOSL Authors. All Rights Reserved.
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

#include "twosl/optim.hpp"

#include <cmath>

#include "twosl/error.hpp"

namespace twosl {

void AdamState::update(std::span<double> params, std::span<const double> grads,
                       const AdamSettings& s) {
  if (params.size() != grads.size())
    throw ArgumentError("parameter/gradient size mismatch");
  if (m_.size() != params.size()) {
    m_.assign(params.size(), 0.0);
    v_.assign(params.size(), 0.0);
  }
  ++steps_;
  const double bc1 = 1.0 - std::pow(s.beta1, static_cast<double>(steps_));
  const double bc2 = 1.0 - std::pow(s.beta2, static_cast<double>(steps_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    double g = grads[i];
    if (s.decoupled_weight_decay) {
      params[i] -= s.learning_rate * s.weight_decay * params[i];
    } else {
      g += s.weight_decay * params[i];
    }
    m_[i] = s.beta1 * m_[i] + (1.0 - s.beta1) * g;
    v_[i] = s.beta2 * v_[i] + (1.0 - s.beta2) * g * g;
    const double m_hat = m_[i] / bc1;
    const double v_hat = v_[i] / bc2;
    params[i] -= s.learning_rate * m_hat / (std::sqrt(v_hat) + s.epsilon);
  }
}

}  // namespace twosl
