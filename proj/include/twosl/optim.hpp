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

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace twosl {

struct AdamSettings {
  double learning_rate = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;
  // true: AdamW (decay applied to the weights); false: L2 term added to the
  // gradient, as torch.optim.Adam does.
  bool decoupled_weight_decay = false;
};

// First/second moment estimates for one contiguous parameter block.
class AdamState {
 public:
  AdamState() = default;
  explicit AdamState(std::size_t size) : m_(size, 0.0), v_(size, 0.0) {}

  void update(std::span<double> params, std::span<const double> grads,
              const AdamSettings& settings);
  std::int64_t steps() const { return steps_; }

 private:
  std::vector<double> m_;
  std::vector<double> v_;
  std::int64_t steps_ = 0;
};

}  // namespace twosl
