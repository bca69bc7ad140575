// Copyright 2026 The Audflow Authors.
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

#include "audflow/adam.hpp"

#include <cmath>

namespace audflow {

void Adam::Step(std::map<std::string, Tensor>& params,
                const std::map<std::string, Tensor>& grads) {
  for (const auto& [name, g] : grads) {
    if (!g.all_finite())
      throw std::runtime_error("Adam: non-finite gradient for parameter '" + name + "'");
    if (params.find(name) == params.end())
      throw std::invalid_argument("Adam: gradient for unknown parameter '" + name + "'");
    if (params.at(name).shape != g.shape)
      throw std::invalid_argument("Adam: shape mismatch for parameter '" + name + "'");
  }
  ++step_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
  for (const auto& [name, g] : grads) {
    Tensor& p = params.at(name);
    auto mit = m_.find(name);
    if (mit == m_.end()) {
      m_.emplace(name, Tensor(p.shape));
      v_.emplace(name, Tensor(p.shape));
    }
    Tensor& m = m_.at(name);
    Tensor& v = v_.at(name);
    for (int64_t i = 0; i < p.size(); ++i) {
      m.data[i] = cfg_.beta1 * m.data[i] + (1.0 - cfg_.beta1) * g.data[i];
      v.data[i] = cfg_.beta2 * v.data[i] + (1.0 - cfg_.beta2) * g.data[i] * g.data[i];
      const double mhat = m.data[i] / bc1;
      const double vhat = v.data[i] / bc2;
      p.data[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

}  // namespace audflow
