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

#ifndef AUDFLOW_ADAM_H_
#define AUDFLOW_ADAM_H_

#include <map>
#include <string>

#include "audflow/tensor.hpp"

namespace audflow {

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction. Moment buffers are keyed by parameter name and
// created lazily on first step; std::map keeps the update order stable.
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {
    if (cfg_.lr <= 0.0) throw std::invalid_argument("Adam: lr must be > 0");
  }

  // In-place update of every entry of |params| that has a gradient in
  // |grads|. Throws on shape mismatch or a non-finite gradient component,
  // naming the parameter.
  void Step(std::map<std::string, Tensor>& params,
            const std::map<std::string, Tensor>& grads);

  int64_t step_count() const { return step_; }
  const AdamConfig& config() const { return cfg_; }

  // Checkpoint access.
  std::map<std::string, Tensor>& first_moments() { return m_; }
  std::map<std::string, Tensor>& second_moments() { return v_; }
  void set_step_count(int64_t t) { step_ = t; }

 private:
  AdamConfig cfg_;
  int64_t step_ = 0;
  std::map<std::string, Tensor> m_, v_;
};

}  // namespace audflow

#endif  // AUDFLOW_ADAM_H_
