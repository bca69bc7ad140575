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
//
// Shared helpers for the unit tests: random tensors and a generic
// finite-difference gradient probe for single-op checks.

#ifndef AUDFLOW_TESTS_TEST_UTIL_H_
#define AUDFLOW_TESTS_TEST_UTIL_H_

#include <cmath>
#include <functional>
#include <vector>

#include "audflow/ops.hpp"
#include "audflow/rng.hpp"

namespace audflow::testutil {

inline Tensor RandomTensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.data) v = rng.Uniform(lo, hi);
  return t;
}

// Builds a scalar graph over |inputs| via |f| and compares every analytic
// input gradient against central differences. Returns the worst relative
// error (with a 1e-8 absolute floor in the denominator-free comparison).
inline double MaxGradError(
    const std::function<Var(Tape&, const std::vector<Var>&)>& f,
    std::vector<Tensor> inputs, double step = 1e-6) {
  std::vector<Tensor> analytic;
  {
    Tape t;
    std::vector<Var> vars;
    for (const Tensor& in : inputs) vars.push_back(t.Leaf(in, true));
    Var loss = f(t, vars);
    t.Backward(loss);
    for (Var v : vars) analytic.push_back(t.grad(v));
  }
  auto eval = [&](const std::vector<Tensor>& ins) {
    Tape t;
    std::vector<Var> vars;
    for (const Tensor& in : ins) vars.push_back(t.Leaf(in, false));
    return t.value(f(t, vars)).data[0];
  };
  double worst = 0.0;
  for (size_t k = 0; k < inputs.size(); ++k) {
    for (size_t i = 0; i < inputs[k].data.size(); ++i) {
      const double orig = inputs[k].data[i];
      inputs[k].data[i] = orig + step;
      const double fp = eval(inputs);
      inputs[k].data[i] = orig - step;
      const double fm = eval(inputs);
      inputs[k].data[i] = orig;
      const double numeric = (fp - fm) / (2.0 * step);
      const double a = analytic[k].data[i];
      // Absolute floor mirrors GradCheck: differences below 1e-8 are
      // finite-difference noise, not gradient errors.
      if (std::abs(a - numeric) <= 1e-8) continue;
      const double err =
          std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace audflow::testutil

#endif  // AUDFLOW_TESTS_TEST_UTIL_H_
