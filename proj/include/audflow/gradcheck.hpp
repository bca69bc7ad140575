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

#ifndef AUDFLOW_GRADCHECK_H_
#define AUDFLOW_GRADCHECK_H_

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "audflow/tensor.hpp"

namespace audflow {

struct GradCheckEntry {
  std::string param;
  int64_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_err = 0.0;
  bool evaluable = true;  // false when f was non-finite at a perturbed point
  bool pass = false;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  bool all_pass = true;
  int64_t num_failed = 0;
};

using ParamMap = std::map<std::string, Tensor>;
using LossFn = std::function<double(const ParamMap&)>;

// Central-difference check of |analytic| against |f|, component by
// component, with rel_err = |a - n| / max(|a|, |n|, 1e-12). A component
// passes when rel_err < tol or |a - n| <= abs_tol (gradients near zero
// leave the relative test dominated by round-off). Components where f
// evaluates non-finite are flagged, never silently passed.
GradCheckReport GradCheck(const LossFn& f, const ParamMap& params,
                          const ParamMap& analytic, double step, double tol,
                          double abs_tol = 1e-8);

}  // namespace audflow

#endif  // AUDFLOW_GRADCHECK_H_
