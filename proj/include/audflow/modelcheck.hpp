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
// Whole-model gradient check: every frontend and backend parameter against
// central finite differences on a 0.25 s random input. Backend checks
// reuse cached activations (a perturbed conv layer only forces recompute
// of itself and everything after it), which is what makes checking tens of
// thousands of parameters tractable.

#ifndef AUDFLOW_MODELCHECK_H_
#define AUDFLOW_MODELCHECK_H_

#include <cstdint>
#include <string>

#include "audflow/gradcheck.hpp"

namespace audflow {

struct ModelCheckConfig {
  std::string scope = "all";  // frontend | backend | all
  uint64_t seed = 0;
  double tol = 1e-4;
  double abs_tol = 1e-8;
  double rel_step = 3e-5;  // FD step = rel_step * max(1, |theta|)
  int n_classes = 3;
};

struct ModelCheckSummary {
  GradCheckReport report;   // one entry per checked component
  int64_t n_frontend = 0;   // frontend components checked (212 in scope)
  int64_t n_backend = 0;
  bool all_pass = true;
  double seconds = 0.0;
};

// Frontend parameters are checked under the classification loss; backend
// parameters under their own task losses (classifier and enhancer).
ModelCheckSummary RunModelGradCheck(const ModelCheckConfig& cfg);

}  // namespace audflow

#endif  // AUDFLOW_MODELCHECK_H_
