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

#include "audflow/gradcheck.hpp"

#include <cmath>
#include <stdexcept>

namespace audflow {

GradCheckReport GradCheck(const LossFn& f, const ParamMap& params,
                          const ParamMap& analytic, double step, double tol,
                          double abs_tol) {
  if (step <= 0.0) throw std::invalid_argument("GradCheck: step must be > 0");
  GradCheckReport report;
  ParamMap work = params;
  for (const auto& [name, p] : params) {
    auto ait = analytic.find(name);
    if (ait == analytic.end())
      throw std::invalid_argument("GradCheck: no analytic gradient for '" + name + "'");
    if (ait->second.shape != p.shape)
      throw std::invalid_argument("GradCheck: gradient shape mismatch for '" + name + "'");
    Tensor& wp = work.at(name);
    for (int64_t i = 0; i < p.size(); ++i) {
      GradCheckEntry e;
      e.param = name;
      e.index = i;
      e.analytic = ait->second.data[i];
      const double orig = wp.data[i];
      wp.data[i] = orig + step;
      const double fp = f(work);
      wp.data[i] = orig - step;
      const double fm = f(work);
      wp.data[i] = orig;
      if (!std::isfinite(fp) || !std::isfinite(fm)) {
        e.evaluable = false;
        e.pass = false;
      } else {
        e.numeric = (fp - fm) / (2.0 * step);
        e.rel_err = std::abs(e.analytic - e.numeric) /
                    std::max({std::abs(e.analytic), std::abs(e.numeric), 1e-12});
        e.pass = e.rel_err < tol || std::abs(e.analytic - e.numeric) <= abs_tol;
      }
      if (!e.pass) {
        report.all_pass = false;
        ++report.num_failed;
      }
      report.entries.push_back(std::move(e));
    }
  }
  return report;
}

}  // namespace audflow
