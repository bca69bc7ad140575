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

#ifndef AUDFLOW_RNG_H_
#define AUDFLOW_RNG_H_

#include <cmath>
#include <cstdint>
#include <random>

namespace audflow {

// Deterministic RNG. Distributions are implemented here (not via
// std::*_distribution) so the stream does not depend on the standard
// library implementation.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  // [0, 1)
  double Uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }

  // (0, 1]; for open-at-zero ranges like the random cortical init.
  double UniformOpenLow() { return 1.0 - Uniform(); }

  // [0, n)
  int64_t UniformInt(int64_t n) {
    // Rejection-free modulo is fine here; n is tiny relative to 2^64.
    return static_cast<int64_t>(gen_() % static_cast<uint64_t>(n));
  }

  bool Bernoulli() { return (gen_() & 1) != 0; }

  // Standard normal via Box-Muller.
  double Gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = UniformOpenLow();
    double u2 = Uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace audflow

#endif  // AUDFLOW_RNG_H_
