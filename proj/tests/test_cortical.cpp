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

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "audflow/analysis.hpp"
#include "audflow/cortical.hpp"
#include "audflow/signal.hpp"
#include "doctest.h"
#include "test_util.hpp"

namespace audflow {
namespace {

TEST_CASE("log-spaced init is the exact 4x5x2 grid") {
  const CorticalParams p = InitCortical(CorticalInit::kLogSpaced, 0);
  REQUIRE(p.cap_omega.shape == Shape{40});
  REQUIRE(p.omega.shape == Shape{40});
  std::multiset<std::pair<double, double>> got;
  for (int i = 0; i < 40; ++i)
    got.insert({p.cap_omega.data[i], p.omega.data[i]});
  int n_pos = 0;
  std::multiset<std::pair<double, double>> want;
  for (double s : {1.0, -1.0})
    for (double c : {0.5, 1.0, 2.0, 4.0})
      for (double r : {1.0, 2.0, 4.0, 8.0, 16.0}) want.insert({c, s * r});
  CHECK(got == want);
  for (int i = 0; i < 40; ++i) n_pos += p.omega.data[i] > 0 ? 1 : 0;
  CHECK(n_pos == 20);
  // Seed has no effect on the deterministic grid.
  const CorticalParams q = InitCortical(CorticalInit::kLogSpaced, 99);
  CHECK(q.cap_omega.data == p.cap_omega.data);
  CHECK(q.omega.data == p.omega.data);
}

TEST_CASE("random init is seed-deterministic with values in (0,9]") {
  const CorticalParams a = InitCortical(CorticalInit::kRandom, 5);
  const CorticalParams b = InitCortical(CorticalInit::kRandom, 5);
  const CorticalParams c = InitCortical(CorticalInit::kRandom, 6);
  CHECK(a.cap_omega.data == b.cap_omega.data);
  CHECK(a.omega.data == b.omega.data);
  CHECK(a.omega.data != c.omega.data);
  for (int i = 0; i < 40; ++i) {
    CHECK(a.cap_omega.data[i] > 0.0);
    CHECK(a.cap_omega.data[i] <= 9.0);
    CHECK(std::abs(a.omega.data[i]) > 0.0);
    CHECK(std::abs(a.omega.data[i]) <= 9.0);
  }
}

TEST_CASE("kernel extents follow two sigma with caps") {
  const CorticalConfig cfg;
  // sigma_f = 24/(2 Omega) channels, sigma_t = 200/(2 |omega|) frames.
  KernelExtent e = KernelExtentFor(2.0, 4.0, cfg);
  CHECK(e.half_f == std::llround(2.0 * 24.0 / (2.0 * 2.0)));  // 12
  CHECK(e.half_t == std::llround(2.0 * 200.0 / (2.0 * 4.0)));  // 50
  // Sign of omega does not change the extent.
  KernelExtent en = KernelExtentFor(2.0, -4.0, cfg);
  CHECK(en.half_f == e.half_f);
  CHECK(en.half_t == e.half_t);
  // Low modulations hit the configured caps.
  KernelExtent ec = KernelExtentFor(0.05, 0.1, cfg);
  CHECK(ec.half_f == cfg.max_half_f);
  CHECK(ec.half_t == cfg.max_half_t);
  // High modulations floor at one sample of support.
  KernelExtent ef = KernelExtentFor(12.0, 100.0, cfg);
  CHECK(ef.half_f >= 1);
  CHECK(ef.half_t >= 1);
  CHECK_THROWS_AS(KernelExtentFor(0.01, 1.0, cfg), std::invalid_argument);
  CHECK_THROWS_AS(KernelExtentFor(1.0, 0.0, cfg), std::invalid_argument);
}

TEST_CASE("strf kernels are zero-mean, unit-norm, and jointly even") {
  for (auto [cap, om] : std::vector<std::pair<double, double>>{
           {0.5, 1.0}, {2.0, 4.0}, {4.0, -16.0}, {7.3, 2.6}}) {
    const Tensor k = StrfKernelValues(cap, om);
    const int64_t nf = k.shape[0], nt = k.shape[1];
    CHECK(nf % 2 == 1);
    CHECK(nt % 2 == 1);
    double mean = 0.0, l2 = 0.0;
    for (double v : k.data) {
      mean += v;
      l2 += v * v;
    }
    mean /= static_cast<double>(k.size());
    CHECK(std::abs(mean) < 1e-12);
    CHECK(std::sqrt(l2) == doctest::Approx(1.0).epsilon(1e-12));
    // Even under the joint flip (df, dt) -> (-df, -dt).
    for (int64_t i = 0; i < nf; ++i)
      for (int64_t j = 0; j < nt; ++j)
        CHECK(k.data[i * nt + j] ==
              doctest::Approx(k.data[(nf - 1 - i) * nt + (nt - 1 - j)]).epsilon(1e-12));
  }
}

// Energy of the correlation of a ripple with one filter, edge frames
// trimmed so zero padding does not blur the comparison.
double RippleEnergy(double cap_f, double om_f, double cap_p, double om_p) {
  const Tensor ripple = GenMovingRipple(cap_p, om_p, 1.0);
  const Tensor k = StrfKernelValues(cap_f, om_f);
  Tape t;
  CorticalParams p;
  p.cap_omega = Tensor({1}, {cap_f});
  p.omega = Tensor({1}, {om_f});
  Var r = Corr2D(t, t.Leaf(ripple, false), t.Leaf(k, false));
  const Tensor& y = t.value(r);
  const int64_t frames = y.shape[1];
  const int64_t trim = (k.shape[1] - 1) / 2;
  double e = 0.0;
  int64_t n = 0;
  for (int64_t c = 0; c < y.shape[0]; ++c)
    for (int64_t f = trim; f < frames - trim; ++f) {
      const double v = y.data[c * frames + f];
      e += v * v;
      ++n;
    }
  return e / static_cast<double>(n);
}

TEST_CASE("orientation selectivity exceeds 6 dB") {
  const double matched = RippleEnergy(2.0, 4.0, 2.0, 4.0);
  const double flipped = RippleEnergy(2.0, 4.0, 2.0, -4.0);
  CHECK(10.0 * std::log10(matched / flipped) > 6.0);
}

TEST_CASE("modulation selectivity separates distant ripples by 6 dB") {
  const double matched = RippleEnergy(1.0, 2.0, 1.0, 2.0);
  const double off = RippleEnergy(1.0, 2.0, 4.0, 8.0);
  CHECK(10.0 * std::log10(matched / off) > 6.0);
}

TEST_CASE("every log-spaced filter ranks its matched ripple in the top 3") {
  const CorticalParams p = InitCortical(CorticalInit::kLogSpaced, 0);
  std::vector<ProbePoint> probes;
  for (int i = 0; i < 40; ++i)
    probes.push_back({p.cap_omega.data[i], p.omega.data[i]});
  const Tensor prof = ModulationProfile(p, probes);
  REQUIRE(prof.shape == Shape{40, 40});
  for (int f = 0; f < 40; ++f) {
    std::vector<int> order(40);
    for (int i = 0; i < 40; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      return prof.data[f * 40 + a] > prof.data[f * 40 + b];
    });
    const bool in_top3 = order[0] == f || order[1] == f || order[2] == f;
    CHECK_MESSAGE(in_top3, "filter ", f, " (Omega=", p.cap_omega.data[f],
                  ", omega=", p.omega.data[f], ")");
  }
}

TEST_CASE("forward shape, zeros, linearity, and short-input error") {
  const CorticalParams p = InitCortical(CorticalInit::kLogSpaced, 0);
  Tape t;
  CorticalVars v = MakeCorticalVars(t, p, false);

  Tensor zeros({129, 200});
  const Tensor& yz = t.value(CorticalForward(t, t.Leaf(zeros, false), v));
  CHECK(yz.shape == Shape{40, 129, 200});
  for (double x : yz.data) CHECK(x == 0.0);

  Rng rng(41);
  Tensor s = testutil::RandomTensor({129, 200}, rng, 0.0, 1.0);
  Tensor s2 = s;
  for (double& x : s2.data) x *= 2.0;
  Tape t2;
  CorticalVars v2 = MakeCorticalVars(t2, p, false);
  const Tensor y1 = t2.value(CorticalForward(t2, t2.Leaf(s, false), v2));
  const Tensor y2 = t2.value(CorticalForward(t2, t2.Leaf(s2, false), v2));
  for (int64_t i = 0; i < y1.size(); ++i)
    CHECK(y2.data[i] == doctest::Approx(2.0 * y1.data[i]).epsilon(1e-12));

  // The largest log-spaced kernel spans 199 frames; 100 frames must throw.
  Tape t3;
  CorticalVars v3 = MakeCorticalVars(t3, p, false);
  Tensor small({129, 100});
  CHECK_THROWS_WITH_AS(CorticalForward(t3, t3.Leaf(small, false), v3),
                       doctest::Contains("frames"), std::invalid_argument);
  // Wrong channel count.
  Tensor bad({64, 200});
  CHECK_THROWS_AS(CorticalForward(t3, t3.Leaf(bad, false), v3), std::invalid_argument);
}

TEST_CASE("cortical gradients match finite differences") {
  // Reduced caps keep kernels small; parameter values sit away from the
  // llround boundaries of the extent computation so the finite-difference
  // step cannot change kernel shapes.
  CorticalConfig cfg;
  cfg.max_half_f = 8;
  cfg.max_half_t = 10;
  Rng rng(51);
  Tensor caps({40}), oms({40});
  for (int i = 0; i < 40; ++i) {
    caps.data[i] = rng.Uniform(1.3, 5.7);
    oms.data[i] = rng.Uniform(6.3, 18.7) * (rng.Bernoulli() ? 1.0 : -1.0);
  }
  // The spectrogram-input path of Corr2D is already grad-checked at the op
  // level; checking it again here component by component only measures
  // finite-difference noise, so the probe covers the 80 filter parameters.
  Tensor s = testutil::RandomTensor({129, 64}, rng, 0.0, 1.0);
  Tensor w = testutil::RandomTensor({40, 129, 64}, rng);
  auto f = [&](Tape& t, const std::vector<Var>& vars) {
    CorticalVars v{vars[0], vars[1]};
    return SumAll(t,
                  Mul(t, CorticalForward(t, t.Leaf(s, false), v, cfg), t.Leaf(w, false)));
  };
  CHECK(testutil::MaxGradError(f, {caps, oms}, 1e-6) < 1e-4);
}

}  // namespace
}  // namespace audflow
