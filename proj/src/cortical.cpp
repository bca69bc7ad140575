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

#include "audflow/cortical.hpp"

#include <cmath>

#include "audflow/cochlear.hpp"
#include "audflow/rng.hpp"

namespace audflow {
namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

void CheckRange(double cap, double om) {
  if (cap < kCapOmegaMin || cap > kCapOmegaMax || std::abs(om) < kOmegaAbsMin ||
      std::abs(om) > kOmegaAbsMax)
    throw std::invalid_argument("StrfKernel: (Omega=" + std::to_string(cap) +
                                ", omega=" + std::to_string(om) + ") outside clamp range");
}

}  // namespace

CorticalParams InitCortical(CorticalInit mode, uint64_t seed) {
  CorticalParams p;
  p.cap_omega = Tensor({kNumStrf});
  p.omega = Tensor({kNumStrf});
  if (mode == CorticalInit::kLogSpaced) {
    const double caps[4] = {0.5, 1.0, 2.0, 4.0};
    const double rates[5] = {1.0, 2.0, 4.0, 8.0, 16.0};
    int i = 0;
    for (double sign : {1.0, -1.0})
      for (double c : caps)
        for (double r : rates) {
          p.cap_omega.data[i] = c;
          p.omega.data[i] = sign * r;
          ++i;
        }
  } else {
    Rng rng(seed);
    for (int i = 0; i < kNumStrf; ++i) {
      // Draws are U(0,9] floored to the clamp range so freshly initialized
      // filters are always evaluable (the post-step clamps assume it).
      p.cap_omega.data[i] = std::max(kCapOmegaMin, 9.0 * rng.UniformOpenLow());
      p.omega.data[i] = std::max(kOmegaAbsMin, 9.0 * rng.UniformOpenLow()) *
                        (rng.Bernoulli() ? 1.0 : -1.0);
    }
  }
  return p;
}

KernelExtent KernelExtentFor(double cap_omega, double omega, const CorticalConfig& cfg) {
  CheckRange(cap_omega, omega);
  // sigma = half the modulation period on each axis.
  const double sigma_f_ch = kChannelsPerOctave / (2.0 * cap_omega);
  const double sigma_t_fr = kFrameRate / (2.0 * std::abs(omega));
  KernelExtent e;
  e.half_f = std::min<int64_t>(cfg.max_half_f,
                               std::max<int64_t>(1, std::llround(2.0 * sigma_f_ch)));
  e.half_t = std::min<int64_t>(cfg.max_half_t,
                               std::max<int64_t>(1, std::llround(2.0 * sigma_t_fr)));
  return e;
}

Var StrfKernel(Tape& t, Var cap_omega, Var omega, const KernelExtent& ext) {
  const double cap = t.value(cap_omega).data[0];
  const double om = t.value(omega).data[0];
  CheckRange(cap, om);
  const int64_t nf = 2 * ext.half_f + 1, nt = 2 * ext.half_t + 1;
  // Offset grids in octaves / seconds.
  Tensor df({nf}), dt({nt}), df2({nf}), dt2({nt});
  for (int64_t i = 0; i < nf; ++i) {
    const double d = static_cast<double>(i - ext.half_f) / kChannelsPerOctave;
    df.data[i] = kTwoPi * d;
    df2.data[i] = -2.0 * d * d;  // exponent scale: 1/(2 sigma^2) = 2 Omega^2
  }
  for (int64_t i = 0; i < nt; ++i) {
    const double d = static_cast<double>(i - ext.half_t) / kFrameRate;
    dt.data[i] = kTwoPi * d;
    dt2.data[i] = -2.0 * d * d;
  }
  Var cap2 = Mul(t, cap_omega, cap_omega);
  Var om2 = Mul(t, omega, omega);
  Var envelope = Exp(t, OuterAdd(t, Scale(t, t.Leaf(df2, false), cap2),
                                 Scale(t, t.Leaf(dt2, false), om2)));
  Var phase = OuterAdd(t, Scale(t, t.Leaf(df, false), cap_omega),
                       Scale(t, t.Leaf(dt, false), omega));
  Var raw = Mul(t, envelope, Cos(t, phase));
  // Zero mean (true bandpass), then unit L2 norm.
  Var centered = AddScaled(t, raw, MeanAll(t, raw), -1.0);
  Var inv_norm = PowConst(t, SumAll(t, Mul(t, centered, centered)), -0.5);
  return Scale(t, centered, inv_norm);
}

CorticalVars MakeCorticalVars(Tape& t, const CorticalParams& p, bool learnable) {
  CorticalVars v;
  v.cap_omega = t.Leaf(p.cap_omega, learnable);
  v.omega = t.Leaf(p.omega, learnable);
  return v;
}

Var CorticalForward(Tape& t, Var sgram, const CorticalVars& v,
                    const CorticalConfig& cfg) {
  const Tensor& s = t.value(sgram);
  if (s.ndim() != 2 || s.shape[0] != kNumChannels)
    throw std::invalid_argument("CorticalForward: expected [129,T] spectrogram, got " +
                                ShapeToString(s.shape));
  if (!s.all_finite())
    throw std::invalid_argument("CorticalForward: non-finite spectrogram");
  const int64_t frames = s.shape[1];
  // Copies: the tape's node storage may reallocate as ops are pushed below.
  const Tensor caps = t.value(v.cap_omega);
  const Tensor oms = t.value(v.omega);
  int64_t max_nt = 0;
  for (int i = 0; i < kNumStrf; ++i) {
    KernelExtent e = KernelExtentFor(caps.data[i], oms.data[i], cfg);
    max_nt = std::max(max_nt, 2 * e.half_t + 1);
  }
  if (frames < max_nt)
    throw std::invalid_argument(
        "CorticalForward: input has " + std::to_string(frames) +
        " frames but the largest kernel spans " + std::to_string(max_nt) +
        "; provide at least " + std::to_string(max_nt) +
        " frames (" + std::to_string(max_nt * kFrameHop) + " samples)");
  std::vector<Var> per_filter;
  per_filter.reserve(kNumStrf);
  for (int i = 0; i < kNumStrf; ++i) {
    Var cap_i = SliceAxis(t, v.cap_omega, 0, i, 1);
    Var om_i = SliceAxis(t, v.omega, 0, i, 1);
    KernelExtent e = KernelExtentFor(caps.data[i], oms.data[i], cfg);
    Var kernel = StrfKernel(t, cap_i, om_i, e);
    Var r = Corr2D(t, sgram, kernel);
    per_filter.push_back(Reshape(t, r, {1, kNumChannels, frames}));
  }
  return Concat(t, per_filter, 0);  // [40, 129, T]
}

Tensor StrfKernelValues(double cap_omega, double omega, const CorticalConfig& cfg) {
  Tape t;
  KernelExtent e = KernelExtentFor(cap_omega, omega, cfg);
  Var k = StrfKernel(t, t.Leaf(Tensor::Scalar(cap_omega), false),
                     t.Leaf(Tensor::Scalar(omega), false), e);
  return t.value(k);
}

}  // namespace audflow
