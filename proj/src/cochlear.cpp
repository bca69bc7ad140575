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

#include "audflow/cochlear.hpp"

#include <cmath>

#include "audflow/fft.hpp"

namespace audflow {
namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

}  // namespace

double RoexResponse(double x, double x_h) {
  const double d = x_h - x;
  if (d < 0.0) return 0.0;
  return std::pow(d, kRoexAlpha) * std::exp(-kRoexBeta * d);
}

RoexFilterbank BuildFilterbank(int64_t signal_length) {
  if (signal_length < 256)
    throw std::invalid_argument("BuildFilterbank: signal length must be >= 256");
  RoexFilterbank fb;
  fb.signal_length = signal_length;
  const int64_t b = fft::NumBins(signal_length);
  fb.center_freqs_hz.resize(kNumChannels);
  fb.edge_log2.resize(kNumChannels);
  fb.response = Tensor({kNumChannels, b});
  const double peak = RoexResponse(0.0, kRoexPeakOffset);  // value at the maximum
  for (int k = 0; k < kNumChannels; ++k) {
    const double fc = kBaseFreqHz * std::pow(2.0, static_cast<double>(k) / kChannelsPerOctave);
    fb.center_freqs_hz[k] = fc;
    const double xh = std::log2(fc) + kRoexPeakOffset;
    fb.edge_log2[k] = xh;
    double* row = fb.response.data.data() + k * b;
    row[0] = 0.0;  // DC is infinitely far below band on the log2 axis
    for (int64_t j = 1; j < b; ++j) {
      const double f = static_cast<double>(j) * kSampleRate / static_cast<double>(signal_length);
      row[j] = RoexResponse(std::log2(f), xh) / peak;
    }
  }
  return fb;
}

CochlearParams CochlearParams::Init() {
  CochlearParams p;
  p.alpha = Tensor::Full({kNumChannels}, 1.0);
  p.w = Tensor({2}, {1.0, -1.0});
  p.tau = Tensor::Scalar(8.0);
  return p;
}

CochlearVars MakeCochlearVars(Tape& t, const CochlearParams& p, bool learnable) {
  CochlearVars v;
  v.alpha = t.Leaf(p.alpha, learnable);
  v.w = t.Leaf(p.w, learnable);
  v.w0 = SliceAxis(t, v.w, 0, 0, 1);
  v.w1 = SliceAxis(t, v.w, 0, 1, 1);
  v.tau = t.Leaf(p.tau, learnable);
  return v;
}

std::complex<double> IntegratorResponse(double tau_ms, double freq_hz) {
  if (tau_ms <= 0.0) throw std::invalid_argument("IntegratorResponse: tau must be > 0");
  return 1.0 / std::complex<double>(1.0, kTwoPi * freq_hz * tau_ms / 1000.0);
}

Var CochlearForward(Tape& t, const Waveform& w, const RoexFilterbank& fb,
                    const CochlearVars& v) {
  const int64_t n = w.size();
  if (w.sample_rate != kSampleRate)
    throw std::invalid_argument("CochlearForward: input must be at 16 kHz");
  if (n < kFrameHop)
    throw std::invalid_argument("CochlearForward: input shorter than one frame (80 samples)");
  if (fb.signal_length != n)
    throw std::invalid_argument("CochlearForward: filterbank built for length " +
                                std::to_string(fb.signal_length) + ", input has " +
                                std::to_string(n));
  for (double s : w.samples)
    if (!std::isfinite(s)) throw std::invalid_argument("CochlearForward: non-finite input sample");

  Var wave = t.Leaf(Tensor({n}, w.samples), false);
  Var xspec = RFFT(t, wave);                              // [2, B]
  Var bands = FilterbankApply(t, xspec, fb.response, n);  // [129, n]
  Var rect = Relu(t, bands);
  Var compressed = PowChannels(t, rect, v.alpha);
  // Lateral inhibition across channels; channel 0 gets a zero neighbor.
  Var below = RowShiftDown(t, compressed);
  Var inhibited =
      Relu(t, Add(t, Scale(t, compressed, v.w0), Scale(t, below, v.w1)));
  // Leaky integrator as frequency-domain first-order lowpass, then
  // decimation to the 200 Hz frame rate.
  const int64_t b = fft::NumBins(n);
  Tensor omega({b});
  for (int64_t j = 0; j < b; ++j)
    omega.data[j] = kTwoPi * (static_cast<double>(j) * kSampleRate / n) / 1000.0;
  Var omega_leaf = t.Leaf(omega, false);
  Var wt = Scale(t, omega_leaf, v.tau);  // 2 pi nu tau_s
  Var denom = AddConst(t, Mul(t, wt, wt), 1.0);
  Var ones = t.Leaf(Tensor::Full({b}, 1.0), false);
  Var hr = Div(t, ones, denom);
  Var hi = Neg(t, Div(t, wt, denom));
  Var spec = RFFT(t, inhibited);  // [129, 2, B]
  Var smoothed = IRFFT(t, ComplexRowMul(t, spec, hr, hi), n);
  return DecimateCols(t, smoothed, kFrameHop);  // [129, ceil(n/80)]
}

}  // namespace audflow
