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
// The auditory periphery: a frozen constant-Q roex filterbank, learnable
// power-law compression, learnable lateral inhibition with rectification,
// a learnable leaky integrator, and decimation to 200 frames/s. All
// filtering is zero-phase frequency-domain multiplication.
//
// A note on rectification: compression x^alpha needs nonnegative input, so
// the signed band signals are half-wave rectified before compression (the
// hair-cell stage in biophysical models).

#ifndef AUDFLOW_COCHLEAR_H_
#define AUDFLOW_COCHLEAR_H_

#include <complex>

#include "audflow/ops.hpp"
#include "audflow/signal.hpp"

namespace audflow {

inline constexpr int kNumChannels = 129;
inline constexpr double kRoexAlpha = 0.3;  // lower-skirt exponent
inline constexpr double kRoexBeta = 8.0;   // per-octave upper-skirt decay
inline constexpr double kBaseFreqHz = 180.0;
inline constexpr int kChannelsPerOctave = 24;
// The response peak sits alpha/beta octaves below the upper passband edge.
inline constexpr double kRoexPeakOffset = kRoexAlpha / kRoexBeta;

// Rounded-exponential magnitude at log2-frequency offset x for a channel
// with upper edge x_h: (x_h - x)^0.3 * exp(-8 (x_h - x)) on [0 (at x_h),
// support]; zero above the edge. Not peak-normalized.
double RoexResponse(double x, double x_h);

// Frozen filterbank: per-channel peak-normalized magnitude response
// sampled at the rFFT bin frequencies of a given signal length.
struct RoexFilterbank {
  int64_t signal_length = 0;
  std::vector<double> center_freqs_hz;  // [129]
  std::vector<double> edge_log2;        // x_h per channel, log2(Hz)
  Tensor response;                      // [129, bins]
};

RoexFilterbank BuildFilterbank(int64_t signal_length);

// Learnable cochlear parameters (129 + 2 + 1 = 132 values).
struct CochlearParams {
  Tensor alpha;  // [129] compression exponents, init 1.0
  Tensor w;      // [2] lateral inhibition taps, init [1, -1]
  Tensor tau;    // [1] integrator time constant in ms, init 8.0

  static CochlearParams Init();
};

// Clamp floors applied after every optimizer step.
inline constexpr double kAlphaFloor = 0.01;
inline constexpr double kTauFloorMs = 0.1;

// Tape handles for one forward pass. w is the [2] leaf; w0/w1 are its
// slices (gradients accumulate into w).
struct CochlearVars {
  Var alpha, w, w0, w1, tau;
};

CochlearVars MakeCochlearVars(Tape& t, const CochlearParams& p, bool learnable);

// First-order lowpass gain H(nu) = 1 / (1 + i 2 pi nu tau_s).
std::complex<double> IntegratorResponse(double tau_ms, double freq_hz);

// Waveform -> 129 x ceil(n/80) auditory spectrogram, differentiable w.r.t.
// all CochlearVars.
Var CochlearForward(Tape& t, const Waveform& w, const RoexFilterbank& fb,
                    const CochlearVars& v);

}  // namespace audflow

#endif  // AUDFLOW_COCHLEAR_H_
