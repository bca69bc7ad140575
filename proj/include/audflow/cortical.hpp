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
// The cortical stage: 40 learnable spectrotemporal modulation filters,
// each a Gabor kernel with spectral modulation Omega (cycles/octave) and
// signed temporal modulation omega (Hz), applied to the auditory
// spectrogram by same-padded 2-D cross-correlation.

#ifndef AUDFLOW_CORTICAL_H_
#define AUDFLOW_CORTICAL_H_

#include <cstdint>

#include "audflow/ops.hpp"

namespace audflow {

inline constexpr int kNumStrf = 40;

// Clamp ranges applied after every optimizer step (representability on the
// 24-channel/octave x 200 Hz grid).
inline constexpr double kCapOmegaMin = 0.05;
inline constexpr double kCapOmegaMax = 12.0;
inline constexpr double kOmegaAbsMin = 0.1;
inline constexpr double kOmegaAbsMax = 100.0;

enum class CorticalInit { kLogSpaced, kRandom };

struct CorticalParams {
  Tensor cap_omega;  // [40] cycles/octave, positive
  Tensor omega;      // [40] Hz, signed (sign = ripple direction)
};

// log-spaced: Omega in {0.5,1,2,4} x |omega| in {1,2,4,8,16} x sign.
// random: Omega, |omega| ~ U(0,9], sign equiprobable, seed-deterministic.
CorticalParams InitCortical(CorticalInit mode, uint64_t seed);

// Kernel truncation: +-2 sigma on each axis, capped so kernels stay usable
// on short inputs. Extents are recomputed from current parameter values on
// every forward pass but are not differentiated through.
struct CorticalConfig {
  int64_t max_half_f = 64;  // channels
  int64_t max_half_t = 99;  // frames
};

struct KernelExtent {
  int64_t half_f = 0, half_t = 0;
};

KernelExtent KernelExtentFor(double cap_omega, double omega, const CorticalConfig& cfg);

// Gabor STRF kernel from scalar Vars (1-element tensors); mean-subtracted
// and L2-normalized to 1. Differentiable w.r.t. both parameters.
Var StrfKernel(Tape& t, Var cap_omega, Var omega, const KernelExtent& ext);

struct CorticalVars {
  Var cap_omega, omega;  // [40] leaves
};

CorticalVars MakeCorticalVars(Tape& t, const CorticalParams& p, bool learnable);

// AudSpectrogram [129,T] -> CorticalTensor [40,129,T]. Throws when T is
// smaller than the largest kernel time extent.
Var CorticalForward(Tape& t, Var sgram, const CorticalVars& v,
                    const CorticalConfig& cfg = {});

// Non-tape kernel evaluation, for probes and analysis.
Tensor StrfKernelValues(double cap_omega, double omega, const CorticalConfig& cfg = {});

}  // namespace audflow

#endif  // AUDFLOW_CORTICAL_H_
