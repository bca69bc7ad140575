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
// Task heads: the frame-wise classifier CNN, the STFT-mask enhancer CNN,
// and the losses/metrics that go with them.

#ifndef AUDFLOW_BACKENDS_H_
#define AUDFLOW_BACKENDS_H_

#include "audflow/cochlear.hpp"
#include "audflow/cortical.hpp"
#include "audflow/stft.hpp"

namespace audflow {

inline constexpr int64_t kEnhanceWin = 256;
inline constexpr int64_t kEnhanceHop = 80;
inline constexpr int64_t kEnhanceBins = kEnhanceWin / 2 + 1;  // 129

// Frontend parameters as one unit: 129 + 2 + 1 + 80 = 212 learnable values.
struct FrontendParams {
  CochlearParams cochlear;
  CorticalParams cortical;
};

struct FrontendVars {
  CochlearVars coch;
  CorticalVars cort;
};

FrontendVars MakeFrontendVars(Tape& t, const FrontendParams& p, bool coch_learnable,
                              bool cort_learnable);

// wave -> CorticalTensor [40,129,T].
Var FrontendForward(Tape& t, const Waveform& w, const RoexFilterbank& fb,
                    const FrontendVars& v, const CorticalConfig& cfg = {});

// Three 3x3 conv layers (10, 20, 40 channels) with GeLU, frequency-axis
// global mean pool, then a per-frame affine map to class scores.
struct ClassifierNet {
  Tensor w1, b1, w2, b2, w3, b3;  // conv stacks
  Tensor head_w, head_b;          // [n_classes,40], [n_classes]
  int n_classes = 0;

  static ClassifierNet Init(int n_classes, uint64_t seed);
  int64_t num_params() const;
};

struct ClassifierVars {
  Var w1, b1, w2, b2, w3, b3, head_w, head_b;
};

ClassifierVars MakeClassifierVars(Tape& t, const ClassifierNet& n, bool learnable);

// features [C,129,T] -> per-frame logits [T, n_classes]. C is 40 for the
// cortical pipeline; the cnn ablation feeds a different channel count.
Var ClassifierForward(Tape& t, Var features, const ClassifierVars& v);

// Four 3x3 conv layers (20, 40, 10, 1 channels) with GeLU, then an affine
// map from the 129 frequency channels to the 129 STFT bins and a sigmoid.
struct EnhancerNet {
  Tensor w1, b1, w2, b2, w3, b3, w4, b4;
  Tensor head_w, head_b;  // [129,129], [129]

  static EnhancerNet Init(uint64_t seed);
  int64_t num_params() const;
};

struct EnhancerVars {
  Var w1, b1, w2, b2, w3, b3, w4, b4, head_w, head_b;
};

EnhancerVars MakeEnhancerVars(Tape& t, const EnhancerNet& n, bool learnable);

// features [40,129,T] -> mask [T,129] in (0,1).
Var EnhancerMask(Tape& t, Var features, const EnhancerVars& v);

struct EnhanceResult {
  Var estimate;  // [n] waveform
  Var mask;      // [T,129]
};

// Full enhancement path: frontend features -> mask -> mask * STFT(mix)
// -> iSTFT. The real mask scales real and imaginary parts equally.
EnhanceResult Enhance(Tape& t, const Waveform& mix, const RoexFilterbank& fb,
                      const FrontendVars& fv, const EnhancerVars& ev,
                      const CorticalConfig& cfg = {});

// L1 waveform + multi-scale complex-STFT L1 at windows {256,512,1024},
// hop = window/4.
Var EnhancementLoss(Tape& t, Var estimate, Var target);

// Scale-invariant SDR in dB, capped at +100 when the residual vanishes.
double SiSdr(const std::vector<double>& estimate, const std::vector<double>& target);

// Fraction of labeled frames (label >= 0) where argmax(logits) == label;
// ties break to the lowest class index.
double Accuracy(const Tensor& logits, const std::vector<int>& labels);

}  // namespace audflow

#endif  // AUDFLOW_BACKENDS_H_
