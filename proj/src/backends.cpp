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

#include "audflow/backends.hpp"

#include <cmath>

#include "audflow/rng.hpp"

namespace audflow {
namespace {

Tensor ConvInit(int64_t cout, int64_t cin, int64_t k, Rng& rng) {
  Tensor w({cout, cin, k, k});
  const double bound = std::sqrt(6.0 / static_cast<double>(cin * k * k));
  for (double& v : w.data) v = rng.Uniform(-bound, bound);
  return w;
}

Tensor DenseInit(int64_t out, int64_t in, Rng& rng) {
  Tensor w({out, in});
  const double bound = std::sqrt(6.0 / static_cast<double>(in));
  for (double& v : w.data) v = rng.Uniform(-bound, bound);
  return w;
}

}  // namespace

FrontendVars MakeFrontendVars(Tape& t, const FrontendParams& p, bool coch_learnable,
                              bool cort_learnable) {
  FrontendVars v;
  v.coch = MakeCochlearVars(t, p.cochlear, coch_learnable);
  v.cort = MakeCorticalVars(t, p.cortical, cort_learnable);
  return v;
}

Var FrontendForward(Tape& t, const Waveform& w, const RoexFilterbank& fb,
                    const FrontendVars& v, const CorticalConfig& cfg) {
  Var sgram = CochlearForward(t, w, fb, v.coch);
  return CorticalForward(t, sgram, v.cort, cfg);
}

ClassifierNet ClassifierNet::Init(int n_classes, uint64_t seed) {
  if (n_classes < 2) throw std::invalid_argument("ClassifierNet: need >= 2 classes");
  Rng rng(seed);
  ClassifierNet n;
  n.n_classes = n_classes;
  n.w1 = ConvInit(10, kNumStrf, 3, rng);
  n.b1 = Tensor({10});
  n.w2 = ConvInit(20, 10, 3, rng);
  n.b2 = Tensor({20});
  n.w3 = ConvInit(40, 20, 3, rng);
  n.b3 = Tensor({40});
  n.head_w = DenseInit(n_classes, 40, rng);
  n.head_b = Tensor({n_classes});
  return n;
}

int64_t ClassifierNet::num_params() const {
  return w1.size() + b1.size() + w2.size() + b2.size() + w3.size() + b3.size() +
         head_w.size() + head_b.size();
}

ClassifierVars MakeClassifierVars(Tape& t, const ClassifierNet& n, bool learnable) {
  ClassifierVars v;
  v.w1 = t.Leaf(n.w1, learnable);
  v.b1 = t.Leaf(n.b1, learnable);
  v.w2 = t.Leaf(n.w2, learnable);
  v.b2 = t.Leaf(n.b2, learnable);
  v.w3 = t.Leaf(n.w3, learnable);
  v.b3 = t.Leaf(n.b3, learnable);
  v.head_w = t.Leaf(n.head_w, learnable);
  v.head_b = t.Leaf(n.head_b, learnable);
  return v;
}

Var ClassifierForward(Tape& t, Var features, const ClassifierVars& v) {
  Var h1 = Gelu(t, Conv2D(t, features, v.w1, v.b1));
  Var h2 = Gelu(t, Conv2D(t, h1, v.w2, v.b2));
  Var h3 = Gelu(t, Conv2D(t, h2, v.w3, v.b3));
  Var pooled = MeanAxis(t, h3, 1);  // [40, T]
  Var logits = Affine(t, v.head_w, pooled, v.head_b);
  return Transpose2D(t, logits);  // [T, n_classes]
}

EnhancerNet EnhancerNet::Init(uint64_t seed) {
  Rng rng(seed);
  EnhancerNet n;
  n.w1 = ConvInit(20, kNumStrf, 3, rng);
  n.b1 = Tensor({20});
  n.w2 = ConvInit(40, 20, 3, rng);
  n.b2 = Tensor({40});
  n.w3 = ConvInit(10, 40, 3, rng);
  n.b3 = Tensor({10});
  n.w4 = ConvInit(1, 10, 3, rng);
  n.b4 = Tensor({1});
  n.head_w = DenseInit(kEnhanceBins, kNumChannels, rng);
  n.head_b = Tensor({kEnhanceBins});
  return n;
}

int64_t EnhancerNet::num_params() const {
  return w1.size() + b1.size() + w2.size() + b2.size() + w3.size() + b3.size() +
         w4.size() + b4.size() + head_w.size() + head_b.size();
}

EnhancerVars MakeEnhancerVars(Tape& t, const EnhancerNet& n, bool learnable) {
  EnhancerVars v;
  v.w1 = t.Leaf(n.w1, learnable);
  v.b1 = t.Leaf(n.b1, learnable);
  v.w2 = t.Leaf(n.w2, learnable);
  v.b2 = t.Leaf(n.b2, learnable);
  v.w3 = t.Leaf(n.w3, learnable);
  v.b3 = t.Leaf(n.b3, learnable);
  v.w4 = t.Leaf(n.w4, learnable);
  v.b4 = t.Leaf(n.b4, learnable);
  v.head_w = t.Leaf(n.head_w, learnable);
  v.head_b = t.Leaf(n.head_b, learnable);
  return v;
}

Var EnhancerMask(Tape& t, Var features, const EnhancerVars& v) {
  Var h1 = Gelu(t, Conv2D(t, features, v.w1, v.b1));
  Var h2 = Gelu(t, Conv2D(t, h1, v.w2, v.b2));
  Var h3 = Gelu(t, Conv2D(t, h2, v.w3, v.b3));
  Var h4 = Gelu(t, Conv2D(t, h3, v.w4, v.b4));  // [1,129,T]
  const int64_t frames = t.value(h4).shape[2];
  Var flat = Reshape(t, h4, {kNumChannels, frames});
  Var projected = Affine(t, v.head_w, flat, v.head_b);  // [129, T]
  return Sigmoid(t, Transpose2D(t, projected));         // [T, 129]
}

EnhanceResult Enhance(Tape& t, const Waveform& mix, const RoexFilterbank& fb,
                      const FrontendVars& fv, const EnhancerVars& ev,
                      const CorticalConfig& cfg) {
  Var features = FrontendForward(t, mix, fb, fv, cfg);
  Var mask = EnhancerMask(t, features, ev);
  Var wave = t.Leaf(Tensor({mix.size()}, mix.samples), false);
  StftSpec spec = Stft(t, wave, kEnhanceWin, kEnhanceHop);
  // Cortical frames and STFT frames are both ceil(n/80) by construction.
  StftSpec masked = spec;
  masked.re = Mul(t, mask, spec.re);
  masked.im = Mul(t, mask, spec.im);
  EnhanceResult r;
  r.estimate = Istft(t, masked);
  r.mask = mask;
  return r;
}

Var EnhancementLoss(Tape& t, Var estimate, Var target) {
  const Tensor& ve = t.value(estimate);
  const Tensor& vt = t.value(target);
  CheckSameShape("EnhancementLoss", ve, vt);
  Var loss = L1(t, estimate, target);
  for (int64_t win : {256, 512, 1024}) {
    StftSpec se = Stft(t, estimate, win, win / 4);
    StftSpec st = Stft(t, target, win, win / 4);
    loss = Add(t, loss, L1(t, StackReIm(t, se.re, se.im), StackReIm(t, st.re, st.im)));
  }
  return loss;
}

double SiSdr(const std::vector<double>& estimate, const std::vector<double>& target) {
  if (estimate.size() != target.size())
    throw std::invalid_argument("SiSdr: length mismatch");
  double et = 0.0, tt = 0.0;
  for (size_t i = 0; i < target.size(); ++i) {
    et += estimate[i] * target[i];
    tt += target[i] * target[i];
  }
  if (tt <= 0.0) throw std::invalid_argument("SiSdr: zero target");
  const double a = et / tt;
  double sig = 0.0, res = 0.0;
  for (size_t i = 0; i < target.size(); ++i) {
    const double s = a * target[i];
    const double r = s - estimate[i];
    sig += s * s;
    res += r * r;
  }
  if (res <= 0.0) return 100.0;
  return std::min(100.0, 10.0 * std::log10(sig / res));
}

double Accuracy(const Tensor& logits, const std::vector<int>& labels) {
  if (logits.ndim() != 2 || static_cast<int64_t>(labels.size()) != logits.shape[0])
    throw std::invalid_argument("Accuracy: logits [T,C] and one label per frame required");
  const int64_t rows = logits.shape[0], c = logits.shape[1];
  int64_t labeled = 0, correct = 0;
  for (int64_t r = 0; r < rows; ++r) {
    if (labels[r] < 0) continue;
    ++labeled;
    int best = 0;
    for (int64_t j = 1; j < c; ++j)
      if (logits.data[r * c + j] > logits.data[r * c + best]) best = static_cast<int>(j);
    if (best == labels[r]) ++correct;
  }
  if (labeled == 0) return 0.0;
  return static_cast<double>(correct) / static_cast<double>(labeled);
}

}  // namespace audflow
