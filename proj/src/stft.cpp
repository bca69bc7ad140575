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

#include "audflow/stft.hpp"

#include <cmath>

#include "audflow/fft.hpp"

namespace audflow {
namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Mirror of the reflect rule in FrameSignal/OverlapAdd; the OLA
// normalization must fold window energy exactly the same way.
int64_t ReflectIndex(int64_t s, int64_t n) {
  if (n == 1) return 0;
  while (s < 0 || s >= n) {
    if (s < 0) s = -s;
    if (s >= n) s = 2 * n - 2 - s;
  }
  return s;
}

}  // namespace

Tensor HannWindow(int64_t win) {
  Tensor w({win});
  for (int64_t j = 0; j < win; ++j)
    w.data[j] = 0.5 * (1.0 - std::cos(kTwoPi * j / win));
  return w;
}

StftSpec Stft(Tape& t, Var x, int64_t win, int64_t hop) {
  if (win < 2 || win % 2 != 0) throw std::invalid_argument("Stft: window length must be even");
  if (hop <= 0) throw std::invalid_argument("Stft: hop must be positive");
  if (hop > win) throw std::invalid_argument("Stft: hop must not exceed window length");
  const int64_t n = t.value(x).shape.back();
  const int64_t b = fft::NumBins(win);
  Var frames = FrameSignal(t, x, win, hop);
  const int64_t f = t.value(frames).shape[0];
  // Tile the analysis window over all frames.
  Tensor hann = HannWindow(win);
  Tensor tiled({f, win});
  for (int64_t m = 0; m < f; ++m)
    std::copy_n(hann.data.data(), win, tiled.data.data() + m * win);
  Var windowed = CMul(t, frames, tiled);
  Var spec = RFFT(t, windowed);  // [f, 2, b]
  StftSpec out;
  out.re = Reshape(t, SliceAxis(t, spec, 1, 0, 1), {f, b});
  out.im = Reshape(t, SliceAxis(t, spec, 1, 1, 1), {f, b});
  out.win = win;
  out.hop = hop;
  out.n = n;
  return out;
}

Var Istft(Tape& t, const StftSpec& s) {
  const Tensor& re = t.value(s.re);
  const int64_t f = re.shape[0];
  const int64_t win = s.win, hop = s.hop, n = s.n;
  if ((n + hop - 1) / hop != f)
    throw std::invalid_argument("Istft: spectrogram/hop metadata inconsistent");
  Tensor hann = HannWindow(win);
  // Per-sample window energy, folded through the same reflect map.
  std::vector<double> norm(n, 0.0);
  for (int64_t m = 0; m < f; ++m)
    for (int64_t j = 0; j < win; ++j)
      norm[ReflectIndex(m * hop - win / 2 + j, n)] += hann.data[j] * hann.data[j];
  Tensor inv({n});
  for (int64_t i = 0; i < n; ++i) {
    if (norm[i] < 1e-8)
      throw std::invalid_argument(
          "Istft: window/hop pair leaves sample " + std::to_string(i) +
          " uncovered; reconstruction impossible");
    inv.data[i] = 1.0 / norm[i];
  }
  Var spec = StackReIm(t, s.re, s.im);
  Var frames = IRFFT(t, spec, win);  // [f, win]
  Tensor tiled({f, win});
  for (int64_t m = 0; m < f; ++m)
    std::copy_n(hann.data.data(), win, tiled.data.data() + m * win);
  Var synth = CMul(t, frames, tiled);
  Var ola = OverlapAdd(t, synth, hop, n);
  return CMul(t, ola, inv);
}

}  // namespace audflow
