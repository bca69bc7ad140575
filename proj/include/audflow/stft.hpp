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
// Differentiable STFT/iSTFT: Hann analysis and synthesis windows, reflect
// center padding, frame count ceil(n/hop), weighted overlap-add with exact
// per-sample normalization.

#ifndef AUDFLOW_STFT_H_
#define AUDFLOW_STFT_H_

#include "audflow/ops.hpp"

namespace audflow {

// Complex spectrogram on a tape: paired real/imaginary [frames, bins].
struct StftSpec {
  Var re, im;
  int64_t win = 0;
  int64_t hop = 0;
  int64_t n = 0;  // original signal length
};

Tensor HannWindow(int64_t win);  // periodic

StftSpec Stft(Tape& t, Var x, int64_t win, int64_t hop);

// Exact inverse of Stft for untouched spectra; linear in the spectrum.
// Throws at construction when some output sample gets no window energy
// (window/hop pair unusable for reconstruction).
Var Istft(Tape& t, const StftSpec& s);

}  // namespace audflow

#endif  // AUDFLOW_STFT_H_
