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
// Audio file I/O, deterministic synthetic stimuli, and SNR mixing.
// Everything here is a pure function of (arguments, seed).

#ifndef AUDFLOW_SIGNAL_H_
#define AUDFLOW_SIGNAL_H_

#include <optional>
#include <string>
#include <vector>

#include "audflow/tensor.hpp"

namespace audflow {

inline constexpr int kSampleRate = 16000;
inline constexpr int kFrameRate = 200;
inline constexpr int kFrameHop = kSampleRate / kFrameRate;  // 80

struct Waveform {
  std::vector<double> samples;
  int sample_rate = kSampleRate;

  int64_t size() const { return static_cast<int64_t>(samples.size()); }
  double duration_s() const { return static_cast<double>(size()) / sample_rate; }
};

// RIFF/WAVE reader: PCM 16-bit or IEEE float 32-bit, any channel count
// (channels are averaged to mono). The pipeline runs at 16 kHz only, so a
// file at any other rate is rejected rather than resampled.
Waveform ReadWav(const std::string& path);

// PCM16 little-endian writer; samples are clamped to [-1, 1 - 2^-15].
void WriteWav(const std::string& path, const Waveform& w);

// 1/sqrt(f)-shaped Gaussian noise, DC removed, RMS 0.1.
Waveform GenPinkNoise(double duration_s, uint64_t seed);

// Sum of equal-phase sinusoids at k*f0, k = 1..n, optionally weighted,
// RMS 0.1. Throws if any harmonic reaches the Nyquist frequency.
Waveform GenHarmonicComplex(double f0_hz, int n_harmonics, double duration_s,
                            const std::optional<std::vector<double>>& weights = {});

// Synthetic auditory-spectrogram stimulus on the 129 x 200 Hz grid:
// S[k,n] = 1 + amplitude * cos(2*pi*(omega*n/200 + cap_omega*k/24)).
Tensor GenMovingRipple(double cap_omega_cpo, double omega_hz, double duration_s,
                       double amplitude = 0.9);

// speech + g*noise with g chosen so the component SNR is exactly snr_db.
Waveform MixAtSnr(const Waveform& speech, const Waveform& noise, double snr_db);

double RmsPower(const Waveform& w);  // mean squared sample value

}  // namespace audflow

#endif  // AUDFLOW_SIGNAL_H_
