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

#include "audflow/signal.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "audflow/fft.hpp"
#include "audflow/rng.hpp"

namespace audflow {
namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kStimRms = 0.1;

uint32_t ReadU32(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

uint16_t ReadU16(const uint8_t* p) {
  return static_cast<uint16_t>(p[0]) | (static_cast<uint16_t>(p[1]) << 8);
}

[[noreturn]] void ParseError(const std::string& path, size_t offset,
                             const std::string& what) {
  throw std::runtime_error("ReadWav: " + path + ": " + what + " (byte offset " +
                           std::to_string(offset) + ")");
}

void Normalize(std::vector<double>& x, double target_rms) {
  double p = 0.0;
  for (double v : x) p += v * v;
  p /= static_cast<double>(x.size());
  if (p <= 0.0) return;
  const double g = target_rms / std::sqrt(p);
  for (double& v : x) v *= g;
}

}  // namespace

Waveform ReadWav(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("ReadWav: cannot open " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                             std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0)
    ParseError(path, 0, "missing RIFF header");
  if (std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    ParseError(path, 8, "missing WAVE tag");

  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  bool have_fmt = false;
  const uint8_t* data = nullptr;
  size_t data_len = 0;
  size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const uint32_t chunk_len = ReadU32(bytes.data() + pos + 4);
    if (pos + 8 + chunk_len > bytes.size())
      ParseError(path, pos, "chunk runs past end of file");
    if (std::memcmp(bytes.data() + pos, "fmt ", 4) == 0) {
      if (chunk_len < 16) ParseError(path, pos, "fmt chunk too short");
      const uint8_t* p = bytes.data() + pos + 8;
      format = ReadU16(p);
      channels = ReadU16(p + 2);
      rate = ReadU32(p + 4);
      bits = ReadU16(p + 14);
      have_fmt = true;
    } else if (std::memcmp(bytes.data() + pos, "data", 4) == 0) {
      data = bytes.data() + pos + 8;
      data_len = chunk_len;
    }
    pos += 8 + chunk_len + (chunk_len % 2);  // chunks are word-aligned
  }
  if (!have_fmt) ParseError(path, pos, "no fmt chunk");
  if (!data) ParseError(path, pos, "no data chunk");
  if (channels < 1) ParseError(path, pos, "zero channels");

  const bool pcm16 = (format == 1 && bits == 16);
  const bool float32 = (format == 3 && bits == 32);
  if (!pcm16 && !float32)
    throw std::runtime_error("ReadWav: " + path + ": unsupported encoding (format " +
                             std::to_string(format) + ", " + std::to_string(bits) +
                             " bits); need PCM16 or IEEE float32");
  if (rate != static_cast<uint32_t>(kSampleRate))
    throw std::runtime_error("ReadWav: " + path + ": sample rate " +
                             std::to_string(rate) + ", expected " +
                             std::to_string(kSampleRate));

  const size_t bytes_per_sample = pcm16 ? 2 : 4;
  const size_t frame_bytes = bytes_per_sample * channels;
  const size_t n = data_len / frame_bytes;
  if (n < 1) throw std::runtime_error("ReadWav: " + path + ": empty data chunk");
  Waveform w;
  w.sample_rate = kSampleRate;
  w.samples.resize(n);
  for (size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (size_t c = 0; c < channels; ++c) {
      const uint8_t* p = data + i * frame_bytes + c * bytes_per_sample;
      if (pcm16) {
        int16_t v;
        std::memcpy(&v, p, 2);
        acc += static_cast<double>(v) / 32768.0;
      } else {
        float v;
        std::memcpy(&v, p, 4);
        acc += static_cast<double>(v);
      }
    }
    w.samples[i] = acc / channels;
  }
  return w;
}

void WriteWav(const std::string& path, const Waveform& w) {
  for (double v : w.samples)
    if (!std::isfinite(v)) throw std::runtime_error("WriteWav: non-finite sample");
  const uint32_t n = static_cast<uint32_t>(w.samples.size());
  const uint32_t data_len = n * 2;
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("WriteWav: cannot open " + path);
  auto u32 = [&](uint32_t v) { f.write(reinterpret_cast<const char*>(&v), 4); };
  auto u16 = [&](uint16_t v) { f.write(reinterpret_cast<const char*>(&v), 2); };
  f.write("RIFF", 4);
  u32(36 + data_len);
  f.write("WAVE", 4);
  f.write("fmt ", 4);
  u32(16);
  u16(1);  // PCM
  u16(1);  // mono
  u32(w.sample_rate);
  u32(w.sample_rate * 2);
  u16(2);
  u16(16);
  f.write("data", 4);
  u32(data_len);
  const double max_code = 1.0 - 1.0 / 32768.0;
  for (double v : w.samples) {
    const double c = std::min(max_code, std::max(-1.0, v));
    const int16_t q = static_cast<int16_t>(std::lrint(c * 32768.0));
    f.write(reinterpret_cast<const char*>(&q), 2);
  }
  if (!f) throw std::runtime_error("WriteWav: write failed for " + path);
}

Waveform GenPinkNoise(double duration_s, uint64_t seed) {
  if (duration_s <= 0.0) throw std::invalid_argument("GenPinkNoise: duration must be > 0");
  const int64_t n = static_cast<int64_t>(std::lrint(duration_s * kSampleRate));
  Rng rng(seed);
  std::vector<double> x(n);
  for (double& v : x) v = rng.Gaussian();
  const int64_t b = fft::NumBins(n);
  std::vector<double> re(b), im(b);
  fft::Rfft(x.data(), n, re.data(), im.data());
  re[0] = im[0] = 0.0;  // no DC
  for (int64_t k = 1; k < b; ++k) {
    const double fk = static_cast<double>(k) * kSampleRate / static_cast<double>(n);
    const double s = 1.0 / std::sqrt(fk);
    re[k] *= s;
    im[k] *= s;
  }
  Waveform w;
  w.samples.resize(n);
  fft::Irfft(re.data(), im.data(), n, w.samples.data());
  Normalize(w.samples, kStimRms);
  return w;
}

Waveform GenHarmonicComplex(double f0_hz, int n_harmonics, double duration_s,
                            const std::optional<std::vector<double>>& weights) {
  if (f0_hz <= 0.0 || n_harmonics < 1 || duration_s <= 0.0)
    throw std::invalid_argument("GenHarmonicComplex: bad arguments");
  if (f0_hz * n_harmonics >= kSampleRate / 2.0)
    throw std::invalid_argument("GenHarmonicComplex: harmonic " +
                                std::to_string(f0_hz * n_harmonics) +
                                " Hz is at or above the Nyquist frequency");
  if (weights && static_cast<int>(weights->size()) != n_harmonics)
    throw std::invalid_argument("GenHarmonicComplex: weight count != n_harmonics");
  const int64_t n = static_cast<int64_t>(std::lrint(duration_s * kSampleRate));
  Waveform w;
  w.samples.assign(n, 0.0);
  for (int k = 1; k <= n_harmonics; ++k) {
    const double a = weights ? (*weights)[k - 1] : 1.0;
    const double step = kTwoPi * f0_hz * k / kSampleRate;
    for (int64_t i = 0; i < n; ++i) w.samples[i] += a * std::sin(step * i);
  }
  Normalize(w.samples, kStimRms);
  return w;
}

Tensor GenMovingRipple(double cap_omega_cpo, double omega_hz, double duration_s,
                       double amplitude) {
  if (std::abs(omega_hz) >= 100.0 || cap_omega_cpo >= 12.0 || cap_omega_cpo < 0.0)
    throw std::invalid_argument(
        "GenMovingRipple: parameters not representable on the 200 Hz / 24-per-octave "
        "grid (need |omega| < 100 and 0 <= Omega < 12)");
  if (duration_s <= 0.0) throw std::invalid_argument("GenMovingRipple: duration must be > 0");
  const int64_t frames = static_cast<int64_t>(std::lrint(duration_s * kFrameRate));
  const int64_t channels = 129;
  Tensor s({channels, frames});
  for (int64_t k = 0; k < channels; ++k)
    for (int64_t n = 0; n < frames; ++n)
      s.data[k * frames + n] =
          1.0 + amplitude * std::cos(kTwoPi * (omega_hz * n / kFrameRate +
                                               cap_omega_cpo * k / 24.0));
  return s;
}

double RmsPower(const Waveform& w) {
  double p = 0.0;
  for (double v : w.samples) p += v * v;
  return p / static_cast<double>(w.samples.size());
}

Waveform MixAtSnr(const Waveform& speech, const Waveform& noise, double snr_db) {
  if (speech.samples.size() != noise.samples.size())
    throw std::invalid_argument("MixAtSnr: length mismatch");
  const double ps = RmsPower(speech);
  const double pn = RmsPower(noise);
  if (ps <= 0.0 || pn <= 0.0) throw std::invalid_argument("MixAtSnr: zero-power input");
  const double g = std::sqrt(ps / (pn * std::pow(10.0, snr_db / 10.0)));
  Waveform out;
  out.sample_rate = speech.sample_rate;
  out.samples.resize(speech.samples.size());
  for (size_t i = 0; i < out.samples.size(); ++i)
    out.samples[i] = speech.samples[i] + g * noise.samples[i];
  return out;
}

}  // namespace audflow
