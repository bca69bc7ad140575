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

#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

#include "audflow/fft.hpp"
#include "audflow/signal.hpp"
#include "audflow/stft.hpp"
#include "doctest.h"
#include "test_util.hpp"

namespace audflow {
namespace {

namespace fs = std::filesystem;

fs::path TempPath(const std::string& name) {
  return fs::temp_directory_path() / ("audflow_test_" + name);
}

// Band power from an independent rFFT of the signal.
double BandPower(const Waveform& w, double lo_hz, double hi_hz) {
  const int64_t n = w.size();
  const int64_t b = fft::NumBins(n);
  std::vector<double> re(b), im(b);
  fft::Rfft(w.samples.data(), n, re.data(), im.data());
  double p = 0.0;
  for (int64_t k = 0; k < b; ++k) {
    const double f = static_cast<double>(k) * kSampleRate / n;
    if (f >= lo_hz && f < hi_hz) p += re[k] * re[k] + im[k] * im[k];
  }
  return p;
}

int64_t PeakBin(const Waveform& w) {
  const int64_t n = w.size();
  const int64_t b = fft::NumBins(n);
  std::vector<double> re(b), im(b);
  fft::Rfft(w.samples.data(), n, re.data(), im.data());
  int64_t best = 0;
  double best_p = -1.0;
  for (int64_t k = 0; k < b; ++k) {
    const double p = re[k] * re[k] + im[k] * im[k];
    if (p > best_p) {
      best_p = p;
      best = k;
    }
  }
  return best;
}

TEST_CASE("wav pcm16 round trip quantizes within half a step") {
  Waveform w = GenPinkNoise(0.1, 3);
  const fs::path p = TempPath("rt.wav");
  WriteWav(p.string(), w);
  Waveform r = ReadWav(p.string());
  REQUIRE(r.size() == w.size());
  CHECK(r.sample_rate == kSampleRate);
  for (int64_t i = 0; i < w.size(); ++i)
    CHECK(std::abs(r.samples[i] - w.samples[i]) <= 0.5 / 32768.0 + 1e-12);
  fs::remove(p);
}

TEST_CASE("wav writer clamps out-of-range samples") {
  Waveform w;
  w.samples = {1.5, -2.0, 0.0};
  const fs::path p = TempPath("clamp.wav");
  WriteWav(p.string(), w);
  Waveform r = ReadWav(p.string());
  CHECK(r.samples[0] == doctest::Approx(1.0 - 1.0 / 32768.0));
  CHECK(r.samples[1] == doctest::Approx(-1.0));
  CHECK(r.samples[2] == 0.0);
  fs::remove(p);
}

TEST_CASE("wav reader reads hand-built float32 stereo and averages channels") {
  // Byte-level oracle: RIFF container assembled independently of WriteWav.
  const float left[3] = {0.5f, -0.25f, 1.0f};
  const float right[3] = {0.0f, 0.25f, 0.5f};
  std::vector<uint8_t> bytes;
  auto put = [&](const void* p, size_t n) {
    const uint8_t* b = static_cast<const uint8_t*>(p);
    bytes.insert(bytes.end(), b, b + n);
  };
  auto u32 = [&](uint32_t v) { put(&v, 4); };
  auto u16 = [&](uint16_t v) { put(&v, 2); };
  put("RIFF", 4);
  u32(36 + 24);
  put("WAVE", 4);
  put("fmt ", 4);
  u32(16);
  u16(3);  // IEEE float
  u16(2);  // stereo
  u32(16000);
  u32(16000 * 8);
  u16(8);
  u16(32);
  put("data", 4);
  u32(24);
  for (int i = 0; i < 3; ++i) {
    put(&left[i], 4);
    put(&right[i], 4);
  }
  const fs::path p = TempPath("f32.wav");
  std::ofstream(p, std::ios::binary)
      .write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  Waveform r = ReadWav(p.string());
  REQUIRE(r.size() == 3);
  for (int i = 0; i < 3; ++i)
    CHECK(r.samples[i] == doctest::Approx(0.5 * (left[i] + right[i])));
  fs::remove(p);
}

TEST_CASE("wav reader rejects wrong rates and truncated files") {
  Waveform w8k;
  w8k.samples.assign(100, 0.1);
  w8k.sample_rate = 8000;
  const fs::path p8 = TempPath("8k.wav");
  WriteWav(p8.string(), w8k);
  CHECK_THROWS_WITH_AS(ReadWav(p8.string()), doctest::Contains("8000"),
                       std::runtime_error);
  fs::remove(p8);

  const fs::path pt = TempPath("trunc.wav");
  std::ofstream(pt, std::ios::binary).write("RIFFxxxx", 8);
  CHECK_THROWS_AS(ReadWav(pt.string()), std::runtime_error);
  fs::remove(pt);

  CHECK_THROWS_AS(ReadWav("/nonexistent/audflow.wav"), std::runtime_error);
}

TEST_CASE("pink noise has equal power per octave and rms 0.1") {
  Waveform w = GenPinkNoise(2.0, 11);
  CHECK(RmsPower(w) == doctest::Approx(0.01).epsilon(1e-9));
  // 1/sqrt(f) amplitude shaping puts equal expected power in each octave;
  // the tolerance covers the chi-squared fluctuation over ~400+ bins.
  const double p1 = BandPower(w, 250, 500);
  const double p2 = BandPower(w, 500, 1000);
  const double p3 = BandPower(w, 1000, 2000);
  const double p4 = BandPower(w, 2000, 4000);
  for (double r : {p2 / p1, p3 / p1, p4 / p1}) {
    CHECK(r > 0.7);
    CHECK(r < 1.4);
  }
  // Seed determinism and distinctness.
  Waveform w2 = GenPinkNoise(2.0, 11);
  CHECK(std::memcmp(w.samples.data(), w2.samples.data(),
                    w.samples.size() * sizeof(double)) == 0);
  Waveform w3 = GenPinkNoise(2.0, 12);
  CHECK(w.samples != w3.samples);
}

TEST_CASE("harmonic complex spectra") {
  Waveform tone = GenHarmonicComplex(440.0, 1, 0.5);
  CHECK(RmsPower(tone) == doctest::Approx(0.01).epsilon(1e-9));
  // 0.5 s at 16 kHz: bin spacing 2 Hz, 440 Hz lands exactly on bin 220.
  CHECK(PeakBin(tone) == 220);

  Waveform hc = GenHarmonicComplex(200.0, 10, 0.5);
  const int64_t n = hc.size();
  const int64_t b = fft::NumBins(n);
  std::vector<double> re(b), im(b);
  fft::Rfft(hc.samples.data(), n, re.data(), im.data());
  // Top-10 magnitude bins are exactly the 10 harmonics.
  std::vector<std::pair<double, int64_t>> mags;
  for (int64_t k = 0; k < b; ++k)
    mags.push_back({re[k] * re[k] + im[k] * im[k], k});
  std::sort(mags.rbegin(), mags.rend());
  std::vector<int64_t> top;
  for (int i = 0; i < 10; ++i) top.push_back(mags[i].second);
  std::sort(top.begin(), top.end());
  for (int i = 0; i < 10; ++i) CHECK(top[i] == 100 * (i + 1));  // 200 Hz = bin 100

  CHECK_THROWS_WITH_AS(GenHarmonicComplex(3000.0, 4, 0.5), doctest::Contains("Nyquist"),
                       std::invalid_argument);
  CHECK_THROWS_AS(GenHarmonicComplex(100.0, 3, 0.5, std::vector<double>{1.0}),
                  std::invalid_argument);
}

TEST_CASE("moving ripple matches its closed form") {
  Tensor s = GenMovingRipple(0.0, 0.0, 0.5);
  CHECK(s.shape == Shape{129, 100});
  for (double v : s.data) CHECK(v == doctest::Approx(1.9));

  Tensor r = GenMovingRipple(2.0, 4.0, 1.0);
  CHECK(r.shape == Shape{129, 200});
  // Temporal period 200/4 = 50 frames along any fixed channel.
  for (int64_t k = 0; k < 129; k += 16)
    for (int64_t t = 0; t < 150; ++t)
      CHECK(r.data[k * 200 + t] == doctest::Approx(r.data[k * 200 + t + 50]));
  // Spot values against the defining formula.
  const double v = 1.0 + 0.9 * std::cos(2.0 * M_PI * (4.0 * 7 / 200.0 + 2.0 * 5 / 24.0));
  CHECK(r.data[5 * 200 + 7] == doctest::Approx(v));

  CHECK_THROWS_AS(GenMovingRipple(12.0, 1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(GenMovingRipple(1.0, 100.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(GenMovingRipple(1.0, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("mix_at_snr reproduces the requested snr exactly") {
  Waveform s = GenHarmonicComplex(250.0, 5, 1.0);
  Waveform n = GenPinkNoise(1.0, 5);
  for (double snr : {-3.0, 0.0, 3.0, 10.0}) {
    Waveform mix = MixAtSnr(s, n, snr);
    Waveform resid;
    resid.samples.resize(mix.size());
    for (int64_t i = 0; i < mix.size(); ++i)
      resid.samples[i] = mix.samples[i] - s.samples[i];
    const double measured = 10.0 * std::log10(RmsPower(s) / RmsPower(resid));
    CHECK(std::abs(measured - snr) < 1e-9);
  }
  // Equal-power inputs at 0 dB: gain exactly 1.
  Waveform mix0 = MixAtSnr(s, n, 0.0);
  const double g = (mix0.samples[0] - s.samples[0]) / n.samples[0];
  CHECK(g == doctest::Approx(1.0).epsilon(1e-12));
  // +60 dB leaves residual power 1e-6 of the speech power.
  Waveform mix60 = MixAtSnr(s, n, 60.0);
  double pr = 0.0;
  for (int64_t i = 0; i < mix60.size(); ++i) {
    const double d = mix60.samples[i] - s.samples[i];
    pr += d * d;
  }
  pr /= static_cast<double>(mix60.size());
  CHECK(pr == doctest::Approx(1e-6 * RmsPower(s)).epsilon(1e-9));

  Waveform zero;
  zero.samples.assign(s.samples.size(), 0.0);
  CHECK_THROWS_AS(MixAtSnr(s, zero, 0.0), std::invalid_argument);
  Waveform shorter;
  shorter.samples.assign(10, 0.1);
  CHECK_THROWS_AS(MixAtSnr(s, shorter, 0.0), std::invalid_argument);
}

TEST_CASE("stft shape, zeros, and tone bin") {
  Tape t;
  Var x = t.Leaf(Tensor({16000}), false);
  StftSpec s = Stft(t, x, 256, 80);
  CHECK(t.value(s.re).shape == Shape{200, 129});
  CHECK(t.value(s.im).shape == Shape{200, 129});
  for (double v : t.value(s.re).data) CHECK(v == 0.0);
  for (double v : t.value(s.im).data) CHECK(v == 0.0);

  Waveform tone = GenHarmonicComplex(1000.0, 1, 1.0);
  Tape t2;
  StftSpec st = Stft(t2, t2.Leaf(Tensor({16000}, tone.samples), false), 256, 80);
  const Tensor& re = t2.value(st.re);
  const Tensor& im = t2.value(st.im);
  // Every interior frame peaks at bin round(1000 * 256 / 16000) = 16.
  for (int64_t fr = 5; fr < 195; fr += 13) {
    int64_t best = 0;
    double bp = -1.0;
    for (int64_t k = 0; k < 129; ++k) {
      const double p = re.data[fr * 129 + k] * re.data[fr * 129 + k] +
                       im.data[fr * 129 + k] * im.data[fr * 129 + k];
      if (p > bp) {
        bp = p;
        best = k;
      }
    }
    CHECK(best == 16);
  }
}

TEST_CASE("istft inverts stft at all loss windows") {
  Rng rng(21);
  Tensor x = testutil::RandomTensor({16000}, rng);
  for (int64_t win : {int64_t{256}, int64_t{512}, int64_t{1024}}) {
    for (int64_t hop : {win / 4, int64_t{80}}) {
      Tape t;
      Var xv = t.Leaf(x, false);
      StftSpec s = Stft(t, xv, win, hop);
      Var y = Istft(t, s);
      const Tensor& yt = t.value(y);
      REQUIRE(yt.size() == 16000);
      double worst = 0.0;
      for (int64_t i = 0; i < 16000; ++i)
        worst = std::max(worst, std::abs(yt.data[i] - x.data[i]));
      CHECK(worst < 1e-6);
    }
  }
}

TEST_CASE("istft is linear and maps zero to zero") {
  Rng rng(22);
  Tensor x = testutil::RandomTensor({2000}, rng);
  Tape t;
  StftSpec s = Stft(t, t.Leaf(x, false), 256, 64);
  Var y1 = Istft(t, s);
  StftSpec s3{MulConst(t, s.re, 3.0), MulConst(t, s.im, 3.0), s.win, s.hop, s.n};
  Var y3 = Istft(t, s3);
  const Tensor& a = t.value(y1);
  const Tensor& b = t.value(y3);
  for (int64_t i = 0; i < a.size(); ++i)
    CHECK(b.data[i] == doctest::Approx(3.0 * a.data[i]).epsilon(1e-12));

  StftSpec z{MulConst(t, s.re, 0.0), MulConst(t, s.im, 0.0), s.win, s.hop, s.n};
  const Tensor& zy = t.value(Istft(t, z));
  for (double v : zy.data) CHECK(v == 0.0);
}

TEST_CASE("gradient flows through istft(mask * stft(x))") {
  Rng rng(23);
  Tensor x = testutil::RandomTensor({800}, rng);
  Tensor m = testutil::RandomTensor({10, 129}, rng, 0.1, 0.9);  // ceil(800/80) frames
  Tensor w = testutil::RandomTensor({800}, rng);
  auto f = [&](Tape& t, const std::vector<Var>& vars) {
    StftSpec s = Stft(t, vars[0], 256, 80);
    StftSpec masked{Mul(t, s.re, vars[1]), Mul(t, s.im, vars[1]), s.win, s.hop, s.n};
    return SumAll(t, Mul(t, Istft(t, masked), t.Leaf(w, false)));
  };
  CHECK(testutil::MaxGradError(f, {x, m}, 1e-6) < 1e-5);
}

}  // namespace
}  // namespace audflow
