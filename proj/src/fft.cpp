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

#include "audflow/fft.hpp"

#include <fftw3.h>

#include <cstring>
#include <map>
#include <mutex>
#include <stdexcept>

namespace audflow::fft {
namespace {

// Each cached plan owns fftw_malloc'd scratch so FFTW can pick SIMD
// codelets; callers copy through the scratch under the lock. Plans use
// FFTW_ESTIMATE, which is deterministic across runs.
struct Plan1D {
  fftw_plan plan = nullptr;
  double* r = nullptr;
  fftw_complex* c = nullptr;
};

struct PlanCache {
  std::mutex mu;
  std::map<int64_t, Plan1D> r2c_1d, c2r_1d;
  std::map<std::pair<int64_t, int64_t>, Plan1D> r2c_2d, c2r_2d;
};

PlanCache& Cache() {
  static PlanCache* c = new PlanCache();
  return *c;
}

Plan1D& GetR2C1D(int64_t n) {
  auto& c = Cache();
  auto it = c.r2c_1d.find(n);
  if (it != c.r2c_1d.end()) return it->second;
  Plan1D p;
  p.r = fftw_alloc_real(n);
  p.c = fftw_alloc_complex(n / 2 + 1);
  p.plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), p.r, p.c, FFTW_ESTIMATE);
  return c.r2c_1d.emplace(n, p).first->second;
}

Plan1D& GetC2R1D(int64_t n) {
  auto& c = Cache();
  auto it = c.c2r_1d.find(n);
  if (it != c.c2r_1d.end()) return it->second;
  Plan1D p;
  p.r = fftw_alloc_real(n);
  p.c = fftw_alloc_complex(n / 2 + 1);
  p.plan = fftw_plan_dft_c2r_1d(static_cast<int>(n), p.c, p.r, FFTW_ESTIMATE);
  return c.c2r_1d.emplace(n, p).first->second;
}

Plan1D& GetR2C2D(int64_t h, int64_t w) {
  auto& c = Cache();
  auto key = std::make_pair(h, w);
  auto it = c.r2c_2d.find(key);
  if (it != c.r2c_2d.end()) return it->second;
  Plan1D p;
  p.r = fftw_alloc_real(h * w);
  p.c = fftw_alloc_complex(h * (w / 2 + 1));
  p.plan = fftw_plan_dft_r2c_2d(static_cast<int>(h), static_cast<int>(w), p.r, p.c,
                                FFTW_ESTIMATE);
  return c.r2c_2d.emplace(key, p).first->second;
}

Plan1D& GetC2R2D(int64_t h, int64_t w) {
  auto& c = Cache();
  auto key = std::make_pair(h, w);
  auto it = c.c2r_2d.find(key);
  if (it != c.c2r_2d.end()) return it->second;
  Plan1D p;
  p.r = fftw_alloc_real(h * w);
  p.c = fftw_alloc_complex(h * (w / 2 + 1));
  p.plan = fftw_plan_dft_c2r_2d(static_cast<int>(h), static_cast<int>(w), p.c, p.r,
                                FFTW_ESTIMATE);
  return c.c2r_2d.emplace(key, p).first->second;
}

}  // namespace

void Rfft(const double* x, int64_t n, double* re, double* im) {
  if (n < 1) throw std::invalid_argument("Rfft: length must be >= 1");
  const int64_t b = NumBins(n);
  auto& c = Cache();
  std::lock_guard<std::mutex> lock(c.mu);
  Plan1D& p = GetR2C1D(n);
  std::memcpy(p.r, x, n * sizeof(double));
  fftw_execute(p.plan);
  for (int64_t k = 0; k < b; ++k) {
    re[k] = p.c[k][0];
    im[k] = p.c[k][1];
  }
}

void Irfft(const double* re, const double* im, int64_t n, double* x) {
  if (n < 1) throw std::invalid_argument("Irfft: length must be >= 1");
  const int64_t b = NumBins(n);
  auto& c = Cache();
  std::lock_guard<std::mutex> lock(c.mu);
  Plan1D& p = GetC2R1D(n);
  for (int64_t k = 0; k < b; ++k) {
    p.c[k][0] = re[k];
    p.c[k][1] = im[k];
  }
  fftw_execute(p.plan);
  const double inv = 1.0 / static_cast<double>(n);
  for (int64_t i = 0; i < n; ++i) x[i] = p.r[i] * inv;
}

void RfftAdjoint(const double* gre, const double* gim, int64_t n, double* gx) {
  // c2r implicitly doubles interior hermitian bins; halve them so the
  // result is the plain adjoint sum over k = 0..n/2.
  const int64_t b = NumBins(n);
  auto& c = Cache();
  std::lock_guard<std::mutex> lock(c.mu);
  Plan1D& p = GetC2R1D(n);
  for (int64_t k = 0; k < b; ++k) {
    const bool edge = (k == 0) || (n % 2 == 0 && k == n / 2);
    const double s = edge ? 1.0 : 0.5;
    p.c[k][0] = s * gre[k];
    p.c[k][1] = s * gim[k];
  }
  fftw_execute(p.plan);
  std::memcpy(gx, p.r, n * sizeof(double));
}

void IrfftAdjoint(const double* gx, int64_t n, double* gre, double* gim) {
  const int64_t b = NumBins(n);
  auto& c = Cache();
  std::lock_guard<std::mutex> lock(c.mu);
  Plan1D& p = GetR2C1D(n);
  std::memcpy(p.r, gx, n * sizeof(double));
  fftw_execute(p.plan);
  const double inv = 1.0 / static_cast<double>(n);
  for (int64_t k = 0; k < b; ++k) {
    const bool edge = (k == 0) || (n % 2 == 0 && k == n / 2);
    const double s = (edge ? 1.0 : 2.0) * inv;
    gre[k] = s * p.c[k][0];
    gim[k] = s * p.c[k][1];
  }
}

int64_t NextFastSize(int64_t n) {
  if (n < 1) return 1;
  while (true) {
    int64_t m = n;
    for (int64_t f : {2, 3, 5}) {
      while (m % f == 0) m /= f;
    }
    if (m == 1) return n;
    ++n;
  }
}

void Rfft2(const double* x, int64_t h, int64_t w, std::complex<double>* spec) {
  auto& c = Cache();
  std::lock_guard<std::mutex> lock(c.mu);
  Plan1D& p = GetR2C2D(h, w);
  std::memcpy(p.r, x, h * w * sizeof(double));
  fftw_execute(p.plan);
  std::memcpy(spec, p.c, h * (w / 2 + 1) * sizeof(fftw_complex));
}

void Irfft2(const std::complex<double>* spec, int64_t h, int64_t w, double* x) {
  const int64_t wb = w / 2 + 1;
  auto& c = Cache();
  std::lock_guard<std::mutex> lock(c.mu);
  Plan1D& p = GetC2R2D(h, w);
  std::memcpy(p.c, spec, h * wb * sizeof(fftw_complex));
  fftw_execute(p.plan);
  const double inv = 1.0 / static_cast<double>(h * w);
  for (int64_t i = 0; i < h * w; ++i) x[i] = p.r[i] * inv;
}

}  // namespace audflow::fft
