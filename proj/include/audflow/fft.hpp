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
// Thin FFTW wrapper: 1-D real transforms (plus their adjoints, which are
// the backward rules) and 2-D real transforms for FFT convolution. Plans
// are cached per size with FFTW_ESTIMATE so results are run-to-run
// deterministic.

#ifndef AUDFLOW_FFT_H_
#define AUDFLOW_FFT_H_

#include <complex>
#include <cstdint>
#include <vector>

namespace audflow::fft {

inline int64_t NumBins(int64_t n) { return n / 2 + 1; }

// re/im have n/2+1 entries. FFTW sign convention: re_k = sum x_n cos(2pi kn/N),
// im_k = -sum x_n sin(2pi kn/N).
void Rfft(const double* x, int64_t n, double* re, double* im);

// Normalized inverse: Irfft(Rfft(x)) == x.
void Irfft(const double* re, const double* im, int64_t n, double* x);

// Adjoint of Rfft viewed as a linear map R^n -> R^(2(n/2+1)).
void RfftAdjoint(const double* gre, const double* gim, int64_t n, double* gx);

// Adjoint of the normalized Irfft.
void IrfftAdjoint(const double* gx, int64_t n, double* gre, double* gim);

// Smallest 5-smooth integer >= n (fast FFTW sizes).
int64_t NextFastSize(int64_t n);

// 2-D real transforms on h x w arrays, row-major; spectrum is h x (w/2+1)
// interleaved complex. Unnormalized forward; inverse carries the 1/(h*w).
void Rfft2(const double* x, int64_t h, int64_t w, std::complex<double>* spec);
void Irfft2(const std::complex<double>* spec, int64_t h, int64_t w, double* x);

}  // namespace audflow::fft

#endif  // AUDFLOW_FFT_H_
