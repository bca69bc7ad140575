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
// FFT primitives (gradient = adjoint transform), the fused cochlear
// spectral stages, and STFT framing/overlap-add.

#include "audflow/fft.hpp"
#include "audflow/ops.hpp"

namespace audflow {
namespace {

// Reflect index into [0, n) without repeating the edge sample.
int64_t ReflectIndex(int64_t s, int64_t n) {
  if (n == 1) return 0;
  while (s < 0 || s >= n) {
    if (s < 0) s = -s;
    if (s >= n) s = 2 * n - 2 - s;
  }
  return s;
}

}  // namespace

Var RFFT(Tape& t, Var x) {
  const Tensor& vx = t.value(x);
  const int64_t n = vx.shape.back();
  const int64_t b = fft::NumBins(n);
  const int64_t rows = vx.size() / n;
  Shape oshape(vx.shape.begin(), vx.shape.end() - 1);
  oshape.push_back(2);
  oshape.push_back(b);
  Tensor y(oshape);
  for (int64_t r = 0; r < rows; ++r)
    fft::Rfft(vx.data.data() + r * n, n, y.data.data() + r * 2 * b,
              y.data.data() + r * 2 * b + b);
  return t.Push(std::move(y), t.requires_grad(x),
                [x, n, b, rows](Tape& tp, const Tensor& g) {
                  Tensor gx(tp.value(x).shape);
                  for (int64_t r = 0; r < rows; ++r)
                    fft::RfftAdjoint(g.data.data() + r * 2 * b,
                                     g.data.data() + r * 2 * b + b, n,
                                     gx.data.data() + r * n);
                  tp.Accumulate(x, gx);
                });
}

Var IRFFT(Tape& t, Var x, int64_t n) {
  const Tensor& vx = t.value(x);
  if (vx.ndim() < 2 || vx.shape[vx.ndim() - 2] != 2 ||
      vx.shape.back() != fft::NumBins(n))
    throw std::invalid_argument("IRFFT: expected [...,2," +
                                std::to_string(fft::NumBins(n)) + "], got " +
                                ShapeToString(vx.shape));
  const int64_t b = vx.shape.back();
  const int64_t rows = vx.size() / (2 * b);
  Shape oshape(vx.shape.begin(), vx.shape.end() - 2);
  oshape.push_back(n);
  Tensor y(oshape);
  for (int64_t r = 0; r < rows; ++r)
    fft::Irfft(vx.data.data() + r * 2 * b, vx.data.data() + r * 2 * b + b, n,
               y.data.data() + r * n);
  return t.Push(std::move(y), t.requires_grad(x),
                [x, n, b, rows](Tape& tp, const Tensor& g) {
                  Tensor gx(tp.value(x).shape);
                  for (int64_t r = 0; r < rows; ++r)
                    fft::IrfftAdjoint(g.data.data() + r * n, n,
                                      gx.data.data() + r * 2 * b,
                                      gx.data.data() + r * 2 * b + b);
                  tp.Accumulate(x, gx);
                });
}

Var FilterbankApply(Tape& t, Var x_spec, const Tensor& resp, int64_t n) {
  const Tensor& vx = t.value(x_spec);
  const int64_t b = fft::NumBins(n);
  if (vx.ndim() != 2 || vx.shape[0] != 2 || vx.shape[1] != b || resp.ndim() != 2 ||
      resp.shape[1] != b)
    throw std::invalid_argument("FilterbankApply: expected spec [2," + std::to_string(b) +
                                "] and resp [C," + std::to_string(b) + "], got " +
                                ShapeToString(vx.shape) + " and " +
                                ShapeToString(resp.shape));
  const int64_t c = resp.shape[0];
  Tensor y({c, n});
  std::vector<double> re(b), im(b);
  for (int64_t k = 0; k < c; ++k) {
    const double* rk = resp.data.data() + k * b;
    for (int64_t j = 0; j < b; ++j) {
      re[j] = rk[j] * vx.data[j];
      im[j] = rk[j] * vx.data[b + j];
    }
    fft::Irfft(re.data(), im.data(), n, y.data.data() + k * n);
  }
  return t.Push(std::move(y), t.requires_grad(x_spec),
                [x_spec, resp, n, b, c](Tape& tp, const Tensor& g) {
                  Tensor gx({2, b});
                  std::vector<double> gre(b), gim(b);
                  for (int64_t k = 0; k < c; ++k) {
                    fft::IrfftAdjoint(g.data.data() + k * n, n, gre.data(), gim.data());
                    const double* rk = resp.data.data() + k * b;
                    for (int64_t j = 0; j < b; ++j) {
                      gx.data[j] += rk[j] * gre[j];
                      gx.data[b + j] += rk[j] * gim[j];
                    }
                  }
                  tp.Accumulate(x_spec, gx);
                });
}

Var ComplexRowMul(Tape& t, Var spec, Var hr, Var hi) {
  const Tensor& vs = t.value(spec);
  const Tensor& vr = t.value(hr);
  const Tensor& vi = t.value(hi);
  if (vs.ndim() != 3 || vs.shape[1] != 2 || vr.ndim() != 1 || vi.ndim() != 1 ||
      vr.shape[0] != vs.shape[2] || vi.shape[0] != vs.shape[2])
    throw std::invalid_argument("ComplexRowMul: incompatible shapes " +
                                ShapeToString(vs.shape) + ", " + ShapeToString(vr.shape) +
                                ", " + ShapeToString(vi.shape));
  const int64_t c = vs.shape[0], b = vs.shape[2];
  Tensor y(vs.shape);
  for (int64_t k = 0; k < c; ++k) {
    const double* re = vs.data.data() + k * 2 * b;
    const double* im = re + b;
    double* yr = y.data.data() + k * 2 * b;
    double* yi = yr + b;
    for (int64_t j = 0; j < b; ++j) {
      yr[j] = re[j] * vr.data[j] - im[j] * vi.data[j];
      yi[j] = re[j] * vi.data[j] + im[j] * vr.data[j];
    }
  }
  bool rg = t.requires_grad(spec) || t.requires_grad(hr) || t.requires_grad(hi);
  return t.Push(std::move(y), rg, [spec, hr, hi, c, b](Tape& tp, const Tensor& g) {
    const Tensor& vs = tp.value(spec);
    const Tensor& vr = tp.value(hr);
    const Tensor& vi = tp.value(hi);
    if (tp.requires_grad(spec)) {
      Tensor gs(vs.shape);
      for (int64_t k = 0; k < c; ++k) {
        const double* gr = g.data.data() + k * 2 * b;
        const double* gi = gr + b;
        double* or_ = gs.data.data() + k * 2 * b;
        double* oi = or_ + b;
        for (int64_t j = 0; j < b; ++j) {
          or_[j] = gr[j] * vr.data[j] + gi[j] * vi.data[j];
          oi[j] = -gr[j] * vi.data[j] + gi[j] * vr.data[j];
        }
      }
      tp.Accumulate(spec, gs);
    }
    if (tp.requires_grad(hr) || tp.requires_grad(hi)) {
      Tensor ghr(vr.shape), ghi(vi.shape);
      for (int64_t k = 0; k < c; ++k) {
        const double* re = vs.data.data() + k * 2 * b;
        const double* im = re + b;
        const double* gr = g.data.data() + k * 2 * b;
        const double* gi = gr + b;
        for (int64_t j = 0; j < b; ++j) {
          ghr.data[j] += gr[j] * re[j] + gi[j] * im[j];
          ghi.data[j] += -gr[j] * im[j] + gi[j] * re[j];
        }
      }
      tp.Accumulate(hr, ghr);
      tp.Accumulate(hi, ghi);
    }
  });
}

Var FrameSignal(Tape& t, Var x, int64_t win, int64_t hop) {
  const Tensor& vx = t.value(x);
  if (vx.ndim() != 1) throw std::invalid_argument("FrameSignal: need 1-D signal");
  if (hop <= 0) throw std::invalid_argument("FrameSignal: hop must be positive");
  if (win % 2 != 0) throw std::invalid_argument("FrameSignal: window length must be even");
  const int64_t n = vx.shape[0];
  const int64_t f = (n + hop - 1) / hop;
  Tensor y({f, win});
  for (int64_t m = 0; m < f; ++m)
    for (int64_t j = 0; j < win; ++j)
      y.data[m * win + j] = vx.data[ReflectIndex(m * hop - win / 2 + j, n)];
  return t.Push(std::move(y), t.requires_grad(x),
                [x, win, hop, n, f](Tape& tp, const Tensor& g) {
                  Tensor gx({n});
                  for (int64_t m = 0; m < f; ++m)
                    for (int64_t j = 0; j < win; ++j)
                      gx.data[ReflectIndex(m * hop - win / 2 + j, n)] +=
                          g.data[m * win + j];
                  tp.Accumulate(x, gx);
                });
}

Var OverlapAdd(Tape& t, Var frames, int64_t hop, int64_t n) {
  const Tensor& vf = t.value(frames);
  if (vf.ndim() != 2) throw std::invalid_argument("OverlapAdd: need [F,win] frames");
  const int64_t f = vf.shape[0], win = vf.shape[1];
  if ((n + hop - 1) / hop != f)
    throw std::invalid_argument("OverlapAdd: frame count inconsistent with length");
  Tensor y({n});
  for (int64_t m = 0; m < f; ++m)
    for (int64_t j = 0; j < win; ++j)
      y.data[ReflectIndex(m * hop - win / 2 + j, n)] += vf.data[m * win + j];
  return t.Push(std::move(y), t.requires_grad(frames),
                [frames, hop, n, f, win](Tape& tp, const Tensor& g) {
                  Tensor gf({f, win});
                  for (int64_t m = 0; m < f; ++m)
                    for (int64_t j = 0; j < win; ++j)
                      gf.data[m * win + j] = g.data[ReflectIndex(m * hop - win / 2 + j, n)];
                  tp.Accumulate(frames, gf);
                });
}

Var StackReIm(Tape& t, Var re, Var im) {
  const Tensor& vr = t.value(re);
  const Tensor& vi = t.value(im);
  CheckSameShape("StackReIm", vr, vi);
  if (vr.ndim() != 2) throw std::invalid_argument("StackReIm: need [F,B] parts");
  const int64_t f = vr.shape[0], b = vr.shape[1];
  Tensor y({f, 2, b});
  for (int64_t m = 0; m < f; ++m) {
    std::copy_n(vr.data.data() + m * b, b, y.data.data() + m * 2 * b);
    std::copy_n(vi.data.data() + m * b, b, y.data.data() + m * 2 * b + b);
  }
  bool rg = t.requires_grad(re) || t.requires_grad(im);
  return t.Push(std::move(y), rg, [re, im, f, b](Tape& tp, const Tensor& g) {
    Tensor gr({f, b}), gi({f, b});
    for (int64_t m = 0; m < f; ++m) {
      std::copy_n(g.data.data() + m * 2 * b, b, gr.data.data() + m * b);
      std::copy_n(g.data.data() + m * 2 * b + b, b, gi.data.data() + m * b);
    }
    tp.Accumulate(re, gr);
    tp.Accumulate(im, gi);
  });
}

}  // namespace audflow
