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
// Dense and convolutional linear maps. Conv2D goes through im2col + GEMM;
// Corr2D (the big STRF kernels) goes through the frequency domain.

#include <Eigen/Dense>
#include <complex>
#include <memory>

#include "audflow/fft.hpp"
#include "audflow/ops.hpp"

namespace audflow {
namespace {

using MatRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<MatRM>;
using MapC = Eigen::Map<const MatRM>;

}  // namespace

namespace convdetail {

// Scatter the [Cin*kh*kw, H*W] column matrix back into [Cin,H,W].
void Col2Im(const double* col, int64_t cin, int64_t h, int64_t w, int64_t kh,
            int64_t kw, double* im) {
  const int64_t hh = kh / 2, hw = kw / 2;
  std::fill(im, im + cin * h * w, 0.0);
  int64_t row = 0;
  for (int64_t c = 0; c < cin; ++c)
    for (int64_t u = 0; u < kh; ++u)
      for (int64_t v = 0; v < kw; ++v, ++row) {
        const double* src = col + row * h * w;
        const int64_t j0 = std::max<int64_t>(0, hw - v);
        const int64_t j1 = std::min(w, w + hw - v);
        for (int64_t i = 0; i < h; ++i) {
          const int64_t si = i + u - hh;
          if (si < 0 || si >= h) continue;
          double* drow = im + (c * h + si) * w + v - hw;
          const double* srow = src + i * w;
          for (int64_t j = j0; j < j1; ++j) drow[j] += srow[j];
        }
      }
}

void Im2Col(const double* im, int64_t cin, int64_t h, int64_t w, int64_t kh,
            int64_t kw, double* col) {
  const int64_t hh = kh / 2, hw = kw / 2;
  int64_t row = 0;
  for (int64_t c = 0; c < cin; ++c)
    for (int64_t u = 0; u < kh; ++u)
      for (int64_t v = 0; v < kw; ++v, ++row) {
        double* dst = col + row * h * w;
        const int64_t j0 = std::max<int64_t>(0, hw - v);
        const int64_t j1 = std::min(w, w + hw - v);
        for (int64_t i = 0; i < h; ++i) {
          const int64_t si = i + u - hh;
          double* drow = dst + i * w;
          if (si < 0 || si >= h) {
            std::fill(drow, drow + w, 0.0);
            continue;
          }
          const double* srow = im + (c * h + si) * w + v - hw;
          std::fill(drow, drow + j0, 0.0);
          std::copy(srow + j0, srow + j1, drow + j0);
          std::fill(drow + j1, drow + w, 0.0);
        }
      }
}

}  // namespace convdetail

using convdetail::Col2Im;
using convdetail::Im2Col;

Var MatMul(Tape& t, Var a, Var b) {
  const Tensor& va = t.value(a);
  const Tensor& vb = t.value(b);
  if (va.ndim() != 2 || vb.ndim() != 2 || va.shape[1] != vb.shape[0])
    throw std::invalid_argument("MatMul: incompatible shapes " + ShapeToString(va.shape) +
                                " x " + ShapeToString(vb.shape));
  const int64_t m = va.shape[0], k = va.shape[1], n = vb.shape[1];
  Tensor y({m, n});
  MapM(y.data.data(), m, n) =
      MapC(va.data.data(), m, k) * MapC(vb.data.data(), k, n);
  bool rg = t.requires_grad(a) || t.requires_grad(b);
  return t.Push(std::move(y), rg, [a, b, m, k, n](Tape& tp, const Tensor& g) {
    MapC gm(g.data.data(), m, n);
    if (tp.requires_grad(a)) {
      Tensor ga({m, k});
      MapM(ga.data.data(), m, k) = gm * MapC(tp.value(b).data.data(), k, n).transpose();
      tp.Accumulate(a, ga);
    }
    if (tp.requires_grad(b)) {
      Tensor gb({k, n});
      MapM(gb.data.data(), k, n) = MapC(tp.value(a).data.data(), m, k).transpose() * gm;
      tp.Accumulate(b, gb);
    }
  });
}

Var Affine(Tape& t, Var w, Var x, Var b) {
  const Tensor& vw = t.value(w);
  const Tensor& vx = t.value(x);
  const Tensor& vb = t.value(b);
  if (vw.ndim() != 2 || vx.ndim() != 2 || vb.ndim() != 1 ||
      vw.shape[1] != vx.shape[0] || vb.shape[0] != vw.shape[0])
    throw std::invalid_argument("Affine: incompatible shapes " + ShapeToString(vw.shape) +
                                ", " + ShapeToString(vx.shape) + ", " +
                                ShapeToString(vb.shape));
  const int64_t o = vw.shape[0], i = vw.shape[1], n = vx.shape[1];
  Tensor y({o, n});
  MapM ym(y.data.data(), o, n);
  ym = MapC(vw.data.data(), o, i) * MapC(vx.data.data(), i, n);
  for (int64_t r = 0; r < o; ++r) ym.row(r).array() += vb.data[r];
  bool rg = t.requires_grad(w) || t.requires_grad(x) || t.requires_grad(b);
  return t.Push(std::move(y), rg, [w, x, b, o, i, n](Tape& tp, const Tensor& g) {
    MapC gm(g.data.data(), o, n);
    if (tp.requires_grad(w)) {
      Tensor gw({o, i});
      MapM(gw.data.data(), o, i) = gm * MapC(tp.value(x).data.data(), i, n).transpose();
      tp.Accumulate(w, gw);
    }
    if (tp.requires_grad(x)) {
      Tensor gx({i, n});
      MapM(gx.data.data(), i, n) = MapC(tp.value(w).data.data(), o, i).transpose() * gm;
      tp.Accumulate(x, gx);
    }
    if (tp.requires_grad(b)) {
      Tensor gb({o});
      for (int64_t r = 0; r < o; ++r) gb.data[r] = gm.row(r).sum();
      tp.Accumulate(b, gb);
    }
  });
}

Var Conv2D(Tape& t, Var input, Var weight, Var bias) {
  const Tensor& vi = t.value(input);
  const Tensor& vw = t.value(weight);
  const Tensor& vb = t.value(bias);
  if (vi.ndim() != 3 || vw.ndim() != 4 || vb.ndim() != 1 ||
      vw.shape[1] != vi.shape[0] || vb.shape[0] != vw.shape[0] ||
      vw.shape[2] % 2 == 0 || vw.shape[3] % 2 == 0)
    throw std::invalid_argument("Conv2D: incompatible shapes input " +
                                ShapeToString(vi.shape) + " weight " +
                                ShapeToString(vw.shape) + " bias " +
                                ShapeToString(vb.shape));
  const int64_t cin = vi.shape[0], h = vi.shape[1], w = vi.shape[2];
  const int64_t cout = vw.shape[0], kh = vw.shape[2], kw = vw.shape[3];
  const int64_t krows = cin * kh * kw, hw = h * w;
  // Uninitialized on purpose: Im2Col writes every entry. Kept alive for the
  // grad-weight GEMM so backward does not redo the gather.
  std::shared_ptr<double[]> col(new double[krows * hw]);
  Im2Col(vi.data.data(), cin, h, w, kh, kw, col.get());
  Tensor y({cout, h, w});
  MapM ym(y.data.data(), cout, hw);
  ym = MapC(vw.data.data(), cout, krows) * MapC(col.get(), krows, hw);
  for (int64_t c = 0; c < cout; ++c) ym.row(c).array() += vb.data[c];
  bool rg = t.requires_grad(input) || t.requires_grad(weight) || t.requires_grad(bias);
  return t.Push(std::move(y), rg,
                [input, weight, bias, col, cin, h, w, cout, kh, kw, krows,
                 hw](Tape& tp, const Tensor& g) {
                  MapC gm(g.data.data(), cout, hw);
                  if (tp.requires_grad(weight)) {
                    Tensor gw({cout, cin, kh, kw});
                    MapM(gw.data.data(), cout, krows) =
                        gm * MapC(col.get(), krows, hw).transpose();
                    tp.Accumulate(weight, gw);
                  }
                  if (tp.requires_grad(input)) {
                    std::unique_ptr<double[]> gcol(new double[krows * hw]);
                    MapM(gcol.get(), krows, hw) =
                        MapC(tp.value(weight).data.data(), cout, krows).transpose() * gm;
                    Tensor gi({cin, h, w});
                    Col2Im(gcol.get(), cin, h, w, kh, kw, gi.data.data());
                    tp.Accumulate(input, gi);
                  }
                  if (tp.requires_grad(bias)) {
                    Tensor gb({cout});
                    for (int64_t c = 0; c < cout; ++c) gb.data[c] = gm.row(c).sum();
                    tp.Accumulate(bias, gb);
                  }
                });
}

namespace {

using Cplx = std::complex<double>;

// Buffers are allocated uninitialized; every entry is written before use.
using CplxBuf = std::shared_ptr<Cplx[]>;

CplxBuf PaddedSpectrum(const double* x, int64_t h, int64_t w, int64_t ph,
                       int64_t pw) {
  std::unique_ptr<double[]> pad(new double[ph * pw]);
  for (int64_t i = 0; i < h; ++i) {
    double* row = pad.get() + i * pw;
    std::copy_n(x + i * w, w, row);
    std::fill(row + w, row + pw, 0.0);
  }
  std::fill(pad.get() + h * pw, pad.get() + ph * pw, 0.0);
  CplxBuf spec(new Cplx[ph * (pw / 2 + 1)]);
  fft::Rfft2(pad.get(), ph, pw, spec.get());
  return spec;
}

}  // namespace

Var Corr2D(Tape& t, Var input, Var kernel) {
  const Tensor& vi = t.value(input);
  const Tensor& vk = t.value(kernel);
  if (vi.ndim() != 2 || vk.ndim() != 2 || vk.shape[0] % 2 == 0 || vk.shape[1] % 2 == 0)
    throw std::invalid_argument("Corr2D: need 2-D input and odd 2-D kernel, got " +
                                ShapeToString(vi.shape) + " and " + ShapeToString(vk.shape));
  const int64_t h = vi.shape[0], w = vi.shape[1];
  const int64_t kh = vk.shape[0], kw = vk.shape[1];
  const int64_t hh = kh / 2, hwk = kw / 2;
  const int64_t ph = fft::NextFastSize(h + kh - 1);
  const int64_t pw = fft::NextFastSize(w + kw - 1);
  const int64_t pb = pw / 2 + 1;
  CplxBuf fin = PaddedSpectrum(vi.data.data(), h, w, ph, pw);
  CplxBuf fk = PaddedSpectrum(vk.data.data(), kh, kw, ph, pw);
  std::unique_ptr<Cplx[]> prod(new Cplx[ph * pb]);
  for (int64_t i = 0; i < ph * pb; ++i) {
    const double ar = fin[i].real(), ai = fin[i].imag();
    const double br = fk[i].real(), bi = fk[i].imag();
    prod[i] = Cplx(ar * br + ai * bi, ai * br - ar * bi);
  }
  std::unique_ptr<double[]> r(new double[ph * pw]);
  fft::Irfft2(prod.get(), ph, pw, r.get());
  Tensor y({h, w});
  const int64_t j0 = ((-hwk) % pw + pw) % pw;  // wrapped column of output j = 0
  const int64_t head = std::min(w, pw - j0);
  for (int64_t i = 0; i < h; ++i) {
    const int64_t si = ((i - hh) % ph + ph) % ph;
    const double* rrow = r.get() + si * pw;
    double* yrow = y.data.data() + i * w;
    std::copy(rrow + j0, rrow + j0 + head, yrow);
    std::copy(rrow, rrow + (w - head), yrow + head);
  }
  bool rg = t.requires_grad(input) || t.requires_grad(kernel);
  return t.Push(std::move(y), rg,
                [input, kernel, fin, fk, h, w, kh, kw, hh, hwk, ph, pw,
                 pb](Tape& tp, const Tensor& g) {
                  CplxBuf fg = PaddedSpectrum(g.data.data(), h, w, ph, pw);
                  if (tp.requires_grad(input)) {
                    // grad wrt input is the convolution of g with the kernel.
                    std::unique_ptr<Cplx[]> prod(new Cplx[ph * pb]);
                    for (int64_t i = 0; i < ph * pb; ++i) {
                      const double ar = fg[i].real(), ai = fg[i].imag();
                      const double br = fk[i].real(), bi = fk[i].imag();
                      prod[i] = Cplx(ar * br - ai * bi, ar * bi + ai * br);
                    }
                    std::unique_ptr<double[]> r(new double[ph * pw]);
                    fft::Irfft2(prod.get(), ph, pw, r.get());
                    Tensor gi({h, w});
                    const int64_t j0 = hwk % pw;
                    const int64_t head = std::min(w, pw - j0);
                    for (int64_t i = 0; i < h; ++i) {
                      const int64_t si = (i + hh) % ph;
                      const double* rrow = r.get() + si * pw;
                      double* grow = gi.data.data() + i * w;
                      std::copy(rrow + j0, rrow + j0 + head, grow);
                      std::copy(rrow, rrow + (w - head), grow + head);
                    }
                    tp.Accumulate(input, gi);
                  }
                  if (tp.requires_grad(kernel)) {
                    // grad wrt kernel is the correlation of input with g.
                    std::unique_ptr<Cplx[]> prod(new Cplx[ph * pb]);
                    for (int64_t i = 0; i < ph * pb; ++i) {
                      const double ar = fin[i].real(), ai = fin[i].imag();
                      const double br = fg[i].real(), bi = fg[i].imag();
                      prod[i] = Cplx(ar * br + ai * bi, ai * br - ar * bi);
                    }
                    std::unique_ptr<double[]> r(new double[ph * pw]);
                    fft::Irfft2(prod.get(), ph, pw, r.get());
                    Tensor gk({kh, kw});
                    const int64_t v0 = ((-hwk) % pw + pw) % pw;
                    const int64_t head = std::min(kw, pw - v0);
                    for (int64_t u = 0; u < kh; ++u) {
                      const int64_t su = ((u - hh) % ph + ph) % ph;
                      const double* rrow = r.get() + su * pw;
                      double* grow = gk.data.data() + u * kw;
                      std::copy(rrow + v0, rrow + v0 + head, grow);
                      std::copy(rrow, rrow + (kw - head), grow + head);
                    }
                    tp.Accumulate(kernel, gk);
                  }
                });
}

}  // namespace audflow
