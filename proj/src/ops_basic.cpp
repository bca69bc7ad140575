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
// Elementwise, scalar-broadcast, pointwise, reduction and shape primitives.

#include <Eigen/Dense>
#include <cmath>
#include <memory>

#include "audflow/ops.hpp"

namespace audflow {
namespace {

constexpr double kGeluC0 = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluC1 = 0.044715;

using ArrMap = Eigen::Map<Eigen::ArrayXd>;
using CArrMap = Eigen::Map<const Eigen::ArrayXd>;

// tanh via the vectorized exp kernel; exp(-2|u|) stays in (0, 1].
inline Eigen::ArrayXd TanhArr(const Eigen::ArrayXd& u) {
  Eigen::ArrayXd e = (-2.0 * u.abs()).exp();
  return (1.0 - e) / (1.0 + e) * u.sign();
}

void CheckScalar(const char* op, const Tensor& s) {
  if (s.size() != 1)
    throw std::invalid_argument(std::string(op) + ": expected 1-element scalar, got " +
                                ShapeToString(s.shape));
}

}  // namespace

Var Add(Tape& t, Var a, Var b) {
  const Tensor& va = t.value(a);
  const Tensor& vb = t.value(b);
  CheckSameShape("Add", va, vb);
  Tensor y(va.shape);
  for (int64_t i = 0; i < y.size(); ++i) y.data[i] = va.data[i] + vb.data[i];
  bool rg = t.requires_grad(a) || t.requires_grad(b);
  return t.Push(std::move(y), rg, [a, b](Tape& tp, const Tensor& g) {
    tp.Accumulate(a, g);
    tp.Accumulate(b, g);
  });
}

Var Sub(Tape& t, Var a, Var b) {
  const Tensor& va = t.value(a);
  const Tensor& vb = t.value(b);
  CheckSameShape("Sub", va, vb);
  Tensor y(va.shape);
  for (int64_t i = 0; i < y.size(); ++i) y.data[i] = va.data[i] - vb.data[i];
  bool rg = t.requires_grad(a) || t.requires_grad(b);
  return t.Push(std::move(y), rg, [a, b](Tape& tp, const Tensor& g) {
    tp.Accumulate(a, g);
    Tensor gb(g.shape);
    for (int64_t i = 0; i < g.size(); ++i) gb.data[i] = -g.data[i];
    tp.Accumulate(b, gb);
  });
}

Var Mul(Tape& t, Var a, Var b) {
  const Tensor& va = t.value(a);
  const Tensor& vb = t.value(b);
  CheckSameShape("Mul", va, vb);
  Tensor y(va.shape);
  for (int64_t i = 0; i < y.size(); ++i) y.data[i] = va.data[i] * vb.data[i];
  bool rg = t.requires_grad(a) || t.requires_grad(b);
  return t.Push(std::move(y), rg, [a, b](Tape& tp, const Tensor& g) {
    const Tensor& va = tp.value(a);
    const Tensor& vb = tp.value(b);
    if (tp.requires_grad(a)) {
      Tensor ga(g.shape);
      for (int64_t i = 0; i < g.size(); ++i) ga.data[i] = g.data[i] * vb.data[i];
      tp.Accumulate(a, ga);
    }
    if (tp.requires_grad(b)) {
      Tensor gb(g.shape);
      for (int64_t i = 0; i < g.size(); ++i) gb.data[i] = g.data[i] * va.data[i];
      tp.Accumulate(b, gb);
    }
  });
}

Var Div(Tape& t, Var a, Var b) {
  const Tensor& va = t.value(a);
  const Tensor& vb = t.value(b);
  CheckSameShape("Div", va, vb);
  Tensor y(va.shape);
  for (int64_t i = 0; i < y.size(); ++i) y.data[i] = va.data[i] / vb.data[i];
  bool rg = t.requires_grad(a) || t.requires_grad(b);
  return t.Push(std::move(y), rg, [a, b](Tape& tp, const Tensor& g) {
    const Tensor& va = tp.value(a);
    const Tensor& vb = tp.value(b);
    if (tp.requires_grad(a)) {
      Tensor ga(g.shape);
      for (int64_t i = 0; i < g.size(); ++i) ga.data[i] = g.data[i] / vb.data[i];
      tp.Accumulate(a, ga);
    }
    if (tp.requires_grad(b)) {
      Tensor gb(g.shape);
      for (int64_t i = 0; i < g.size(); ++i)
        gb.data[i] = -g.data[i] * va.data[i] / (vb.data[i] * vb.data[i]);
      tp.Accumulate(b, gb);
    }
  });
}

Var AddConst(Tape& t, Var x, double c) {
  const Tensor& vx = t.value(x);
  Tensor y(vx.shape);
  for (int64_t i = 0; i < y.size(); ++i) y.data[i] = vx.data[i] + c;
  return t.Push(std::move(y), t.requires_grad(x),
                [x](Tape& tp, const Tensor& g) { tp.Accumulate(x, g); });
}

Var MulConst(Tape& t, Var x, double c) {
  const Tensor& vx = t.value(x);
  Tensor y(vx.shape);
  for (int64_t i = 0; i < y.size(); ++i) y.data[i] = vx.data[i] * c;
  return t.Push(std::move(y), t.requires_grad(x), [x, c](Tape& tp, const Tensor& g) {
    Tensor gx(g.shape);
    for (int64_t i = 0; i < g.size(); ++i) gx.data[i] = g.data[i] * c;
    tp.Accumulate(x, gx);
  });
}

Var Neg(Tape& t, Var x) { return MulConst(t, x, -1.0); }

Var CMul(Tape& t, Var x, const Tensor& c) {
  const Tensor& vx = t.value(x);
  CheckSameShape("CMul", vx, c);
  Tensor y(vx.shape);
  for (int64_t i = 0; i < y.size(); ++i) y.data[i] = vx.data[i] * c.data[i];
  return t.Push(std::move(y), t.requires_grad(x), [x, c](Tape& tp, const Tensor& g) {
    Tensor gx(g.shape);
    for (int64_t i = 0; i < g.size(); ++i) gx.data[i] = g.data[i] * c.data[i];
    tp.Accumulate(x, gx);
  });
}

Var Scale(Tape& t, Var x, Var s) {
  const Tensor& vx = t.value(x);
  const Tensor& vs = t.value(s);
  CheckScalar("Scale", vs);
  const double sv = vs.data[0];
  Tensor y(vx.shape);
  for (int64_t i = 0; i < y.size(); ++i) y.data[i] = vx.data[i] * sv;
  bool rg = t.requires_grad(x) || t.requires_grad(s);
  return t.Push(std::move(y), rg, [x, s](Tape& tp, const Tensor& g) {
    const Tensor& vx = tp.value(x);
    const double sv = tp.value(s).data[0];
    if (tp.requires_grad(x)) {
      Tensor gx(g.shape);
      for (int64_t i = 0; i < g.size(); ++i) gx.data[i] = g.data[i] * sv;
      tp.Accumulate(x, gx);
    }
    if (tp.requires_grad(s)) {
      const double d = CArrMap(g.data.data(), g.size())
                           .matrix()
                           .dot(CArrMap(vx.data.data(), vx.size()).matrix());
      tp.Accumulate(s, Tensor(tp.value(s).shape, {d}));
    }
  });
}

Var AddScaled(Tape& t, Var x, Var s, double c) {
  const Tensor& vx = t.value(x);
  const Tensor& vs = t.value(s);
  CheckScalar("AddScaled", vs);
  const double sv = vs.data[0] * c;
  Tensor y(vx.shape);
  for (int64_t i = 0; i < y.size(); ++i) y.data[i] = vx.data[i] + sv;
  bool rg = t.requires_grad(x) || t.requires_grad(s);
  return t.Push(std::move(y), rg, [x, s, c](Tape& tp, const Tensor& g) {
    tp.Accumulate(x, g);
    if (tp.requires_grad(s)) {
      double d = 0.0;
      for (int64_t i = 0; i < g.size(); ++i) d += g.data[i];
      tp.Accumulate(s, Tensor(tp.value(s).shape, {d * c}));
    }
  });
}

Var PowConst(Tape& t, Var x, double p) {
  const Tensor& vx = t.value(x);
  Tensor y(vx.shape);
  for (int64_t i = 0; i < y.size(); ++i) y.data[i] = std::pow(vx.data[i], p);
  return t.Push(std::move(y), t.requires_grad(x), [x, p](Tape& tp, const Tensor& g) {
    const Tensor& vx = tp.value(x);
    Tensor gx(g.shape);
    for (int64_t i = 0; i < g.size(); ++i)
      gx.data[i] = g.data[i] * p * std::pow(vx.data[i], p - 1.0);
    tp.Accumulate(x, gx);
  });
}

namespace {

// Shared forward/backward for x^a with x >= 0 and per-row or global scalar
// exponent. Stores log(x) (0 where x == 0) so backward needs no further
// transcendentals beyond one multiply.
void PowForward(const double* x, int64_t n, double a, double* y, double* lx,
                const char* op) {
  CArrMap v(x, n);
  if (n > 0 && v.minCoeff() < 0.0)
    throw std::domain_error(std::string(op) + ": negative base with learnable exponent");
  ArrMap l(lx, n);
  ArrMap out(y, n);
  l = (v > 0.0).select(v.log(), 0.0);
  out = (v > 0.0).select((a * l).exp(), 0.0);
}

}  // namespace

Var PowScalarExp(Tape& t, Var x, Var a) {
  const Tensor& vx = t.value(x);
  const Tensor& va = t.value(a);
  CheckScalar("PowScalarExp", va);
  const double av = va.data[0];
  Tensor y(vx.shape);
  auto lx = std::make_shared<std::vector<double>>(vx.size());
  PowForward(vx.data.data(), vx.size(), av, y.data.data(), lx->data(), "PowScalarExp");
  auto yv = std::make_shared<Tensor>(y);
  bool rg = t.requires_grad(x) || t.requires_grad(a);
  return t.Push(std::move(y), rg, [x, a, lx, yv](Tape& tp, const Tensor& g) {
    const Tensor& vx = tp.value(x);
    const double av = tp.value(a).data[0];
    if (tp.requires_grad(x)) {
      Tensor gx(g.shape);
      for (int64_t i = 0; i < g.size(); ++i) {
        // d/dx x^a = a x^(a-1) = a y / x; subgradient 0 at x = 0.
        gx.data[i] = vx.data[i] > 0.0 ? g.data[i] * av * yv->data[i] / vx.data[i] : 0.0;
      }
      tp.Accumulate(x, gx);
    }
    if (tp.requires_grad(a)) {
      double d = 0.0;
      for (int64_t i = 0; i < g.size(); ++i)
        d += g.data[i] * yv->data[i] * (*lx)[i];  // x^a ln x, 0 at x = 0
      tp.Accumulate(a, Tensor(tp.value(a).shape, {d}));
    }
  });
}

Var PowChannels(Tape& t, Var x, Var a) {
  const Tensor& vx = t.value(x);
  const Tensor& va = t.value(a);
  if (vx.ndim() != 2 || va.ndim() != 1 || va.shape[0] != vx.shape[0])
    throw std::invalid_argument("PowChannels: need x [C,N] and a [C], got " +
                                ShapeToString(vx.shape) + " and " + ShapeToString(va.shape));
  const int64_t c = vx.shape[0], n = vx.shape[1];
  Tensor y(vx.shape);
  auto lx = std::make_shared<std::vector<double>>(vx.size());
  for (int64_t k = 0; k < c; ++k)
    PowForward(vx.data.data() + k * n, n, va.data[k], y.data.data() + k * n,
               lx->data() + k * n, "PowChannels");
  auto yv = std::make_shared<Tensor>(y);
  bool rg = t.requires_grad(x) || t.requires_grad(a);
  return t.Push(std::move(y), rg, [x, a, lx, yv, c, n](Tape& tp, const Tensor& g) {
    const Tensor& vx = tp.value(x);
    const Tensor& va = tp.value(a);
    if (tp.requires_grad(x)) {
      Tensor gx(g.shape);
      for (int64_t k = 0; k < c; ++k) {
        const double av = va.data[k];
        CArrMap vk(vx.data.data() + k * n, n);
        CArrMap gk(g.data.data() + k * n, n);
        CArrMap yk(yv->data.data() + k * n, n);
        ArrMap(gx.data.data() + k * n, n) =
            (vk > 0.0).select(gk * av * yk / vk, 0.0);
      }
      tp.Accumulate(x, gx);
    }
    if (tp.requires_grad(a)) {
      Tensor ga(va.shape);
      for (int64_t k = 0; k < c; ++k)
        ga.data[k] = (CArrMap(g.data.data() + k * n, n) *
                      CArrMap(yv->data.data() + k * n, n) *
                      CArrMap(lx->data() + k * n, n))
                         .sum();
      tp.Accumulate(a, ga);
    }
  });
}

namespace {

template <typename F, typename DF>
Var Unary(Tape& t, Var x, F f, DF df) {
  const Tensor& vx = t.value(x);
  Tensor y(vx.shape);
  for (int64_t i = 0; i < y.size(); ++i) y.data[i] = f(vx.data[i]);
  return t.Push(std::move(y), t.requires_grad(x), [x, df](Tape& tp, const Tensor& g) {
    const Tensor& vx = tp.value(x);
    Tensor gx(g.shape);
    for (int64_t i = 0; i < g.size(); ++i) gx.data[i] = g.data[i] * df(vx.data[i]);
    tp.Accumulate(x, gx);
  });
}

}  // namespace

Var Exp(Tape& t, Var x) {
  const Tensor& vx = t.value(x);
  Tensor y(vx.shape);
  ArrMap(y.data.data(), y.size()) = CArrMap(vx.data.data(), vx.size()).exp();
  return t.Push(std::move(y), t.requires_grad(x), [x](Tape& tp, const Tensor& g) {
    const Tensor& vx = tp.value(x);
    Tensor gx(g.shape);
    ArrMap(gx.data.data(), gx.size()) =
        CArrMap(g.data.data(), g.size()) * CArrMap(vx.data.data(), vx.size()).exp();
    tp.Accumulate(x, gx);
  });
}

Var Log(Tape& t, Var x) {
  const Tensor& vx = t.value(x);
  Tensor y(vx.shape);
  ArrMap(y.data.data(), y.size()) = CArrMap(vx.data.data(), vx.size()).log();
  return t.Push(std::move(y), t.requires_grad(x), [x](Tape& tp, const Tensor& g) {
    const Tensor& vx = tp.value(x);
    Tensor gx(g.shape);
    ArrMap(gx.data.data(), gx.size()) =
        CArrMap(g.data.data(), g.size()) / CArrMap(vx.data.data(), vx.size());
    tp.Accumulate(x, gx);
  });
}

Var Relu(Tape& t, Var x) {
  const Tensor& vx = t.value(x);
  Tensor y(vx.shape);
  ArrMap(y.data.data(), y.size()) = CArrMap(vx.data.data(), vx.size()).max(0.0);
  return t.Push(std::move(y), t.requires_grad(x), [x](Tape& tp, const Tensor& g) {
    const Tensor& vx = tp.value(x);
    Tensor gx(g.shape);
    ArrMap(gx.data.data(), gx.size()) =
        (CArrMap(vx.data.data(), vx.size()) > 0.0)
            .select(CArrMap(g.data.data(), g.size()), 0.0);
    tp.Accumulate(x, gx);
  });
}

Var Gelu(Tape& t, Var x) {
  const Tensor& vx = t.value(x);
  const int64_t n = vx.size();
  CArrMap v(vx.data.data(), n);
  auto th = std::make_shared<Eigen::ArrayXd>(
      TanhArr(kGeluC0 * (v + kGeluC1 * v.cube())));
  Tensor y(vx.shape);
  ArrMap(y.data.data(), n) = 0.5 * v * (1.0 + *th);
  return t.Push(std::move(y), t.requires_grad(x), [x, th](Tape& tp, const Tensor& g) {
    const Tensor& vx = tp.value(x);
    const int64_t n = vx.size();
    CArrMap v(vx.data.data(), n);
    Eigen::ArrayXd du = kGeluC0 * (1.0 + 3.0 * kGeluC1 * v.square());
    Tensor gx(vx.shape);
    ArrMap(gx.data.data(), n) =
        CArrMap(g.data.data(), n) *
        (0.5 * (1.0 + *th) + 0.5 * v * (1.0 - th->square()) * du);
    tp.Accumulate(x, gx);
  });
}

Var Sigmoid(Tape& t, Var x) {
  const Tensor& vx = t.value(x);
  Tensor y(vx.shape);
  ArrMap(y.data.data(), y.size()) =
      1.0 / (1.0 + (-CArrMap(vx.data.data(), vx.size())).exp());
  return t.Push(std::move(y), t.requires_grad(x), [x](Tape& tp, const Tensor& g) {
    const Tensor& vx = tp.value(x);
    const int64_t n = vx.size();
    Eigen::ArrayXd s = 1.0 / (1.0 + (-CArrMap(vx.data.data(), n)).exp());
    Tensor gx(vx.shape);
    ArrMap(gx.data.data(), n) = CArrMap(g.data.data(), n) * s * (1.0 - s);
    tp.Accumulate(x, gx);
  });
}

Var Cos(Tape& t, Var x) {
  return Unary(t, x, [](double v) { return std::cos(v); },
               [](double v) { return -std::sin(v); });
}

Var SumAll(Tape& t, Var x) {
  const Tensor& vx = t.value(x);
  const double s = CArrMap(vx.data.data(), vx.size()).sum();
  return t.Push(Tensor::Scalar(s), t.requires_grad(x), [x](Tape& tp, const Tensor& g) {
    tp.Accumulate(x, Tensor::Full(tp.value(x).shape, g.data[0]));
  });
}

Var MeanAll(Tape& t, Var x) {
  const Tensor& vx = t.value(x);
  if (vx.size() == 0) throw std::invalid_argument("MeanAll: empty tensor");
  const double s = CArrMap(vx.data.data(), vx.size()).sum();
  const double inv = 1.0 / static_cast<double>(vx.size());
  return t.Push(Tensor::Scalar(s * inv), t.requires_grad(x),
                [x, inv](Tape& tp, const Tensor& g) {
                  tp.Accumulate(x, Tensor::Full(tp.value(x).shape, g.data[0] * inv));
                });
}

Var MeanAxis(Tape& t, Var x, int axis) {
  const Tensor& vx = t.value(x);
  if (axis < 0 || axis >= vx.ndim())
    throw std::invalid_argument("MeanAxis: bad axis for " + ShapeToString(vx.shape));
  int64_t outer = 1, inner = 1;
  const int64_t m = vx.shape[axis];
  for (int i = 0; i < axis; ++i) outer *= vx.shape[i];
  for (int i = axis + 1; i < vx.ndim(); ++i) inner *= vx.shape[i];
  Shape oshape;
  for (int i = 0; i < vx.ndim(); ++i)
    if (i != axis) oshape.push_back(vx.shape[i]);
  if (oshape.empty()) oshape.push_back(1);
  Tensor y(oshape);
  const double inv = 1.0 / static_cast<double>(m);
  for (int64_t o = 0; o < outer; ++o)
    for (int64_t j = 0; j < m; ++j)
      for (int64_t i = 0; i < inner; ++i)
        y.data[o * inner + i] += vx.data[(o * m + j) * inner + i] * inv;
  return t.Push(std::move(y), t.requires_grad(x),
                [x, outer, m, inner, inv](Tape& tp, const Tensor& g) {
                  Tensor gx(tp.value(x).shape);
                  for (int64_t o = 0; o < outer; ++o)
                    for (int64_t j = 0; j < m; ++j)
                      for (int64_t i = 0; i < inner; ++i)
                        gx.data[(o * m + j) * inner + i] = g.data[o * inner + i] * inv;
                  tp.Accumulate(x, gx);
                });
}

Var L1(Tape& t, Var a, Var b) {
  const Tensor& va = t.value(a);
  const Tensor& vb = t.value(b);
  CheckSameShape("L1", va, vb);
  const int64_t n = va.size();
  double s = 0.0;
  for (int64_t i = 0; i < n; ++i) s += std::abs(va.data[i] - vb.data[i]);
  const double inv = 1.0 / static_cast<double>(n);
  bool rg = t.requires_grad(a) || t.requires_grad(b);
  return t.Push(Tensor::Scalar(s * inv), rg, [a, b, inv](Tape& tp, const Tensor& g) {
    const Tensor& va = tp.value(a);
    const Tensor& vb = tp.value(b);
    const double c = g.data[0] * inv;
    Tensor ga(va.shape);
    for (int64_t i = 0; i < va.size(); ++i) {
      const double d = va.data[i] - vb.data[i];
      ga.data[i] = d > 0.0 ? c : (d < 0.0 ? -c : 0.0);
    }
    if (tp.requires_grad(b)) {
      Tensor gb(va.shape);
      for (int64_t i = 0; i < va.size(); ++i) gb.data[i] = -ga.data[i];
      tp.Accumulate(b, gb);
    }
    tp.Accumulate(a, ga);
  });
}

Var Reshape(Tape& t, Var x, Shape s) {
  const Tensor& vx = t.value(x);
  if (ShapeSize(s) != vx.size())
    throw std::invalid_argument("Reshape: size mismatch " + ShapeToString(vx.shape) +
                                " -> " + ShapeToString(s));
  Tensor y(s, vx.data);
  return t.Push(std::move(y), t.requires_grad(x), [x](Tape& tp, const Tensor& g) {
    tp.Accumulate(x, Tensor(tp.value(x).shape, g.data));
  });
}

Var Transpose2D(Tape& t, Var x) {
  const Tensor& vx = t.value(x);
  if (vx.ndim() != 2) throw std::invalid_argument("Transpose2D: need 2-D tensor");
  const int64_t r = vx.shape[0], c = vx.shape[1];
  Tensor y({c, r});
  for (int64_t i = 0; i < r; ++i)
    for (int64_t j = 0; j < c; ++j) y.data[j * r + i] = vx.data[i * c + j];
  return t.Push(std::move(y), t.requires_grad(x), [x, r, c](Tape& tp, const Tensor& g) {
    Tensor gx({r, c});
    for (int64_t i = 0; i < r; ++i)
      for (int64_t j = 0; j < c; ++j) gx.data[i * c + j] = g.data[j * r + i];
    tp.Accumulate(x, gx);
  });
}

Var SliceAxis(Tape& t, Var x, int axis, int64_t start, int64_t len) {
  const Tensor& vx = t.value(x);
  if (axis < 0 || axis >= vx.ndim() || start < 0 || len < 0 ||
      start + len > vx.shape[axis])
    throw std::invalid_argument("SliceAxis: out of range for " + ShapeToString(vx.shape));
  int64_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= vx.shape[i];
  for (int i = axis + 1; i < vx.ndim(); ++i) inner *= vx.shape[i];
  const int64_t m = vx.shape[axis];
  Shape oshape = vx.shape;
  oshape[axis] = len;
  Tensor y(oshape);
  for (int64_t o = 0; o < outer; ++o)
    for (int64_t j = 0; j < len; ++j)
      std::copy_n(vx.data.data() + (o * m + start + j) * inner, inner,
                  y.data.data() + (o * len + j) * inner);
  return t.Push(std::move(y), t.requires_grad(x),
                [x, outer, m, inner, start, len](Tape& tp, const Tensor& g) {
                  Tensor gx(tp.value(x).shape);
                  for (int64_t o = 0; o < outer; ++o)
                    for (int64_t j = 0; j < len; ++j)
                      std::copy_n(g.data.data() + (o * len + j) * inner, inner,
                                  gx.data.data() + (o * m + start + j) * inner);
                  tp.Accumulate(x, gx);
                });
}

Var Concat(Tape& t, const std::vector<Var>& xs, int axis) {
  if (xs.empty()) throw std::invalid_argument("Concat: no inputs");
  const Tensor& first = t.value(xs[0]);
  if (axis < 0 || axis >= first.ndim()) throw std::invalid_argument("Concat: bad axis");
  Shape oshape = first.shape;
  int64_t total = 0;
  for (Var v : xs) {
    const Tensor& tv = t.value(v);
    if (tv.ndim() != first.ndim())
      throw std::invalid_argument("Concat: rank mismatch");
    for (int i = 0; i < first.ndim(); ++i)
      if (i != axis && tv.shape[i] != first.shape[i])
        throw std::invalid_argument("Concat: shape mismatch " + ShapeToString(tv.shape) +
                                    " vs " + ShapeToString(first.shape));
    total += tv.shape[axis];
  }
  oshape[axis] = total;
  int64_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= first.shape[i];
  for (int i = axis + 1; i < first.ndim(); ++i) inner *= first.shape[i];
  Tensor y(oshape);
  bool rg = false;
  std::vector<int64_t> extents;
  int64_t off = 0;
  for (Var v : xs) {
    const Tensor& tv = t.value(v);
    const int64_t m = tv.shape[axis];
    extents.push_back(m);
    for (int64_t o = 0; o < outer; ++o)
      std::copy_n(tv.data.data() + o * m * inner, m * inner,
                  y.data.data() + (o * total + off) * inner);
    off += m;
    rg = rg || t.requires_grad(v);
  }
  auto inputs = std::make_shared<std::vector<Var>>(xs);
  auto ext = std::make_shared<std::vector<int64_t>>(std::move(extents));
  return t.Push(std::move(y), rg,
                [inputs, ext, outer, inner, total](Tape& tp, const Tensor& g) {
                  int64_t off = 0;
                  for (size_t i = 0; i < inputs->size(); ++i) {
                    const int64_t m = (*ext)[i];
                    if (tp.requires_grad((*inputs)[i])) {
                      Tensor gx(tp.value((*inputs)[i]).shape);
                      for (int64_t o = 0; o < outer; ++o)
                        std::copy_n(g.data.data() + (o * total + off) * inner, m * inner,
                                    gx.data.data() + o * m * inner);
                      tp.Accumulate((*inputs)[i], gx);
                    }
                    off += m;
                  }
                });
}

Var DecimateCols(Tape& t, Var x, int64_t stride) {
  const Tensor& vx = t.value(x);
  if (stride < 1) throw std::invalid_argument("DecimateCols: stride must be >= 1");
  const int64_t n = vx.shape.back();
  const int64_t m = (n + stride - 1) / stride;  // ceil(n/stride)
  int64_t rows = vx.size() / n;
  Shape oshape = vx.shape;
  oshape.back() = m;
  Tensor y(oshape);
  for (int64_t r = 0; r < rows; ++r)
    for (int64_t j = 0; j < m; ++j) y.data[r * m + j] = vx.data[r * n + j * stride];
  return t.Push(std::move(y), t.requires_grad(x),
                [x, stride, n, m, rows](Tape& tp, const Tensor& g) {
                  Tensor gx(tp.value(x).shape);
                  for (int64_t r = 0; r < rows; ++r)
                    for (int64_t j = 0; j < m; ++j)
                      gx.data[r * n + j * stride] = g.data[r * m + j];
                  tp.Accumulate(x, gx);
                });
}

Var RowShiftDown(Tape& t, Var x) {
  const Tensor& vx = t.value(x);
  if (vx.ndim() != 2) throw std::invalid_argument("RowShiftDown: need 2-D tensor");
  const int64_t c = vx.shape[0], n = vx.shape[1];
  Tensor y(vx.shape);
  for (int64_t k = 1; k < c; ++k)
    std::copy_n(vx.data.data() + (k - 1) * n, n, y.data.data() + k * n);
  return t.Push(std::move(y), t.requires_grad(x), [x, c, n](Tape& tp, const Tensor& g) {
    Tensor gx(tp.value(x).shape);
    for (int64_t k = 1; k < c; ++k)
      std::copy_n(g.data.data() + k * n, n, gx.data.data() + (k - 1) * n);
    tp.Accumulate(x, gx);
  });
}

Var OuterAdd(Tape& t, Var u, Var v) {
  const Tensor& vu = t.value(u);
  const Tensor& vv = t.value(v);
  if (vu.ndim() != 1 || vv.ndim() != 1)
    throw std::invalid_argument("OuterAdd: need two 1-D tensors");
  const int64_t m = vu.shape[0], n = vv.shape[0];
  Tensor y({m, n});
  for (int64_t i = 0; i < m; ++i)
    for (int64_t j = 0; j < n; ++j) y.data[i * n + j] = vu.data[i] + vv.data[j];
  bool rg = t.requires_grad(u) || t.requires_grad(v);
  return t.Push(std::move(y), rg, [u, v, m, n](Tape& tp, const Tensor& g) {
    if (tp.requires_grad(u)) {
      Tensor gu({m});
      for (int64_t i = 0; i < m; ++i)
        for (int64_t j = 0; j < n; ++j) gu.data[i] += g.data[i * n + j];
      tp.Accumulate(u, gu);
    }
    if (tp.requires_grad(v)) {
      Tensor gv({n});
      for (int64_t i = 0; i < m; ++i)
        for (int64_t j = 0; j < n; ++j) gv.data[j] += g.data[i * n + j];
      tp.Accumulate(v, gv);
    }
  });
}

Var CrossEntropy(Tape& t, Var logits, const std::vector<int>& labels) {
  const Tensor& vl = t.value(logits);
  if (vl.ndim() != 2) throw std::invalid_argument("CrossEntropy: logits must be [T,C]");
  const int64_t rows = vl.shape[0], c = vl.shape[1];
  if (static_cast<int64_t>(labels.size()) != rows)
    throw std::invalid_argument("CrossEntropy: label count != frame count");
  int64_t labeled = 0;
  for (int l : labels) {
    if (l >= 0 && l >= c) throw std::invalid_argument("CrossEntropy: label out of range");
    if (l >= 0) ++labeled;
  }
  if (labeled == 0) throw std::invalid_argument("CrossEntropy: all frames unlabeled");
  // Softmax probabilities are the whole backward rule; save them.
  auto probs = std::make_shared<std::vector<double>>(vl.size());
  double loss = 0.0;
  for (int64_t r = 0; r < rows; ++r) {
    const double* row = vl.data.data() + r * c;
    double mx = row[0];
    for (int64_t j = 1; j < c; ++j) mx = std::max(mx, row[j]);
    double z = 0.0;
    for (int64_t j = 0; j < c; ++j) z += std::exp(row[j] - mx);
    const double logz = std::log(z) + mx;
    for (int64_t j = 0; j < c; ++j) (*probs)[r * c + j] = std::exp(row[j] - logz);
    if (labels[r] >= 0) loss += logz - row[labels[r]];
  }
  loss /= static_cast<double>(labeled);
  auto lab = std::make_shared<std::vector<int>>(labels);
  return t.Push(Tensor::Scalar(loss), t.requires_grad(logits),
                [logits, probs, lab, rows, c, labeled](Tape& tp, const Tensor& g) {
                  const double s = g.data[0] / static_cast<double>(labeled);
                  Tensor gx(tp.value(logits).shape);
                  for (int64_t r = 0; r < rows; ++r) {
                    if ((*lab)[r] < 0) continue;
                    for (int64_t j = 0; j < c; ++j)
                      gx.data[r * c + j] = s * (*probs)[r * c + j];
                    gx.data[r * c + (*lab)[r]] -= s;
                  }
                  tp.Accumulate(logits, gx);
                });
}

}  // namespace audflow
