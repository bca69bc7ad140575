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

#include "doctest.h"
#include "test_util.hpp"

namespace audflow {
namespace {

using testutil::MaxGradError;
using testutil::RandomTensor;

constexpr double kGradTol = 2e-6;

TEST_CASE("tape: gradient accumulates over fan-out") {
  Tape t;
  Var x = t.Leaf(Tensor::Scalar(3.0), true);
  Var y = Add(t, x, x);  // dy/dx = 2
  t.Backward(SumAll(t, y));
  CHECK(t.grad(x).data[0] == doctest::Approx(2.0));
}

TEST_CASE("tape: backward requires a scalar") {
  Tape t;
  Var x = t.Leaf(Tensor::Zeros({3}), true);
  CHECK_THROWS_AS(t.Backward(x), std::invalid_argument);
}

TEST_CASE("tape: grad unavailable for non-grad leaves") {
  Tape t;
  Var x = t.Leaf(Tensor::Scalar(1.0), false);
  Var y = t.Leaf(Tensor::Scalar(2.0), true);
  t.Backward(Mul(t, x, y));
  CHECK_THROWS(t.grad(x));
  CHECK(t.grad(y).data[0] == doctest::Approx(1.0));
}

TEST_CASE("elementwise arithmetic gradients") {
  Rng rng(1);
  Tensor a = RandomTensor({3, 4}, rng, 0.5, 2.0);
  Tensor b = RandomTensor({3, 4}, rng, 0.5, 2.0);
  auto check = [&](auto op) {
    return MaxGradError(
        [&](Tape& t, const std::vector<Var>& v) {
          return SumAll(t, Mul(t, op(t, v[0], v[1]), op(t, v[0], v[1])));
        },
        {a, b});
  };
  CHECK(check([](Tape& t, Var x, Var y) { return Add(t, x, y); }) < kGradTol);
  CHECK(check([](Tape& t, Var x, Var y) { return Sub(t, x, y); }) < kGradTol);
  CHECK(check([](Tape& t, Var x, Var y) { return Mul(t, x, y); }) < kGradTol);
  CHECK(check([](Tape& t, Var x, Var y) { return Div(t, x, y); }) < kGradTol);
}

TEST_CASE("shape mismatch raises with op name") {
  Tape t;
  Var a = t.Leaf(Tensor::Zeros({2, 3}), false);
  Var b = t.Leaf(Tensor::Zeros({3, 2}), false);
  CHECK_THROWS_WITH_AS(Add(t, a, b),
                       doctest::Contains("Add"), std::invalid_argument);
}

TEST_CASE("broadcast and scalar ops gradients") {
  Rng rng(2);
  Tensor x = RandomTensor({5}, rng);
  Tensor s = RandomTensor({1}, rng, 0.5, 1.5);
  Tensor c = RandomTensor({5}, rng);
  CHECK(MaxGradError(
            [&](Tape& t, const std::vector<Var>& v) {
              Var y = AddConst(t, MulConst(t, v[0], 2.5), -0.3);
              return SumAll(t, Mul(t, y, y));
            },
            {x}) < kGradTol);
  CHECK(MaxGradError(
            [&](Tape& t, const std::vector<Var>& v) {
              Var y = Neg(t, CMul(t, v[0], c));
              return SumAll(t, Mul(t, y, y));
            },
            {x}) < kGradTol);
  CHECK(MaxGradError(
            [&](Tape& t, const std::vector<Var>& v) {
              Var y = Scale(t, v[0], v[1]);
              return SumAll(t, Mul(t, y, y));
            },
            {x, s}) < kGradTol);
  CHECK(MaxGradError(
            [&](Tape& t, const std::vector<Var>& v) {
              Var y = AddScaled(t, v[0], v[1], -0.25);
              return SumAll(t, Mul(t, y, y));
            },
            {x, s}) < kGradTol);
}

TEST_CASE("power ops: values and gradients") {
  Rng rng(3);
  Tensor x = RandomTensor({4, 6}, rng, 0.2, 3.0);
  Tensor a = RandomTensor({1}, rng, 0.3, 1.5);
  Tensor ach = RandomTensor({4}, rng, 0.3, 1.5);

  SUBCASE("PowConst value") {
    Tape t;
    const Tensor& y = t.value(PowConst(t, t.Leaf(x, false), 0.3));
    for (size_t i = 0; i < x.data.size(); ++i)
      CHECK(y.data[i] == doctest::Approx(std::pow(x.data[i], 0.3)));
  }
  SUBCASE("gradients") {
    CHECK(MaxGradError(
              [&](Tape& t, const std::vector<Var>& v) {
                return SumAll(t, PowConst(t, v[0], 1.7));
              },
              {x}) < kGradTol);
    CHECK(MaxGradError(
              [&](Tape& t, const std::vector<Var>& v) {
                return SumAll(t, PowScalarExp(t, v[0], v[1]));
              },
              {x, a}) < kGradTol);
    CHECK(MaxGradError(
              [&](Tape& t, const std::vector<Var>& v) {
                return SumAll(t, PowChannels(t, v[0], v[1]));
              },
              {x, ach}) < kGradTol);
  }
  SUBCASE("x = 0 gives zero partials, not NaN") {
    Tensor x0 = x;
    x0.data[0] = 0.0;
    Tape t;
    Var xv = t.Leaf(x0, true);
    Var av = t.Leaf(ach, true);
    t.Backward(SumAll(t, PowChannels(t, xv, av)));
    CHECK(t.grad(xv).data[0] == 0.0);
    CHECK(std::isfinite(t.grad(av).data[0]));
  }
  SUBCASE("negative base rejected") {
    Tensor xn = x;
    xn.data[1] = -0.5;
    Tape t;
    CHECK_THROWS_AS(PowChannels(t, t.Leaf(xn, false), t.Leaf(ach, false)),
                    std::domain_error);
  }
}

TEST_CASE("pointwise nonlinearities") {
  Rng rng(4);
  Tensor x = RandomTensor({7}, rng, -2.0, 2.0);
  Tensor xpos = RandomTensor({7}, rng, 0.1, 3.0);
  auto scalar_sum = [](Tape& t, Var y) { return SumAll(t, Mul(t, y, y)); };
  CHECK(MaxGradError(
            [&](Tape& t, const std::vector<Var>& v) {
              return scalar_sum(t, Exp(t, v[0]));
            },
            {x}) < kGradTol);
  CHECK(MaxGradError(
            [&](Tape& t, const std::vector<Var>& v) {
              return scalar_sum(t, Log(t, v[0]));
            },
            {xpos}) < kGradTol);
  CHECK(MaxGradError(
            [&](Tape& t, const std::vector<Var>& v) {
              return scalar_sum(t, Gelu(t, v[0]));
            },
            {x}) < kGradTol);
  CHECK(MaxGradError(
            [&](Tape& t, const std::vector<Var>& v) {
              return scalar_sum(t, Sigmoid(t, v[0]));
            },
            {x}) < kGradTol);
  CHECK(MaxGradError(
            [&](Tape& t, const std::vector<Var>& v) {
              return scalar_sum(t, Cos(t, v[0]));
            },
            {x}) < kGradTol);

  SUBCASE("relu value and subgradient") {
    Tape t;
    Var xv = t.Leaf(Tensor({3}, {-1.0, 0.0, 2.0}), true);
    Var y = Relu(t, xv);
    CHECK(t.value(y).data == std::vector<double>{0.0, 0.0, 2.0});
    t.Backward(SumAll(t, y));
    CHECK(t.grad(xv).data == std::vector<double>{0.0, 0.0, 1.0});
  }
  SUBCASE("gelu matches the tanh approximation at 1") {
    Tape t;
    const double y = t.value(Gelu(t, t.Leaf(Tensor::Scalar(1.0), false))).data[0];
    // 0.5 * (1 + tanh(sqrt(2/pi) * (1 + 0.044715)))
    CHECK(y == doctest::Approx(0.8411919906082768).epsilon(1e-12));
  }
  SUBCASE("sigmoid midpoint") {
    Tape t;
    CHECK(t.value(Sigmoid(t, t.Leaf(Tensor::Scalar(0.0), false))).data[0] ==
          doctest::Approx(0.5));
  }
}

TEST_CASE("reductions") {
  Rng rng(5);
  Tensor x = RandomTensor({3, 5}, rng);
  Tensor y = RandomTensor({3, 5}, rng);
  SUBCASE("values") {
    Tape t;
    double s = 0.0;
    for (double v : x.data) s += v;
    CHECK(t.value(SumAll(t, t.Leaf(x, false))).data[0] == doctest::Approx(s));
    CHECK(t.value(MeanAll(t, t.Leaf(x, false))).data[0] == doctest::Approx(s / 15.0));
    double l1 = 0.0;
    for (size_t i = 0; i < x.data.size(); ++i) l1 += std::abs(x.data[i] - y.data[i]);
    CHECK(t.value(L1(t, t.Leaf(x, false), t.Leaf(y, false))).data[0] ==
          doctest::Approx(l1 / 15.0));
  }
  SUBCASE("MeanAxis value and grad") {
    Tape t;
    Tensor z = RandomTensor({2, 3, 4}, rng);
    const Tensor& m = t.value(MeanAxis(t, t.Leaf(z, false), 1));
    REQUIRE(m.shape == Shape{2, 4});
    CHECK(m.data[0] ==
          doctest::Approx((z.data[0] + z.data[4] + z.data[8]) / 3.0));
    CHECK(MaxGradError(
              [&](Tape& tp, const std::vector<Var>& v) {
                Var mm = MeanAxis(tp, v[0], 1);
                return SumAll(tp, Mul(tp, mm, mm));
              },
              {z}) < kGradTol);
  }
  SUBCASE("L1 gradient away from ties") {
    CHECK(MaxGradError(
              [&](Tape& t, const std::vector<Var>& v) { return L1(t, v[0], v[1]); },
              {x, y}) < kGradTol);
  }
}

TEST_CASE("shape ops round-trip gradients") {
  Rng rng(6);
  Tensor x = RandomTensor({3, 4}, rng);
  CHECK(MaxGradError(
            [&](Tape& t, const std::vector<Var>& v) {
              Var y = Reshape(t, v[0], {4, 3});
              return SumAll(t, Mul(t, y, y));
            },
            {x}) < kGradTol);
  CHECK(MaxGradError(
            [&](Tape& t, const std::vector<Var>& v) {
              Var y = Transpose2D(t, v[0]);
              return SumAll(t, Mul(t, y, y));
            },
            {x}) < kGradTol);
  CHECK(MaxGradError(
            [&](Tape& t, const std::vector<Var>& v) {
              Var y = SliceAxis(t, v[0], 1, 1, 2);
              return SumAll(t, Mul(t, y, y));
            },
            {x}) < kGradTol);
  CHECK(MaxGradError(
            [&](Tape& t, const std::vector<Var>& v) {
              Var y = Concat(t, {v[0], v[1]}, 0);
              return SumAll(t, Mul(t, y, y));
            },
            {x, RandomTensor({2, 4}, rng)}) < kGradTol);
  CHECK(MaxGradError(
            [&](Tape& t, const std::vector<Var>& v) {
              Var y = DecimateCols(t, v[0], 2);
              return SumAll(t, Mul(t, y, y));
            },
            {x}) < kGradTol);
  CHECK(MaxGradError(
            [&](Tape& t, const std::vector<Var>& v) {
              Var y = RowShiftDown(t, v[0]);
              return SumAll(t, Mul(t, y, y));
            },
            {x}) < kGradTol);

  SUBCASE("RowShiftDown semantics") {
    Tape t;
    Tensor z({2, 2}, {1.0, 2.0, 3.0, 4.0});
    const Tensor& y = t.value(RowShiftDown(t, t.Leaf(z, false)));
    CHECK(y.data == std::vector<double>{0.0, 0.0, 1.0, 2.0});
  }
  SUBCASE("DecimateCols semantics") {
    Tape t;
    Tensor z({1, 6}, {0.0, 1.0, 2.0, 3.0, 4.0, 5.0});
    const Tensor& y = t.value(DecimateCols(t, t.Leaf(z, false), 3));
    CHECK(y.data == std::vector<double>{0.0, 3.0});
  }
  SUBCASE("OuterAdd value and grad") {
    Tensor u = RandomTensor({3}, rng);
    Tensor v = RandomTensor({4}, rng);
    Tape t;
    const Tensor& y = t.value(OuterAdd(t, t.Leaf(u, false), t.Leaf(v, false)));
    CHECK(y.shape == Shape{3, 4});
    CHECK(y.data[1 * 4 + 2] == doctest::Approx(u.data[1] + v.data[2]));
    CHECK(MaxGradError(
              [&](Tape& tp, const std::vector<Var>& vars) {
                Var o = OuterAdd(tp, vars[0], vars[1]);
                return SumAll(tp, Mul(tp, o, o));
              },
              {u, v}) < kGradTol);
  }
}

TEST_CASE("dense linear maps") {
  Rng rng(7);
  Tensor a = RandomTensor({3, 4}, rng);
  Tensor b = RandomTensor({4, 2}, rng);
  SUBCASE("MatMul value against hand loop") {
    Tape t;
    const Tensor& y = t.value(MatMul(t, t.Leaf(a, false), t.Leaf(b, false)));
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 2; ++j) {
        double s = 0.0;
        for (int k = 0; k < 4; ++k) s += a.data[i * 4 + k] * b.data[k * 2 + j];
        CHECK(y.data[i * 2 + j] == doctest::Approx(s));
      }
  }
  SUBCASE("gradients") {
    CHECK(MaxGradError(
              [&](Tape& t, const std::vector<Var>& v) {
                Var y = MatMul(t, v[0], v[1]);
                return SumAll(t, Mul(t, y, y));
              },
              {a, b}) < kGradTol);
    CHECK(MaxGradError(
              [&](Tape& t, const std::vector<Var>& v) {
                Var y = Affine(t, v[0], v[1], v[2]);
                return SumAll(t, Mul(t, y, y));
              },
              {RandomTensor({2, 3}, rng), RandomTensor({3, 5}, rng),
               RandomTensor({2}, rng)}) < kGradTol);
  }
}

// Direct O(n^4) same-padded cross-correlation, the oracle for both conv ops.
Tensor NaiveConv(const Tensor& in, const Tensor& w, const Tensor& b) {
  const int64_t cin = in.shape[0], h = in.shape[1], wd = in.shape[2];
  const int64_t cout = w.shape[0], kh = w.shape[2], kw = w.shape[3];
  Tensor y({cout, h, wd});
  for (int64_t o = 0; o < cout; ++o)
    for (int64_t i = 0; i < h; ++i)
      for (int64_t j = 0; j < wd; ++j) {
        double s = b.data[o];
        for (int64_t c = 0; c < cin; ++c)
          for (int64_t u = 0; u < kh; ++u)
            for (int64_t v = 0; v < kw; ++v) {
              const int64_t si = i + u - kh / 2, sj = j + v - kw / 2;
              if (si < 0 || si >= h || sj < 0 || sj >= wd) continue;
              s += in.data[(c * h + si) * wd + sj] *
                   w.data[((o * cin + c) * kh + u) * kw + v];
            }
        y.data[(o * h + i) * wd + j] = s;
      }
  return y;
}

TEST_CASE("Conv2D matches the naive oracle and differentiates") {
  Rng rng(8);
  Tensor in = RandomTensor({3, 6, 5}, rng);
  Tensor w = RandomTensor({4, 3, 3, 3}, rng);
  Tensor b = RandomTensor({4}, rng);
  SUBCASE("value") {
    Tape t;
    const Tensor& y = t.value(
        Conv2D(t, t.Leaf(in, false), t.Leaf(w, false), t.Leaf(b, false)));
    const Tensor ref = NaiveConv(in, w, b);
    REQUIRE(y.shape == ref.shape);
    for (size_t i = 0; i < y.data.size(); ++i)
      CHECK(y.data[i] == doctest::Approx(ref.data[i]).epsilon(1e-10));
  }
  SUBCASE("gradients") {
    CHECK(MaxGradError(
              [&](Tape& t, const std::vector<Var>& v) {
                Var y = Conv2D(t, v[0], v[1], v[2]);
                return SumAll(t, Mul(t, y, y));
              },
              {in, w, b}) < kGradTol);
  }
}

TEST_CASE("Corr2D matches a direct correlation and differentiates") {
  Rng rng(9);
  Tensor in = RandomTensor({8, 7}, rng);
  Tensor k = RandomTensor({5, 3}, rng);
  SUBCASE("value") {
    Tape t;
    const Tensor& y = t.value(Corr2D(t, t.Leaf(in, false), t.Leaf(k, false)));
    for (int64_t i = 0; i < 8; ++i)
      for (int64_t j = 0; j < 7; ++j) {
        double s = 0.0;
        for (int64_t u = 0; u < 5; ++u)
          for (int64_t v = 0; v < 3; ++v) {
            const int64_t si = i + u - 2, sj = j + v - 1;
            if (si < 0 || si >= 8 || sj < 0 || sj >= 7) continue;
            s += in.data[si * 7 + sj] * k.data[u * 3 + v];
          }
        CHECK(y.data[i * 7 + j] == doctest::Approx(s).epsilon(1e-10));
      }
  }
  SUBCASE("gradients") {
    CHECK(MaxGradError(
              [&](Tape& t, const std::vector<Var>& v) {
                Var y = Corr2D(t, v[0], v[1]);
                return SumAll(t, Mul(t, y, y));
              },
              {in, k}) < kGradTol);
  }
  SUBCASE("even kernel rejected") {
    Tape t;
    CHECK_THROWS_AS(
        Corr2D(t, t.Leaf(in, false), t.Leaf(Tensor::Zeros({4, 3}), false)),
        std::invalid_argument);
  }
}

TEST_CASE("CrossEntropy: uniform logits over 4 classes give ln 4") {
  Tape t;
  Var logits = t.Leaf(Tensor::Zeros({3, 4}), true);
  Var loss = CrossEntropy(t, logits, {0, 2, 3});
  CHECK(t.value(loss).data[0] == doctest::Approx(std::log(4.0)).epsilon(1e-12));
  t.Backward(loss);
  // d/dlogit = (softmax - onehot) / n_labeled.
  const Tensor& g = t.grad(logits);
  CHECK(g.data[0] == doctest::Approx((0.25 - 1.0) / 3.0));
  CHECK(g.data[1] == doctest::Approx(0.25 / 3.0));
}

TEST_CASE("CrossEntropy: ignored labels and gradient") {
  Rng rng(10);
  Tensor logits = RandomTensor({5, 3}, rng);
  SUBCASE("label -1 contributes nothing") {
    Tape t;
    Var l1 = CrossEntropy(t, t.Leaf(logits, false), {0, 1, -1, 2, -1});
    Tensor sub({3, 3});
    std::copy_n(logits.data.begin(), 3, sub.data.begin());
    std::copy_n(logits.data.begin() + 3, 3, sub.data.begin() + 3);
    std::copy_n(logits.data.begin() + 9, 3, sub.data.begin() + 6);
    Var l2 = CrossEntropy(t, t.Leaf(sub, false), {0, 1, 2});
    CHECK(t.value(l1).data[0] == doctest::Approx(t.value(l2).data[0]).epsilon(1e-12));
  }
  SUBCASE("gradient") {
    CHECK(MaxGradError(
              [&](Tape& t, const std::vector<Var>& v) {
                return CrossEntropy(t, v[0], {0, 1, -1, 2, 1});
              },
              {logits}) < kGradTol);
  }
  SUBCASE("all labels ignored is an error") {
    Tape t;
    CHECK_THROWS(CrossEntropy(t, t.Leaf(logits, false), {-1, -1, -1, -1, -1}));
  }
}

}  // namespace
}  // namespace audflow
