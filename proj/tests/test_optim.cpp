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
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "audflow/adam.hpp"
#include "audflow/gradcheck.hpp"
#include "audflow/rng.hpp"
#include "doctest.h"

namespace audflow {
namespace {

// Reference Adam written independently of the production class: plain
// per-call recurrences with no state container, for cross-checking.
struct RefAdam {
  double m = 0.0, v = 0.0;
  int t = 0;
  double Update(double g, const AdamConfig& c) {
    ++t;
    m = c.beta1 * m + (1.0 - c.beta1) * g;
    v = c.beta2 * v + (1.0 - c.beta2) * g * g;
    const double mh = m / (1.0 - std::pow(c.beta1, t));
    const double vh = v / (1.0 - std::pow(c.beta2, t));
    return c.lr * mh / (std::sqrt(vh) + c.eps);
  }
};

TEST_CASE("adam minimizes (theta - 3)^2") {
  Adam opt(AdamConfig{});
  std::map<std::string, Tensor> params{{"theta", Tensor::Scalar(0.0)}};
  for (int i = 0; i < 8000; ++i) {
    const double th = params.at("theta").data[0];
    std::map<std::string, Tensor> grads{{"theta", Tensor::Scalar(2.0 * (th - 3.0))}};
    opt.Step(params, grads);
  }
  CHECK(std::abs(params.at("theta").data[0] - 3.0) < 1e-3);
  CHECK(opt.step_count() == 8000);
}

TEST_CASE("adam first step has magnitude lr against the gradient sign") {
  // After one step mhat = g and sqrt(vhat) = |g|, so the update is
  // lr * g / (|g| + eps): lr in magnitude up to the eps correction.
  AdamConfig cfg;
  Adam opt(cfg);
  std::map<std::string, Tensor> params{{"p", Tensor({2}, {5.0, -5.0})}};
  std::map<std::string, Tensor> grads{{"p", Tensor({2}, {17.3, -0.004})}};
  opt.Step(params, grads);
  CHECK(params.at("p").data[0] == doctest::Approx(5.0 - cfg.lr).epsilon(1e-5));
  CHECK(params.at("p").data[1] == doctest::Approx(-5.0 + cfg.lr).epsilon(1e-2));
}

TEST_CASE("adam matches an independent reference trajectory") {
  AdamConfig cfg;
  cfg.lr = 0.01;
  Adam opt(cfg);
  std::map<std::string, Tensor> params{{"w", Tensor({3}, {1.0, -2.0, 0.5})}};
  std::vector<RefAdam> ref(3);
  std::vector<double> ref_w = {1.0, -2.0, 0.5};
  Rng rng(42);
  for (int step = 0; step < 50; ++step) {
    Tensor g({3});
    for (int i = 0; i < 3; ++i) g.data[i] = rng.Uniform(-2.0, 2.0);
    std::map<std::string, Tensor> grads{{"w", g}};
    opt.Step(params, grads);
    for (int i = 0; i < 3; ++i) ref_w[i] -= ref[i].Update(g.data[i], cfg);
    for (int i = 0; i < 3; ++i)
      CHECK(params.at("w").data[i] == doctest::Approx(ref_w[i]).epsilon(1e-12));
  }
}

TEST_CASE("adam with zero gradients is the identity on parameters") {
  Adam opt;
  std::map<std::string, Tensor> params{{"a", Tensor({4}, {1.0, 2.0, 3.0, 4.0})},
                                       {"b", Tensor::Scalar(-7.0)}};
  const auto before = params;
  std::map<std::string, Tensor> grads{{"a", Tensor({4})}, {"b", Tensor::Scalar(0.0)}};
  for (int i = 0; i < 3; ++i) opt.Step(params, grads);
  for (const auto& [name, t] : before)
    for (int64_t i = 0; i < t.size(); ++i)
      CHECK(params.at(name).data[i] == t.data[i]);
}

TEST_CASE("adam error paths name the offending parameter") {
  Adam opt;
  std::map<std::string, Tensor> params{{"weights", Tensor({2}, {0.0, 0.0})}};

  std::map<std::string, Tensor> bad{
      {"weights", Tensor({2}, {1.0, std::numeric_limits<double>::quiet_NaN()})}};
  CHECK_THROWS_WITH_AS(opt.Step(params, bad), doctest::Contains("weights"),
                       std::runtime_error);

  std::map<std::string, Tensor> wrong_shape{{"weights", Tensor({3})}};
  CHECK_THROWS_WITH_AS(opt.Step(params, wrong_shape), doctest::Contains("weights"),
                       std::invalid_argument);

  std::map<std::string, Tensor> unknown{{"ghost", Tensor({2})}};
  CHECK_THROWS_WITH_AS(opt.Step(params, unknown), doctest::Contains("ghost"),
                       std::invalid_argument);

  CHECK(opt.step_count() == 0);  // failed steps must not advance time
}

TEST_CASE("adam rejects non-positive learning rates") {
  CHECK_THROWS_AS(Adam(AdamConfig{.lr = 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(Adam(AdamConfig{.lr = -0.1}), std::invalid_argument);
}

TEST_CASE("rng streams are seed-deterministic") {
  Rng a(123), b(123), c(124);
  bool all_equal = true, any_diff = false;
  for (int i = 0; i < 1000; ++i) {
    const double x = a.Uniform();
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
    all_equal = all_equal && (x == b.Uniform());
    any_diff = any_diff || (x != c.Uniform());
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("rng distribution ranges and moments") {
  Rng rng(7);
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.UniformOpenLow();
    CHECK(u > 0.0);
    CHECK(u <= 1.0);
    const int64_t k = rng.UniformInt(5);
    CHECK(k >= 0);
    CHECK(k < 5);
  }
  double sum = 0.0, sum2 = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double g = rng.Gaussian();
    sum += g;
    sum2 += g * g;
  }
  CHECK(std::abs(sum / n) < 0.03);        // mean 0, sd of estimate ~0.007
  CHECK(std::abs(sum2 / n - 1.0) < 0.05); // variance 1
}

TEST_CASE("gradcheck passes a correct analytic gradient") {
  // f(x) = sum x_i^2 + 3 x_0, df/dx_i = 2 x_i + 3 [i == 0].
  ParamMap params{{"x", Tensor({3}, {0.4, -1.2, 2.0})}};
  ParamMap analytic{{"x", Tensor({3}, {2 * 0.4 + 3.0, 2 * -1.2, 2 * 2.0})}};
  auto f = [](const ParamMap& p) {
    const Tensor& x = p.at("x");
    double s = 3.0 * x.data[0];
    for (double v : x.data) s += v * v;
    return s;
  };
  GradCheckReport r = GradCheck(f, params, analytic, 1e-5, 1e-4);
  CHECK(r.all_pass);
  CHECK(r.num_failed == 0);
  CHECK(r.entries.size() == 3);
  for (const auto& e : r.entries) {
    CHECK(e.pass);
    CHECK(e.evaluable);
    CHECK(e.rel_err < 1e-4);
  }
}

TEST_CASE("gradcheck catches a planted wrong component") {
  ParamMap params{{"x", Tensor({2}, {1.0, 2.0})}};
  ParamMap analytic{{"x", Tensor({2}, {2.0, 4.5})}};  // second component off by 0.5
  auto f = [](const ParamMap& p) {
    const Tensor& x = p.at("x");
    return x.data[0] * x.data[0] + x.data[1] * x.data[1];
  };
  GradCheckReport r = GradCheck(f, params, analytic, 1e-5, 1e-4);
  CHECK_FALSE(r.all_pass);
  CHECK(r.num_failed == 1);
  CHECK_FALSE(r.entries[1].pass);
  CHECK(r.entries[0].pass);
  CHECK(r.entries[1].param == "x");
  CHECK(r.entries[1].index == 1);
}

TEST_CASE("gradcheck flags non-evaluable components instead of passing them") {
  ParamMap params{{"x", Tensor::Scalar(0.0)}};
  ParamMap analytic{{"x", Tensor::Scalar(1.0)}};
  auto f = [](const ParamMap& p) {
    // Non-finite on one side of the perturbation.
    return p.at("x").data[0] < 0.0 ? std::numeric_limits<double>::quiet_NaN()
                                   : p.at("x").data[0];
  };
  GradCheckReport r = GradCheck(f, params, analytic, 1e-5, 1e-4);
  CHECK_FALSE(r.all_pass);
  CHECK_FALSE(r.entries[0].evaluable);
  CHECK_FALSE(r.entries[0].pass);
}

TEST_CASE("gradcheck absolute floor accepts near-zero gradient noise") {
  // Analytic 0 vs numeric round-off well under abs_tol must pass.
  ParamMap params{{"x", Tensor::Scalar(1.0)}};
  ParamMap analytic{{"x", Tensor::Scalar(0.0)}};
  auto f = [](const ParamMap&) { return 5.0; };  // constant
  GradCheckReport r = GradCheck(f, params, analytic, 1e-5, 1e-4);
  CHECK(r.all_pass);
}

}  // namespace
}  // namespace audflow
