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

#ifndef AUDFLOW_TENSOR_H_
#define AUDFLOW_TENSOR_H_

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace audflow {

using Shape = std::vector<int64_t>;

inline int64_t ShapeSize(const Shape& s) {
  int64_t n = 1;
  for (int64_t e : s) n *= e;
  return n;
}

std::string ShapeToString(const Shape& s);

// Dense row-major 64-bit float array. The carrier for every signal and
// parameter in the pipeline.
struct Tensor {
  Shape shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(Shape s) : shape(std::move(s)), data(ShapeSize(shape), 0.0) {}
  Tensor(Shape s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
    if (static_cast<int64_t>(data.size()) != ShapeSize(shape))
      throw std::invalid_argument("Tensor: data length does not match shape " +
                                  ShapeToString(shape));
  }

  static Tensor Zeros(Shape s) { return Tensor(std::move(s)); }
  static Tensor Full(Shape s, double v) {
    Tensor t(std::move(s));
    std::fill(t.data.begin(), t.data.end(), v);
    return t;
  }
  static Tensor Scalar(double v) { return Tensor({1}, {v}); }
  static Tensor FromVector(std::vector<double> v) {
    int64_t n = static_cast<int64_t>(v.size());
    return Tensor({n}, std::move(v));
  }

  int64_t size() const { return static_cast<int64_t>(data.size()); }
  int64_t ndim() const { return static_cast<int64_t>(shape.size()); }
  double& at(int64_t i) { return data[i]; }
  double at(int64_t i) const { return data[i]; }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
  bool all_finite() const;
};

// Throws std::invalid_argument naming |op| and both shapes.
void CheckSameShape(const char* op, const Tensor& a, const Tensor& b);

}  // namespace audflow

#endif  // AUDFLOW_TENSOR_H_
