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

#include "audflow/tape.hpp"

#include <cmath>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace audflow {

namespace {

// The tape allocates and frees many multi-megabyte buffers per step. With
// default glibc settings those round-trip through mmap/munmap and the page
// faults dominate wall time, so keep freed blocks on the heap for reuse.
[[maybe_unused]] const bool g_malloc_tuned = [] {
#if defined(__GLIBC__)
  mallopt(M_MMAP_MAX, 0);
  mallopt(M_TRIM_THRESHOLD, -1);
#endif
  return true;
}();

}  // namespace

std::string ShapeToString(const Shape& s) {
  std::string out = "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

bool Tensor::all_finite() const {
  for (double v : data)
    if (!std::isfinite(v)) return false;
  return true;
}

void CheckSameShape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape != b.shape)
    throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                ShapeToString(a.shape) + " vs " +
                                ShapeToString(b.shape));
}

Var Tape::Leaf(Tensor value, bool requires_grad) {
  return Push(std::move(value), requires_grad, nullptr);
}

Var Tape::Push(Tensor value, bool requires_grad, BackwardFn backward) {
  nodes_.push_back(Node{std::move(value), requires_grad, std::move(backward)});
  return Var{static_cast<int32_t>(nodes_.size() - 1)};
}

void Tape::Backward(Var loss) {
  const int32_t id = Check(loss);
  if (nodes_.empty()) throw std::logic_error("Backward: empty tape");
  if (nodes_[id].value.size() != 1)
    throw std::invalid_argument("Backward: loss must be scalar, got shape " +
                                ShapeToString(nodes_[id].value.shape));
  grads_.assign(nodes_.size(), Tensor());
  has_grad_.assign(nodes_.size(), 0);
  grads_[id] = Tensor(nodes_[id].value.shape, {1.0});
  has_grad_[id] = 1;
  for (int32_t i = id; i >= 0; --i) {
    if (!has_grad_[i] || !nodes_[i].requires_grad) continue;
    if (nodes_[i].backward) nodes_[i].backward(*this, grads_[i]);
  }
}

const Tensor& Tape::grad(Var v) {
  const int32_t id = Check(v);
  if (grads_.empty()) throw std::logic_error("grad: call Backward first");
  if (!nodes_[id].requires_grad)
    throw std::logic_error("grad: node does not require gradients");
  if (!has_grad_[id]) {
    grads_[id] = Tensor(nodes_[id].value.shape);
    has_grad_[id] = 1;
  }
  return grads_[id];
}

void Tape::Accumulate(Var v, const Tensor& g) {
  const int32_t id = Check(v);
  if (!nodes_[id].requires_grad) return;
  if (g.shape != nodes_[id].value.shape)
    throw std::logic_error("Accumulate: gradient shape " +
                           ShapeToString(g.shape) + " != value shape " +
                           ShapeToString(nodes_[id].value.shape));
  if (!has_grad_[id]) {
    grads_[id] = g;
    has_grad_[id] = 1;
    return;
  }
  double* dst = grads_[id].data.data();
  const double* src = g.data.data();
  const int64_t n = g.size();
  for (int64_t i = 0; i < n; ++i) dst[i] += src[i];
}

}  // namespace audflow
