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

#ifndef AUDFLOW_TAPE_H_
#define AUDFLOW_TAPE_H_

#include <functional>
#include <stdexcept>
#include <vector>

#include "audflow/tensor.hpp"

namespace audflow {

class Tape;

// Handle to a node on a Tape. Cheap to copy; only valid for the tape that
// produced it.
struct Var {
  int32_t id = -1;
  bool valid() const { return id >= 0; }
};

// Define-by-run reverse-mode tape. Nodes are appended in topological order
// by construction; backward() walks them in reverse.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const Tensor& grad_out)>;

  Var Leaf(Tensor value, bool requires_grad);

  // Internal: appends an op node. |requires_grad| should be true iff any
  // input requires grad; |backward| may be null for constant results.
  Var Push(Tensor value, bool requires_grad, BackwardFn backward);

  const Tensor& value(Var v) const { return nodes_[Check(v)].value; }
  bool requires_grad(Var v) const { return nodes_[Check(v)].requires_grad; }
  int64_t num_nodes() const { return static_cast<int64_t>(nodes_.size()); }

  // Seeds d(loss)/d(loss) = 1 and propagates gradients to every node that
  // requires grad. |loss| must be scalar (single element).
  void Backward(Var loss);

  // Gradient of the last Backward() loss w.r.t. |v|. Zero tensor of the
  // node's shape if the node was never reached.
  const Tensor& grad(Var v);

  // Adds |g| into the gradient slot of |v|. Used by backward closures.
  void Accumulate(Var v, const Tensor& g);

 private:
  struct Node {
    Tensor value;
    bool requires_grad = false;
    BackwardFn backward;
  };

  int32_t Check(Var v) const {
    if (!v.valid() || v.id >= static_cast<int32_t>(nodes_.size()))
      throw std::logic_error("Tape: invalid Var handle");
    return v.id;
  }

  std::vector<Node> nodes_;
  std::vector<Tensor> grads_;      // parallel to nodes_, empty == not reached
  std::vector<uint8_t> has_grad_;  // parallel flags
};

}  // namespace audflow

#endif  // AUDFLOW_TAPE_H_
