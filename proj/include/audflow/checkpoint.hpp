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
// Checkpoints: JSON with base64-coded little-endian float64 tensors so a
// save/load round trip is bit exact. Covers model parameters, optimizer
// moments and the run metadata needed to resume training.

#ifndef AUDFLOW_CHECKPOINT_H_
#define AUDFLOW_CHECKPOINT_H_

#include <cstdint>
#include <map>
#include <string>

#include "audflow/adam.hpp"
#include "audflow/tensor.hpp"

namespace audflow {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  std::string task;           // "classify" or "enhance"
  std::string ablation;       // "full", "cortical", "frozen", "cnn"
  std::string cortical_init;  // "log" or "random"
  uint64_t seed = 0;
  int64_t step = 0;  // training steps completed
  int n_classes = 0;
  AdamConfig adam;
  int64_t adam_step = 0;
  std::map<std::string, Tensor> tensors;  // params plus adam.m.* / adam.v.*
};

void SaveCheckpoint(const std::string& path, const Checkpoint& ckpt);

// Throws std::runtime_error on unreadable files, version mismatch, missing
// fields, bad base64, or shape/payload size disagreement.
Checkpoint LoadCheckpoint(const std::string& path);

// Helpers shared with tests.
std::string Base64Encode(const void* data, size_t n_bytes);
std::vector<uint8_t> Base64Decode(const std::string& text);

}  // namespace audflow

#endif  // AUDFLOW_CHECKPOINT_H_
