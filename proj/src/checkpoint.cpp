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

#include "audflow/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

#include "nlohmann/json.hpp"

namespace audflow {
namespace {

// Keys are emitted in insertion order so repeated saves of the same state
// produce byte-identical files.
using Json = nlohmann::ordered_json;

constexpr char kB64Chars[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

// Doubles are stored as little-endian byte streams. On a big-endian host
// the bytes are swapped to keep the on-disk format portable.
bool HostIsLittleEndian() {
  const uint16_t probe = 1;
  uint8_t b;
  std::memcpy(&b, &probe, 1);
  return b == 1;
}

std::vector<uint8_t> TensorBytesLe(const Tensor& t) {
  std::vector<uint8_t> bytes(t.data.size() * 8);
  std::memcpy(bytes.data(), t.data.data(), bytes.size());
  if (!HostIsLittleEndian()) {
    for (size_t i = 0; i < bytes.size(); i += 8)
      for (size_t j = 0; j < 4; ++j) std::swap(bytes[i + j], bytes[i + 7 - j]);
  }
  return bytes;
}

std::vector<double> DoublesFromLe(const std::vector<uint8_t>& bytes) {
  std::vector<uint8_t> b = bytes;
  if (!HostIsLittleEndian()) {
    for (size_t i = 0; i < b.size(); i += 8)
      for (size_t j = 0; j < 4; ++j) std::swap(b[i + j], b[i + 7 - j]);
  }
  std::vector<double> out(b.size() / 8);
  std::memcpy(out.data(), b.data(), b.size());
  return out;
}

int B64Value(char c) {
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= 'a' && c <= 'z') return c - 'a' + 26;
  if (c >= '0' && c <= '9') return c - '0' + 52;
  if (c == '+') return 62;
  if (c == '/') return 63;
  return -1;
}

Json TensorToJson(const Tensor& t) {
  Json j;
  j["shape"] = t.shape;
  const std::vector<uint8_t> bytes = TensorBytesLe(t);
  j["data"] = Base64Encode(bytes.data(), bytes.size());
  return j;
}

Tensor TensorFromJson(const Json& j, const std::string& name) {
  if (!j.contains("shape") || !j.contains("data"))
    throw std::runtime_error("checkpoint: tensor '" + name + "' missing shape or data");
  Shape shape = j.at("shape").get<Shape>();
  std::vector<uint8_t> bytes = Base64Decode(j.at("data").get<std::string>());
  if (bytes.size() != static_cast<size_t>(ShapeSize(shape)) * 8)
    throw std::runtime_error("checkpoint: tensor '" + name + "' payload is " +
                             std::to_string(bytes.size()) + " bytes, shape needs " +
                             std::to_string(ShapeSize(shape) * 8));
  Tensor t;
  t.shape = std::move(shape);
  t.data = DoublesFromLe(bytes);
  return t;
}

}  // namespace

std::string Base64Encode(const void* data, size_t n_bytes) {
  const uint8_t* p = static_cast<const uint8_t*>(data);
  std::string out;
  out.reserve((n_bytes + 2) / 3 * 4);
  for (size_t i = 0; i < n_bytes; i += 3) {
    uint32_t v = static_cast<uint32_t>(p[i]) << 16;
    if (i + 1 < n_bytes) v |= static_cast<uint32_t>(p[i + 1]) << 8;
    if (i + 2 < n_bytes) v |= static_cast<uint32_t>(p[i + 2]);
    out.push_back(kB64Chars[(v >> 18) & 63]);
    out.push_back(kB64Chars[(v >> 12) & 63]);
    out.push_back(i + 1 < n_bytes ? kB64Chars[(v >> 6) & 63] : '=');
    out.push_back(i + 2 < n_bytes ? kB64Chars[v & 63] : '=');
  }
  return out;
}

std::vector<uint8_t> Base64Decode(const std::string& text) {
  if (text.size() % 4 != 0)
    throw std::runtime_error("checkpoint: base64 length not a multiple of 4");
  std::vector<uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  for (size_t i = 0; i < text.size(); i += 4) {
    int pad = 0;
    uint32_t v = 0;
    for (size_t j = 0; j < 4; ++j) {
      char c = text[i + j];
      if (c == '=') {
        if (i + 4 != text.size() || j < 2) throw std::runtime_error("checkpoint: bad base64 padding");
        ++pad;
        v <<= 6;
        continue;
      }
      if (pad > 0) throw std::runtime_error("checkpoint: base64 data after padding");
      int d = B64Value(c);
      if (d < 0) throw std::runtime_error("checkpoint: invalid base64 character");
      v = (v << 6) | static_cast<uint32_t>(d);
    }
    out.push_back(static_cast<uint8_t>((v >> 16) & 255));
    if (pad < 2) out.push_back(static_cast<uint8_t>((v >> 8) & 255));
    if (pad < 1) out.push_back(static_cast<uint8_t>(v & 255));
  }
  return out;
}

void SaveCheckpoint(const std::string& path, const Checkpoint& ckpt) {
  Json j;
  j["format"] = "audflow-checkpoint";
  j["version"] = kCheckpointVersion;
  j["task"] = ckpt.task;
  j["ablation"] = ckpt.ablation;
  j["cortical_init"] = ckpt.cortical_init;
  j["seed"] = ckpt.seed;
  j["step"] = ckpt.step;
  j["n_classes"] = ckpt.n_classes;
  j["adam"] = {{"lr", ckpt.adam.lr},
               {"beta1", ckpt.adam.beta1},
               {"beta2", ckpt.adam.beta2},
               {"eps", ckpt.adam.eps},
               {"step", ckpt.adam_step}};
  Json tensors = Json::object();
  for (const auto& [name, t] : ckpt.tensors) tensors[name] = TensorToJson(t);
  j["tensors"] = std::move(tensors);

  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("checkpoint: cannot open '" + path + "' for writing");
  f << j.dump(2) << "\n";
  if (!f) throw std::runtime_error("checkpoint: write to '" + path + "' failed");
}

Checkpoint LoadCheckpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("checkpoint: cannot open '" + path + "'");
  Json j;
  try {
    j = Json::parse(f);
  } catch (const std::exception& e) {
    throw std::runtime_error("checkpoint: '" + path + "' is not valid JSON: " + e.what());
  }
  if (j.value("format", "") != "audflow-checkpoint")
    throw std::runtime_error("checkpoint: '" + path + "' is not an audflow checkpoint");
  const int version = j.value("version", -1);
  if (version != kCheckpointVersion)
    throw std::runtime_error("checkpoint: '" + path + "' has version " +
                             std::to_string(version) + ", this build reads version " +
                             std::to_string(kCheckpointVersion));
  for (const char* key : {"task", "ablation", "cortical_init", "seed", "step",
                          "n_classes", "adam", "tensors"}) {
    if (!j.contains(key))
      throw std::runtime_error(std::string("checkpoint: missing field '") + key + "'");
  }
  Checkpoint c;
  c.task = j.at("task").get<std::string>();
  c.ablation = j.at("ablation").get<std::string>();
  c.cortical_init = j.at("cortical_init").get<std::string>();
  c.seed = j.at("seed").get<uint64_t>();
  c.step = j.at("step").get<int64_t>();
  c.n_classes = j.at("n_classes").get<int>();
  const Json& a = j.at("adam");
  c.adam.lr = a.at("lr").get<double>();
  c.adam.beta1 = a.at("beta1").get<double>();
  c.adam.beta2 = a.at("beta2").get<double>();
  c.adam.eps = a.at("eps").get<double>();
  c.adam_step = a.at("step").get<int64_t>();
  for (const auto& [name, tj] : j.at("tensors").items())
    c.tensors[name] = TensorFromJson(tj, name);
  return c;
}

}  // namespace audflow
