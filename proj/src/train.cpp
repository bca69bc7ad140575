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

#include "audflow/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "nlohmann/json.hpp"

namespace audflow {
namespace {

constexpr int64_t kCropSamples = kSampleRate;            // 1 s
constexpr int64_t kCropFrames = kCropSamples / kFrameHop;  // 200
constexpr uint64_t kEvalSeedSalt = 0x5eed0e5a1ULL;

uint64_t Mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed for one training draw; also the value named in abort diagnostics.
uint64_t DrawSeed(uint64_t seed, int64_t step, int slot) {
  return Mix64(Mix64(seed ^ Mix64(static_cast<uint64_t>(step))) +
               static_cast<uint64_t>(slot));
}

std::string ResolvePath(const std::string& base_dir, const std::string& p) {
  std::filesystem::path fp(p);
  if (fp.is_absolute() || base_dir.empty()) return p;
  return (std::filesystem::path(base_dir) / fp).string();
}

Rng SeededRng(uint64_t s) { return Rng(s); }

// ---------------------------------------------------------------------
// Model assembly: parameter map <-> tape leaves.

struct TapeModel {
  std::map<std::string, Var> leaves;
  CochlearVars coch;
  CorticalVars cort;        // valid unless cnn ablation
  Var stem_w, stem_b;       // cnn ablation
  ClassifierVars cls;       // classify task
  EnhancerVars enh;         // enhance task
};

const Tensor& Pick(const std::map<std::string, Tensor>& p, const std::string& name) {
  auto it = p.find(name);
  if (it == p.end()) throw std::runtime_error("train: missing parameter '" + name + "'");
  return it->second;
}

TapeModel BuildModel(Tape& t, const std::map<std::string, Tensor>& p, Task task,
                     Ablation ab) {
  const bool coch_learn = ab == Ablation::kFull || ab == Ablation::kCnn;
  const bool cort_learn = ab == Ablation::kFull || ab == Ablation::kCortical;
  TapeModel m;
  CochlearParams cp;
  cp.alpha = Pick(p, "cochlear.alpha");
  cp.w = Pick(p, "cochlear.w");
  cp.tau = Pick(p, "cochlear.tau");
  m.coch = MakeCochlearVars(t, cp, coch_learn);
  m.leaves["cochlear.alpha"] = m.coch.alpha;
  m.leaves["cochlear.w"] = m.coch.w;
  m.leaves["cochlear.tau"] = m.coch.tau;
  if (ab == Ablation::kCnn) {
    m.stem_w = t.Leaf(Pick(p, "stem.w"), true);
    m.stem_b = t.Leaf(Pick(p, "stem.b"), true);
    m.leaves["stem.w"] = m.stem_w;
    m.leaves["stem.b"] = m.stem_b;
  } else {
    CorticalParams kp;
    kp.cap_omega = Pick(p, "cortical.cap_omega");
    kp.omega = Pick(p, "cortical.omega");
    m.cort = MakeCorticalVars(t, kp, cort_learn);
    m.leaves["cortical.cap_omega"] = m.cort.cap_omega;
    m.leaves["cortical.omega"] = m.cort.omega;
  }
  auto leaf = [&](const char* name) {
    Var v = t.Leaf(Pick(p, name), true);
    m.leaves[name] = v;
    return v;
  };
  if (task == Task::kClassify) {
    m.cls.w1 = leaf("net.conv1_w");
    m.cls.b1 = leaf("net.conv1_b");
    m.cls.w2 = leaf("net.conv2_w");
    m.cls.b2 = leaf("net.conv2_b");
    m.cls.w3 = leaf("net.conv3_w");
    m.cls.b3 = leaf("net.conv3_b");
    m.cls.head_w = leaf("net.fc_w");
    m.cls.head_b = leaf("net.fc_b");
  } else {
    m.enh.w1 = leaf("net.conv1_w");
    m.enh.b1 = leaf("net.conv1_b");
    m.enh.w2 = leaf("net.conv2_w");
    m.enh.b2 = leaf("net.conv2_b");
    m.enh.w3 = leaf("net.conv3_w");
    m.enh.b3 = leaf("net.conv3_b");
    m.enh.w4 = leaf("net.conv4_w");
    m.enh.b4 = leaf("net.conv4_b");
    m.enh.head_w = leaf("net.fc_w");
    m.enh.head_b = leaf("net.fc_b");
  }
  return m;
}

Var Features(Tape& t, const Waveform& w, const RoexFilterbank& fb,
             const TapeModel& m, Ablation ab, const CorticalConfig& cc) {
  Var sg = CochlearForward(t, w, fb, m.coch);  // [129, T]
  if (ab == Ablation::kCnn) {
    const Shape& s = t.value(sg).shape;
    Var x = Reshape(t, sg, {1, s[0], s[1]});
    return Gelu(t, Conv2D(t, x, m.stem_w, m.stem_b));  // [40,129,T]
  }
  return CorticalForward(t, sg, m.cort, cc);
}

Var ExampleLoss(Tape& t, const Example& ex, const RoexFilterbank& fb,
                const TapeModel& m, Task task, Ablation ab,
                const CorticalConfig& cc) {
  Var feats = Features(t, ex.input, fb, m, ab, cc);
  if (task == Task::kClassify) {
    Var logits = ClassifierForward(t, feats, m.cls);
    return CrossEntropy(t, logits, ex.labels);
  }
  Var mask = EnhancerMask(t, feats, m.enh);  // [T,129]
  Var mixv = t.Leaf(Tensor::FromVector(ex.input.samples), false);
  StftSpec spec = Stft(t, mixv, kEnhanceWin, kEnhanceHop);
  StftSpec masked{Mul(t, mask, spec.re), Mul(t, mask, spec.im), spec.win,
                  spec.hop, spec.n};
  Var est = Istft(t, masked);
  Var target = t.Leaf(Tensor::FromVector(ex.target.samples), false);
  return EnhancementLoss(t, est, target);
}

void ClampParams(std::map<std::string, Tensor>& p) {
  if (auto it = p.find("cochlear.alpha"); it != p.end())
    for (double& a : it->second.data) a = std::max(a, kAlphaFloor);
  if (auto it = p.find("cochlear.tau"); it != p.end())
    for (double& v : it->second.data) v = std::max(v, kTauFloorMs);
  if (auto it = p.find("cortical.cap_omega"); it != p.end())
    for (double& v : it->second.data) v = std::clamp(v, kCapOmegaMin, kCapOmegaMax);
  if (auto it = p.find("cortical.omega"); it != p.end())
    for (double& v : it->second.data) {
      const double sign = v < 0.0 ? -1.0 : 1.0;
      v = sign * std::clamp(std::abs(v), kOmegaAbsMin, kOmegaAbsMax);
    }
}

Checkpoint MakeCheckpoint(const TrainConfig& cfg, int n_classes, int64_t step,
                          const std::map<std::string, Tensor>& params, Adam& adam) {
  Checkpoint c;
  c.task = TaskName(cfg.task);
  c.ablation = AblationName(cfg.ablation);
  c.cortical_init = CorticalInitName(cfg.cortical_init);
  c.seed = cfg.seed;
  c.step = step;
  c.n_classes = n_classes;
  c.adam = cfg.adam;
  c.adam_step = adam.step_count();
  c.tensors = params;
  for (const auto& [name, m] : adam.first_moments()) c.tensors["adam.m." + name] = m;
  for (const auto& [name, v] : adam.second_moments()) c.tensors["adam.v." + name] = v;
  return c;
}

std::map<std::string, Tensor> ParamsFromCheckpoint(const Checkpoint& c) {
  std::map<std::string, Tensor> p;
  for (const auto& [name, t] : c.tensors)
    if (name.rfind("adam.", 0) != 0) p[name] = t;
  return p;
}

void RestoreAdam(const Checkpoint& c, Adam& adam) {
  adam.set_step_count(c.adam_step);
  for (const auto& [name, t] : c.tensors) {
    if (name.rfind("adam.m.", 0) == 0) adam.first_moments()[name.substr(7)] = t;
    if (name.rfind("adam.v.", 0) == 0) adam.second_moments()[name.substr(7)] = t;
  }
}

double MeanOf(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double Ci95Of(const std::vector<double>& v) {
  const size_t n = v.size();
  if (n < 2) return 0.0;
  const double mean = MeanOf(v);
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  return 1.96 * sd / std::sqrt(static_cast<double>(n));
}

}  // namespace

// ---------------------------------------------------------------------
// Names and manifests.

std::string TaskName(Task t) { return t == Task::kClassify ? "classify" : "enhance"; }

std::string AblationName(Ablation a) {
  switch (a) {
    case Ablation::kFull: return "full";
    case Ablation::kCortical: return "cortical";
    case Ablation::kFrozen: return "frozen";
    case Ablation::kCnn: return "cnn";
  }
  return "full";
}

std::string CorticalInitName(CorticalInit i) {
  return i == CorticalInit::kLogSpaced ? "log" : "random";
}

Task ParseTask(const std::string& s) {
  if (s == "classify") return Task::kClassify;
  if (s == "enhance") return Task::kEnhance;
  throw std::invalid_argument("unknown task '" + s + "' (classify|enhance)");
}

Ablation ParseAblation(const std::string& s) {
  if (s == "full") return Ablation::kFull;
  if (s == "cortical") return Ablation::kCortical;
  if (s == "frozen") return Ablation::kFrozen;
  if (s == "cnn") return Ablation::kCnn;
  throw std::invalid_argument("unknown ablation '" + s + "' (full|cortical|frozen|cnn)");
}

CorticalInit ParseCorticalInit(const std::string& s) {
  if (s == "log") return CorticalInit::kLogSpaced;
  if (s == "random") return CorticalInit::kRandom;
  throw std::invalid_argument("unknown cortical init '" + s + "' (log|random)");
}

Manifest LoadManifest(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("manifest: cannot open '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(f);
  } catch (const std::exception& e) {
    throw std::runtime_error("manifest: '" + path + "' is not valid JSON: " + e.what());
  }
  Manifest m;
  m.base_dir = std::filesystem::path(path).parent_path().string();
  if (j.contains("class_names"))
    m.class_names = j.at("class_names").get<std::vector<std::string>>();
  if (!j.contains("items") || !j.at("items").is_array())
    throw std::runtime_error("manifest: '" + path + "' has no items array");
  for (const auto& it : j.at("items")) {
    ManifestItem item;
    item.audio = it.at("audio").get<std::string>();
    item.labels = it.value("labels", "");
    item.role = it.value("role", "");
    m.items.push_back(std::move(item));
  }
  if (m.items.empty()) throw std::runtime_error("manifest: '" + path + "' is empty");
  return m;
}

std::vector<int> LoadFrameLabels(const std::string& path) {
  const bool csv = path.size() >= 4 && path.substr(path.size() - 4) == ".csv";
  std::vector<int> labels;
  if (csv) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("labels: cannot open '" + path + "'");
    std::string line;
    while (std::getline(f, line)) {
      std::stringstream ss(line);
      std::string cell;
      while (std::getline(ss, cell, ',')) {
        if (cell.empty()) continue;
        labels.push_back(std::stoi(cell));
      }
    }
  } else {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("labels: cannot open '" + path + "'");
    std::vector<char> bytes((std::istreambuf_iterator<char>(f)),
                            std::istreambuf_iterator<char>());
    if (bytes.size() % 4 != 0)
      throw std::runtime_error("labels: '" + path + "' size is not a multiple of 4");
    labels.resize(bytes.size() / 4);
    for (size_t i = 0; i < labels.size(); ++i) {
      uint32_t v = 0;
      for (int b = 3; b >= 0; --b)
        v = (v << 8) | static_cast<uint8_t>(bytes[i * 4 + static_cast<size_t>(b)]);
      int32_t sv;
      std::memcpy(&sv, &v, 4);
      labels[i] = sv;
    }
  }
  return labels;
}

// ---------------------------------------------------------------------
// Sampler.

Sampler::Sampler(const Manifest& manifest, const Manifest* noise_manifest, Task task) {
  auto load_items = [&](const Manifest& m, bool want_noise) {
    for (size_t i = 0; i < m.items.size(); ++i) {
      const ManifestItem& it = m.items[i];
      const bool is_noise = it.role == "noise";
      if (is_noise != want_noise) continue;
      Waveform w = ReadWav(ResolvePath(m.base_dir, it.audio));
      std::vector<int> lab;
      if (!it.labels.empty()) {
        lab = LoadFrameLabels(ResolvePath(m.base_dir, it.labels));
        const int64_t want = (w.size() + kFrameHop - 1) / kFrameHop;
        if (static_cast<int64_t>(lab.size()) != want)
          throw std::runtime_error("labels: '" + it.labels + "' has " +
                                   std::to_string(lab.size()) + " frames, audio needs " +
                                   std::to_string(want));
        for (int l : lab) max_label_ = std::max(max_label_, l);
      }
      const int idx = static_cast<int>(audio_.size());
      audio_.push_back(std::move(w.samples));
      labels_.push_back(std::move(lab));
      (want_noise ? noise_pool_ : pool_).push_back(idx);
    }
  };
  load_items(manifest, /*want_noise=*/false);
  load_items(manifest, /*want_noise=*/true);
  if (noise_manifest != nullptr) load_items(*noise_manifest, /*want_noise=*/true);
  if (pool_.empty()) throw std::runtime_error("sampler: no usable items in manifest");
  if (task == Task::kEnhance && noise_pool_.empty())
    throw std::runtime_error("sampler: enhance task needs items with role 'noise'");
}

Example Sampler::Draw(Task task, double snr_db, bool add_noise, Rng& rng) const {
  auto crop = [&](const std::vector<double>& src, int64_t start) {
    Waveform w;
    w.samples.assign(kCropSamples, 0.0);
    const int64_t n = std::min<int64_t>(kCropSamples, static_cast<int64_t>(src.size()) - start);
    for (int64_t i = 0; i < n; ++i) w.samples[i] = src[start + i];
    return w;
  };
  auto pick_start = [&](const std::vector<double>& src) -> int64_t {
    const int64_t spare_frames =
        (static_cast<int64_t>(src.size()) - kCropSamples) / kFrameHop;
    if (spare_frames <= 0) return 0;
    return kFrameHop * static_cast<int64_t>(rng.UniformInt(static_cast<uint64_t>(spare_frames + 1)));
  };

  Example ex;
  const int item = pool_[rng.UniformInt(pool_.size())];
  const int64_t start = pick_start(audio_[item]);
  Waveform clean = crop(audio_[item], start);

  if (task == Task::kClassify) {
    ex.labels.assign(kCropFrames, -1);
    if (!labels_[item].empty()) {
      const int64_t f0 = start / kFrameHop;
      const int64_t avail = static_cast<int64_t>(labels_[item].size()) - f0;
      for (int64_t f = 0; f < std::min<int64_t>(kCropFrames, avail); ++f)
        ex.labels[f] = labels_[item][f0 + f];
    }
    if (add_noise && !noise_pool_.empty()) {
      const int nitem = noise_pool_[rng.UniformInt(noise_pool_.size())];
      Waveform noise = crop(audio_[nitem], pick_start(audio_[nitem]));
      ex.input = MixAtSnr(clean, noise, snr_db);
    } else {
      ex.input = clean;
    }
    ex.target = clean;
    return ex;
  }

  const int nitem = noise_pool_[rng.UniformInt(noise_pool_.size())];
  Waveform noise = crop(audio_[nitem], pick_start(audio_[nitem]));
  ex.input = MixAtSnr(clean, noise, snr_db);
  ex.target = clean;
  return ex;
}

Example Sampler::Sample(const TrainConfig& cfg, int64_t step, int slot) const {
  Rng rng = SeededRng(DrawSeed(cfg.seed, step, slot));
  if (cfg.task == Task::kClassify)
    return Draw(cfg.task, cfg.classify_snr_db, cfg.classify_add_noise, rng);
  return Draw(cfg.task, cfg.snr_db, true, rng);
}

Example Sampler::SampleEval(Task task, double snr_db, bool add_noise, uint64_t seed,
                            int64_t index) const {
  Rng rng = SeededRng(DrawSeed(seed ^ kEvalSeedSalt, index, 0));
  return Draw(task, snr_db, add_noise, rng);
}

// ---------------------------------------------------------------------
// Parameter initialization.

std::map<std::string, Tensor> InitParams(const TrainConfig& cfg) {
  std::map<std::string, Tensor> p;
  CochlearParams cp = CochlearParams::Init();
  p["cochlear.alpha"] = cp.alpha;
  p["cochlear.w"] = cp.w;
  p["cochlear.tau"] = cp.tau;
  if (cfg.ablation == Ablation::kCnn) {
    // Same fan-in uniform scheme as the task heads.
    Rng rng = SeededRng(Mix64(cfg.seed ^ 0x57e3));
    const double bound = std::sqrt(6.0 / 9.0);
    Tensor w({kNumStrf, 1, 3, 3});
    for (double& v : w.data) v = bound * (2.0 * rng.Uniform() - 1.0);
    p["stem.w"] = std::move(w);
    p["stem.b"] = Tensor::Zeros({kNumStrf});
  } else {
    CorticalParams kp = InitCortical(cfg.cortical_init, cfg.seed);
    p["cortical.cap_omega"] = kp.cap_omega;
    p["cortical.omega"] = kp.omega;
  }
  if (cfg.task == Task::kClassify) {
    if (cfg.n_classes < 2)
      throw std::invalid_argument("train: classify needs n_classes >= 2");
    ClassifierNet net = ClassifierNet::Init(cfg.n_classes, Mix64(cfg.seed ^ 0xc1a55));
    p["net.conv1_w"] = net.w1;
    p["net.conv1_b"] = net.b1;
    p["net.conv2_w"] = net.w2;
    p["net.conv2_b"] = net.b2;
    p["net.conv3_w"] = net.w3;
    p["net.conv3_b"] = net.b3;
    p["net.fc_w"] = net.head_w;
    p["net.fc_b"] = net.head_b;
  } else {
    EnhancerNet net = EnhancerNet::Init(Mix64(cfg.seed ^ 0xe17a));
    p["net.conv1_w"] = net.w1;
    p["net.conv1_b"] = net.b1;
    p["net.conv2_w"] = net.w2;
    p["net.conv2_b"] = net.b2;
    p["net.conv3_w"] = net.w3;
    p["net.conv3_b"] = net.b3;
    p["net.conv4_w"] = net.w4;
    p["net.conv4_b"] = net.b4;
    p["net.fc_w"] = net.head_w;
    p["net.fc_b"] = net.head_b;
  }
  return p;
}

std::vector<std::string> LearnableNames(Task task, Ablation ablation,
                                        const std::map<std::string, Tensor>& params) {
  std::vector<std::string> out;
  for (const auto& [name, t] : params) {
    (void)t;
    const bool frontend_coch = name.rfind("cochlear.", 0) == 0;
    const bool frontend_cort = name.rfind("cortical.", 0) == 0;
    bool learn = true;
    switch (ablation) {
      case Ablation::kFull:
        break;
      case Ablation::kCnn:
        break;  // no cortical params exist; cochlear stays learnable
      case Ablation::kCortical:
        if (frontend_coch) learn = false;
        break;
      case Ablation::kFrozen:
        if (frontend_coch || frontend_cort) learn = false;
        break;
    }
    (void)task;
    if (learn) out.push_back(name);
  }
  return out;
}

// ---------------------------------------------------------------------
// Training loop.

TrainResult Train(const TrainConfig& cfg, const Manifest& manifest,
                  const Manifest* noise_manifest, const Manifest* eval_manifest,
                  const Checkpoint* resume) {
  if (cfg.batch < 1) throw std::invalid_argument("train: batch must be >= 1");
  if (cfg.steps < 0) throw std::invalid_argument("train: steps must be >= 0");

  Sampler sampler(manifest, noise_manifest, cfg.task);
  std::optional<Sampler> eval_sampler;
  if (eval_manifest != nullptr)
    eval_sampler.emplace(*eval_manifest, noise_manifest, cfg.task);

  int n_classes = cfg.n_classes;
  if (cfg.task == Task::kClassify && n_classes == 0) {
    n_classes = !manifest.class_names.empty()
                    ? static_cast<int>(manifest.class_names.size())
                    : sampler.max_label() + 1;
  }
  TrainConfig icfg = cfg;
  icfg.n_classes = n_classes;

  std::map<std::string, Tensor> params;
  Adam adam(cfg.adam);
  int64_t start_step = 0;
  if (resume != nullptr) {
    if (resume->task != TaskName(cfg.task) || resume->ablation != AblationName(cfg.ablation))
      throw std::runtime_error("train: checkpoint task/ablation does not match config");
    params = ParamsFromCheckpoint(*resume);
    RestoreAdam(*resume, adam);
    start_step = resume->step;
    n_classes = resume->n_classes;
  } else {
    params = InitParams(icfg);
  }
  const std::vector<std::string> learnable =
      LearnableNames(cfg.task, cfg.ablation, params);

  const RoexFilterbank fb = BuildFilterbank(kCropSamples);

  std::ofstream log_file;
  if (!cfg.log_path.empty()) {
    log_file.open(cfg.log_path);
    if (!log_file) throw std::runtime_error("train: cannot open log '" + cfg.log_path + "'");
    log_file << "step,loss,eval_metric\n";
  }

  TrainResult result;
  Checkpoint last_good = MakeCheckpoint(icfg, n_classes, start_step, params, adam);

  for (int64_t step = start_step; step < cfg.steps; ++step) {
    std::map<std::string, Tensor> grads;
    for (const std::string& name : learnable)
      grads[name] = Tensor::Zeros(params.at(name).shape);
    double loss_sum = 0.0;

    for (int slot = 0; slot < cfg.batch; ++slot) {
      const Example ex = sampler.Sample(cfg, step, slot);
      Tape t;
      TapeModel m = BuildModel(t, params, cfg.task, cfg.ablation);
      Var loss = ExampleLoss(t, ex, fb, m, cfg.task, cfg.ablation, cfg.cortical);
      const double lv = t.value(loss).data[0];
      if (!std::isfinite(lv)) {
        result.aborted = true;
        result.abort_message =
            "non-finite loss at step " + std::to_string(step) + ", batch slot " +
            std::to_string(slot) + " (batch seed " +
            std::to_string(DrawSeed(cfg.seed, step, slot)) +
            "); last good checkpoint is from step " + std::to_string(last_good.step);
        if (!cfg.checkpoint_path.empty()) SaveCheckpoint(cfg.checkpoint_path, last_good);
        result.checkpoint = last_good;
        return result;
      }
      loss_sum += lv;
      t.Backward(loss);
      for (const std::string& name : learnable) {
        const Tensor& g = t.grad(m.leaves.at(name));
        Tensor& acc = grads.at(name);
        for (size_t i = 0; i < acc.data.size(); ++i)
          acc.data[i] += g.data[i] / cfg.batch;
      }
    }

    try {
      adam.Step(params, grads);
    } catch (const std::exception& e) {
      result.aborted = true;
      result.abort_message = std::string("optimizer error at step ") +
                             std::to_string(step) + ": " + e.what() +
                             " (batch seed " + std::to_string(DrawSeed(cfg.seed, step, 0)) +
                             ")";
      if (!cfg.checkpoint_path.empty()) SaveCheckpoint(cfg.checkpoint_path, last_good);
      result.checkpoint = last_good;
      return result;
    }
    ClampParams(params);

    TrainLogRow row;
    row.step = step + 1;
    row.loss = loss_sum / cfg.batch;
    if (eval_sampler && cfg.eval_every > 0 &&
        ((step + 1) % cfg.eval_every == 0 || step + 1 == cfg.steps)) {
      const Checkpoint probe = MakeCheckpoint(icfg, n_classes, step + 1, params, adam);
      const std::string protocol = cfg.task == Task::kClassify ? "clean" : "enhance0db";
      row.eval_metric =
          Evaluate(probe, *eval_manifest, protocol, cfg.eval_samples,
                   cfg.seed + 1, noise_manifest)
              .mean;
    }
    result.log.push_back(row);
    if (log_file) {
      log_file << row.step << "," << row.loss << ",";
      if (row.eval_metric) log_file << *row.eval_metric;
      log_file << "\n";
    }
    last_good = MakeCheckpoint(icfg, n_classes, step + 1, params, adam);
  }

  result.checkpoint = MakeCheckpoint(icfg, n_classes, cfg.steps, params, adam);
  if (!cfg.checkpoint_path.empty()) SaveCheckpoint(cfg.checkpoint_path, result.checkpoint);
  return result;
}

// ---------------------------------------------------------------------
// Evaluation.

EvalReport Evaluate(const Checkpoint& ckpt, const Manifest& manifest,
                    const std::string& protocol, int n_samples, uint64_t seed,
                    const Manifest* noise_manifest) {
  if (n_samples < 1) throw std::invalid_argument("evaluate: n_samples must be >= 1");
  const Task task = ParseTask(ckpt.task);
  const Ablation ab = ParseAblation(ckpt.ablation);
  const std::map<std::string, Tensor> params = ParamsFromCheckpoint(ckpt);

  bool add_noise = false;
  double snr_db = 0.0;
  EvalReport report;
  report.protocol = protocol;
  if (task == Task::kClassify) {
    report.metric = "accuracy";
    if (protocol == "clean") {
      add_noise = false;
    } else if (protocol.rfind("pink", 0) == 0) {
      add_noise = true;
      snr_db = std::stod(protocol.substr(4));
    } else {
      throw std::invalid_argument("evaluate: classify protocol '" + protocol +
                                  "' (clean|pink<snr>)");
    }
  } else {
    report.metric = "sisdr_db";
    if (protocol.rfind("enhance", 0) != 0 ||
        protocol.substr(protocol.size() - 2) != "db")
      throw std::invalid_argument("evaluate: enhance protocol '" + protocol +
                                  "' (enhance<snr>db)");
    snr_db = std::stod(protocol.substr(7, protocol.size() - 9));
  }

  Sampler sampler(manifest, noise_manifest, task);
  const RoexFilterbank fb = BuildFilterbank(kCropSamples);
  const CorticalConfig cc;

  std::vector<double> scores, input_scores;
  for (int i = 0; i < n_samples; ++i) {
    Example ex = sampler.SampleEval(
        task, snr_db, /*add_noise=*/task == Task::kEnhance, seed, i);
    if (task == Task::kClassify) {
      if (add_noise) {
        // Classification eval mixes pink noise, not manifest noise.
        Waveform pink = GenPinkNoise(1.0, DrawSeed(seed ^ 0x9127c, i, 1));
        ex.input = MixAtSnr(ex.target, pink, snr_db);
      }
      bool any_label = false;
      for (int l : ex.labels) any_label |= (l >= 0);
      if (!any_label)
        throw std::runtime_error("evaluate: item without frame labels in protocol '" +
                                 protocol + "'");
      Tape t;
      TapeModel m = BuildModel(t, params, task, ab);
      Var feats = Features(t, ex.input, fb, m, ab, cc);
      Var logits = ClassifierForward(t, feats, m.cls);
      scores.push_back(Accuracy(t.value(logits), ex.labels));
    } else {
      Tape t;
      TapeModel m = BuildModel(t, params, task, ab);
      Var feats = Features(t, ex.input, fb, m, ab, cc);
      Var mask = EnhancerMask(t, feats, m.enh);
      Var mixv = t.Leaf(Tensor::FromVector(ex.input.samples), false);
      StftSpec spec = Stft(t, mixv, kEnhanceWin, kEnhanceHop);
      StftSpec masked{Mul(t, mask, spec.re), Mul(t, mask, spec.im), spec.win,
                      spec.hop, spec.n};
      Var est = Istft(t, masked);
      scores.push_back(SiSdr(t.value(est).data, ex.target.samples));
      input_scores.push_back(SiSdr(ex.input.samples, ex.target.samples));
    }
  }

  report.mean = MeanOf(scores);
  report.ci95 = Ci95Of(scores);
  report.n = static_cast<int64_t>(scores.size());
  if (!input_scores.empty()) report.input_mean = MeanOf(input_scores);
  return report;
}

void WriteEvalReportJson(const std::string& path, const Checkpoint& ckpt,
                         const std::vector<EvalReport>& reports) {
  nlohmann::ordered_json j;
  j["task"] = ckpt.task;
  j["ablation"] = ckpt.ablation;
  j["step"] = ckpt.step;
  j["seed"] = ckpt.seed;
  j["reports"] = nlohmann::ordered_json::array();
  for (const EvalReport& r : reports) {
    nlohmann::ordered_json e;
    e["protocol"] = r.protocol;
    e["metric"] = r.metric;
    e["mean"] = r.mean;
    e["ci95"] = r.ci95;
    e["n"] = r.n;
    if (r.input_mean) e["input_mean"] = *r.input_mean;
    j["reports"].push_back(std::move(e));
  }
  std::ofstream f(path);
  if (!f) throw std::runtime_error("evaluate: cannot open report '" + path + "'");
  f << j.dump(2) << "\n";
}

}  // namespace audflow
