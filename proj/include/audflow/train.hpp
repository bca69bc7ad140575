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
// Training harness: dataset manifests, deterministic 1 s crop/mix
// sampling, the joint frontend+backend training loop with ablation modes,
// and the evaluation protocols.

#ifndef AUDFLOW_TRAIN_H_
#define AUDFLOW_TRAIN_H_

#include <optional>
#include <string>
#include <vector>

#include "audflow/backends.hpp"
#include "audflow/checkpoint.hpp"
#include "audflow/rng.hpp"

namespace audflow {

enum class Task { kClassify, kEnhance };
enum class Ablation { kFull, kCortical, kFrozen, kCnn };

std::string TaskName(Task t);
std::string AblationName(Ablation a);
std::string CorticalInitName(CorticalInit i);
Task ParseTask(const std::string& s);
Ablation ParseAblation(const std::string& s);
CorticalInit ParseCorticalInit(const std::string& s);

struct ManifestItem {
  std::string audio;   // absolute, or relative to the manifest file
  std::string labels;  // optional frame-label file, one int per 5 ms frame
  std::string role;    // "speech", "noise", "music", or empty
};

struct Manifest {
  std::vector<ManifestItem> items;
  std::vector<std::string> class_names;
  std::string base_dir;
};

// Manifest JSON: {"class_names": [...], "items": [{"audio": ...,
// "labels": ..., "role": ...}, ...]}. Relative paths resolve against the
// manifest's directory.
Manifest LoadManifest(const std::string& path);

// ".csv" -> one integer per line; anything else -> little-endian int32
// binary. -1 marks frames excluded from the loss.
std::vector<int> LoadFrameLabels(const std::string& path);

struct TrainConfig {
  Task task = Task::kClassify;
  Ablation ablation = Ablation::kFull;
  CorticalInit cortical_init = CorticalInit::kLogSpaced;
  uint64_t seed = 0;
  int64_t steps = 2000;
  int batch = 4;
  AdamConfig adam;          // lr 0.001
  double snr_db = 0.0;      // enhance-task mixing SNR
  bool classify_add_noise = false;  // optional noisy-training mode
  double classify_snr_db = 0.0;
  int n_classes = 0;  // 0 = take from the manifest class-name table
  int64_t eval_every = 0;           // 0 = no periodic eval
  int eval_samples = 20;            // per periodic eval
  std::string log_path;             // CSV (step, loss [, metric]); empty = none
  std::string checkpoint_path;      // final (and abort-time) save; empty = none
  CorticalConfig cortical;
};

// One fully materialized 1 s training example.
struct Example {
  Waveform input;           // what the model hears
  Waveform target;          // enhance: clean speech
  std::vector<int> labels;  // classify: 200 frame labels
};

// Loads manifest audio/labels up front and maps (seed, step, slot) to an
// example deterministically. Crops align to the 80-sample hop so frame
// labels stay valid; short items are zero-padded (labels padded with -1).
class Sampler {
 public:
  // For classify, the pool is every item with a label file; for enhance it
  // is the non-noise items and a "noise"-role pool is required (taken from
  // noise_manifest when given, else from the main one).
  Sampler(const Manifest& manifest, const Manifest* noise_manifest, Task task);

  Example Sample(const TrainConfig& cfg, int64_t step, int slot) const;
  // Evaluation draws: index i under an independent seed stream.
  Example SampleEval(Task task, double snr_db, bool add_noise, uint64_t seed,
                     int64_t index) const;

  int64_t pool_size() const { return static_cast<int64_t>(pool_.size()); }
  int max_label() const { return max_label_; }

 private:
  Example Draw(Task task, double snr_db, bool add_noise, Rng& rng) const;

  std::vector<std::vector<double>> audio_;
  std::vector<std::vector<int>> labels_;
  std::vector<int> pool_, noise_pool_;
  int max_label_ = -1;
};

struct TrainLogRow {
  int64_t step = 0;
  double loss = 0.0;
  std::optional<double> eval_metric;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<TrainLogRow> log;
  bool aborted = false;
  std::string abort_message;
};

// Runs the loop from scratch, or continues from |resume| (which must match
// cfg's task/ablation). eval_manifest feeds periodic eval when given.
TrainResult Train(const TrainConfig& cfg, const Manifest& manifest,
                  const Manifest* noise_manifest = nullptr,
                  const Manifest* eval_manifest = nullptr,
                  const Checkpoint* resume = nullptr);

struct EvalReport {
  std::string protocol;
  std::string metric;  // "accuracy" or "sisdr_db"
  double mean = 0.0;
  double ci95 = 0.0;  // 1.96 * sd / sqrt(n)
  int64_t n = 0;
  std::optional<double> input_mean;  // enhance: unprocessed-mix SI-SDR
};

// Protocols: "clean", "pink-3" / "pink0" / "pink3" (classify, pink noise
// at that SNR), "enhance0db" (or any "enhance<snr>db"). Deterministic
// given seed.
EvalReport Evaluate(const Checkpoint& ckpt, const Manifest& manifest,
                    const std::string& protocol, int n_samples = 100,
                    uint64_t seed = 1234, const Manifest* noise_manifest = nullptr);

void WriteEvalReportJson(const std::string& path, const Checkpoint& ckpt,
                         const std::vector<EvalReport>& reports);

// Fresh parameter map for a config (names like "cochlear.alpha",
// "cortical.omega", "stem.w", "net.conv1_w").
std::map<std::string, Tensor> InitParams(const TrainConfig& cfg);

// Names that the ablation mask allows the optimizer to update.
std::vector<std::string> LearnableNames(Task task, Ablation ablation,
                                        const std::map<std::string, Tensor>& params);

}  // namespace audflow

#endif  // AUDFLOW_TRAIN_H_
