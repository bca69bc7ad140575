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
// Batch CLI. Exit codes: 0 success, 1 usage error, 2 runtime error.

#include <cstdio>
#include <iostream>
#include <map>
#include <optional>

#include "CLI11.hpp"
#include "audflow/analysis.hpp"
#include "audflow/modelcheck.hpp"
#include "audflow/train.hpp"

namespace {

using namespace audflow;

CochlearParams CochlearFromCkpt(const std::string& ckpt_path) {
  if (ckpt_path.empty()) return CochlearParams::Init();
  const Checkpoint c = LoadCheckpoint(ckpt_path);
  CochlearParams p;
  p.alpha = c.tensors.at("cochlear.alpha");
  p.w = c.tensors.at("cochlear.w");
  p.tau = c.tensors.at("cochlear.tau");
  return p;
}

int RunSpectrogram(const std::string& in, const std::string& out,
                   const std::string& pgm, const std::string& ckpt) {
  const Waveform w = ReadWav(in);
  const Tensor sg = ComputeSpectrogram(w, CochlearFromCkpt(ckpt));
  WriteSpectrogramCsv(out, sg);
  if (!pgm.empty()) WriteSpectrogramPgm(pgm, sg);
  return 0;
}

int RunCortical(const std::string& in, const std::string& out,
                const std::string& init, uint64_t seed, const std::string& ckpt,
                const std::string& dump) {
  const Waveform w = ReadWav(in);
  const Tensor sg = ComputeSpectrogram(w, CochlearFromCkpt(ckpt));
  CorticalParams cp;
  if (!ckpt.empty()) {
    const Checkpoint c = LoadCheckpoint(ckpt);
    if (!c.tensors.count("cortical.cap_omega"))
      throw std::runtime_error("cortical: checkpoint has no cortical parameters");
    cp.cap_omega = c.tensors.at("cortical.cap_omega");
    cp.omega = c.tensors.at("cortical.omega");
  } else {
    cp = InitCortical(ParseCorticalInit(init), seed);
  }
  const std::vector<double> energies = FilterEnergies(sg, cp);
  std::ofstream f(out);
  if (!f) throw std::runtime_error("cortical: cannot open '" + out + "'");
  f << "filter,capital_omega_cpo,omega_hz,mean_sq_response\n";
  for (int i = 0; i < kNumStrf; ++i)
    f << i << "," << FormatSig(cp.cap_omega.data[i], 9) << ","
      << FormatSig(cp.omega.data[i], 9) << "," << FormatSig(energies[i], 9) << "\n";
  if (!dump.empty()) {
    Tape t;
    CorticalVars cv = MakeCorticalVars(t, cp, false);
    const Tensor& y = t.value(CorticalForward(t, t.Leaf(sg, false), cv));
    std::ofstream df(dump);
    if (!df) throw std::runtime_error("cortical: cannot open '" + dump + "'");
    df << "filter,channel,frame,value\n";
    const int64_t ch = y.shape[1], fr = y.shape[2];
    for (int64_t i = 0; i < y.shape[0]; ++i)
      for (int64_t k = 0; k < ch; ++k)
        for (int64_t n = 0; n < fr; ++n)
          df << i << "," << k << "," << n << ","
             << FormatSig(y.data[(i * ch + k) * fr + n], 9) << "\n";
  }
  return 0;
}

int RunTrain(const TrainConfig& cfg, const std::string& manifest_path,
             const std::string& noise_path, const std::string& eval_path,
             const std::string& resume_path) {
  const Manifest manifest = LoadManifest(manifest_path);
  std::optional<Manifest> noise, eval;
  if (!noise_path.empty()) noise = LoadManifest(noise_path);
  if (!eval_path.empty()) eval = LoadManifest(eval_path);
  std::optional<Checkpoint> resume;
  if (!resume_path.empty()) resume = LoadCheckpoint(resume_path);
  const TrainResult r =
      Train(cfg, manifest, noise ? &*noise : nullptr, eval ? &*eval : nullptr,
            resume ? &*resume : nullptr);
  if (r.aborted) {
    std::cerr << "train aborted: " << r.abort_message << "\n";
    return 2;
  }
  if (!r.log.empty())
    std::cout << "trained " << r.log.size() << " steps, final loss "
              << r.log.back().loss << "\n";
  return 0;
}

int RunEval(const std::string& ckpt_path, const std::string& manifest_path,
            const std::string& protocol, const std::string& out, int n,
            uint64_t seed, const std::string& noise_path) {
  const Checkpoint ckpt = LoadCheckpoint(ckpt_path);
  const Manifest manifest = LoadManifest(manifest_path);
  std::optional<Manifest> noise;
  if (!noise_path.empty()) noise = LoadManifest(noise_path);
  const EvalReport r =
      Evaluate(ckpt, manifest, protocol, n, seed, noise ? &*noise : nullptr);
  WriteEvalReportJson(out, ckpt, {r});
  std::cout << protocol << ": " << r.metric << " = " << r.mean << " +- " << r.ci95
            << " (n = " << r.n << ")";
  if (r.input_mean) std::cout << ", unprocessed mix = " << *r.input_mean;
  std::cout << "\n";
  return 0;
}

int RunGradcheckCmd(const std::string& scope, uint64_t seed, double tol) {
  ModelCheckConfig cfg;
  cfg.scope = scope;
  cfg.seed = seed;
  cfg.tol = tol;
  const ModelCheckSummary s = RunModelGradCheck(cfg);
  // Per-tensor aggregate table; individual failures listed afterwards.
  struct Agg {
    int64_t n = 0, failed = 0;
    double max_rel = 0.0;
  };
  std::map<std::string, Agg> by_param;
  for (const GradCheckEntry& e : s.report.entries) {
    Agg& a = by_param[e.param];
    ++a.n;
    if (!e.pass) ++a.failed;
    if (e.evaluable) a.max_rel = std::max(a.max_rel, e.rel_err);
  }
  std::printf("%-28s %8s %8s %12s %6s\n", "parameter", "checked", "failed",
              "max_rel_err", "status");
  for (const auto& [name, a] : by_param)
    std::printf("%-28s %8lld %8lld %12.3e %6s\n", name.c_str(),
                static_cast<long long>(a.n), static_cast<long long>(a.failed),
                a.max_rel, a.failed == 0 ? "pass" : "FAIL");
  int shown = 0;
  for (const GradCheckEntry& e : s.report.entries) {
    if (e.pass || shown >= 20) continue;
    std::printf("  fail %s[%lld]: analytic %.6e numeric %.6e rel %.3e%s\n",
                e.param.c_str(), static_cast<long long>(e.index), e.analytic,
                e.numeric, e.rel_err, e.evaluable ? "" : " (non-evaluable)");
    ++shown;
  }
  std::printf("checked %lld components (%lld frontend, %lld backend) in %.1f s: %s\n",
              static_cast<long long>(s.report.entries.size()),
              static_cast<long long>(s.n_frontend), static_cast<long long>(s.n_backend),
              s.seconds, s.all_pass ? "all pass" : "FAILURES");
  return s.all_pass ? 0 : 2;
}

int RunExportParams(const std::string& ckpt_path, const std::string& out) {
  const ParamReport r = ExportParams(LoadCheckpoint(ckpt_path));
  WriteParamReport(out, r);
  if (!r.notice.empty()) std::cout << "notice: " << r.notice << "\n";
  return 0;
}

int RunSynth(const std::string& kind, const std::string& out, uint64_t seed,
             double duration, double f0, int harmonics, double cap_omega,
             double omega, double amplitude) {
  if (kind == "pink") {
    WriteWav(out, GenPinkNoise(duration, seed));
  } else if (kind == "harmonic") {
    WriteWav(out, GenHarmonicComplex(f0, harmonics, duration));
  } else if (kind == "ripple") {
    WriteSpectrogramCsv(out, GenMovingRipple(cap_omega, omega, duration, amplitude));
  } else {
    throw std::runtime_error("synth: unknown kind '" + kind + "'");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"audflow: differentiable auditory frontend toolkit"};
  app.require_subcommand(1);

  std::string in, out, pgm, ckpt, dump, init = "log", manifest, noise_manifest,
                                       eval_manifest, resume, protocol, log_path,
                                       kind, scope = "all";
  uint64_t seed = 0;
  double tol = 1e-4, duration = 1.0, f0 = 200.0, cap_omega = 1.0, omega = 4.0,
         amplitude = 0.9, lr = 0.001, snr = 0.0;
  int harmonics = 8, n_samples = 100, batch = 4, n_classes = 0;
  long long steps = 2000, eval_every = 0;
  std::string task = "classify", ablation = "full";

  auto* sp = app.add_subcommand("spectrogram", "Auditory spectrogram of a WAV file");
  sp->add_option("--in", in, "input 16 kHz WAV")->required();
  sp->add_option("--out", out, "output CSV (frames x 129)")->required();
  sp->add_option("--pgm", pgm, "optional log-compressed PGM image");
  sp->add_option("--params", ckpt, "checkpoint supplying cochlear parameters");

  auto* co = app.add_subcommand("cortical", "Per-filter STRF response energies");
  co->add_option("--in", in, "input 16 kHz WAV")->required();
  co->add_option("--out", out, "output CSV")->required();
  co->add_option("--init", init, "cortical init when no --params (log|random)");
  co->add_option("--seed", seed, "random-init seed");
  co->add_option("--params", ckpt, "checkpoint supplying parameters");
  co->add_option("--dump", dump, "optional full 40x129xT tensor CSV");

  auto* tr = app.add_subcommand("train", "Train a task head plus the frontend");
  tr->add_option("--task", task, "classify|enhance")->required();
  tr->add_option("--ablation", ablation, "full|cortical|frozen|cnn");
  tr->add_option("--init", init, "cortical init (log|random)");
  tr->add_option("--manifest", manifest, "training manifest JSON")->required();
  tr->add_option("--noise-manifest", noise_manifest, "extra noise-role manifest");
  tr->add_option("--eval-manifest", eval_manifest, "held-out manifest for periodic eval");
  tr->add_option("--steps", steps, "optimizer steps");
  tr->add_option("--seed", seed, "run seed");
  tr->add_option("--out", out, "output checkpoint JSON")->required();
  tr->add_option("--log", log_path, "loss log CSV");
  tr->add_option("--lr", lr, "Adam learning rate");
  tr->add_option("--batch", batch, "examples per step");
  tr->add_option("--snr", snr, "enhance-task mixing SNR (dB)");
  tr->add_option("--n-classes", n_classes, "class count (default: from manifest)");
  tr->add_option("--eval-every", eval_every, "periodic eval interval (steps)");
  tr->add_option("--resume", resume, "checkpoint to continue from");

  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint under a protocol");
  ev->add_option("--ckpt", ckpt, "checkpoint JSON")->required();
  ev->add_option("--manifest", manifest, "evaluation manifest")->required();
  ev->add_option("--protocol", protocol, "clean|pink-3|pink0|pink3|enhance0db")
      ->required();
  ev->add_option("--out", out, "report JSON")->required();
  ev->add_option("--n", n_samples, "evaluation draws");
  ev->add_option("--seed", seed, "evaluation seed");
  ev->add_option("--noise-manifest", noise_manifest, "noise-role manifest");

  auto* gc = app.add_subcommand("gradcheck", "Finite-difference gradient check");
  gc->add_option("--scope", scope, "frontend|backend|all");
  gc->add_option("--seed", seed, "fixture seed");
  gc->add_option("--tol", tol, "relative-error tolerance");

  auto* ep = app.add_subcommand("export-params", "Learned-parameter CSV report");
  ep->add_option("--ckpt", ckpt, "checkpoint JSON")->required();
  ep->add_option("--out", out, "output CSV")->required();

  auto* sy = app.add_subcommand("synth", "Generate test stimuli");
  sy->add_option("--kind", kind, "pink|harmonic|ripple")->required();
  sy->add_option("--out", out, "output WAV (pink|harmonic) or CSV (ripple)")->required();
  sy->add_option("--seed", seed, "pink-noise seed");
  sy->add_option("--duration", duration, "seconds");
  sy->add_option("--f0", f0, "harmonic fundamental (Hz)");
  sy->add_option("--harmonics", harmonics, "harmonic count");
  sy->add_option("--cap-omega", cap_omega, "ripple spectral modulation (cyc/oct)");
  sy->add_option("--omega", omega, "ripple temporal modulation (Hz)");
  sy->add_option("--amplitude", amplitude, "ripple amplitude");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n" << app.help() << "\n";
    return 1;
  }

  try {
    if (sp->parsed()) return RunSpectrogram(in, out, pgm, ckpt);
    if (co->parsed()) return RunCortical(in, out, init, seed, ckpt, dump);
    if (tr->parsed()) {
      TrainConfig cfg;
      cfg.task = ParseTask(task);
      cfg.ablation = ParseAblation(ablation);
      cfg.cortical_init = ParseCorticalInit(init);
      cfg.seed = seed;
      cfg.steps = steps;
      cfg.batch = batch;
      cfg.adam.lr = lr;
      cfg.snr_db = snr;
      cfg.n_classes = n_classes;
      cfg.eval_every = eval_every;
      cfg.log_path = log_path;
      cfg.checkpoint_path = out;
      return RunTrain(cfg, manifest, noise_manifest, eval_manifest, resume);
    }
    if (ev->parsed())
      return RunEval(ckpt, manifest, protocol, out, n_samples, seed, noise_manifest);
    if (gc->parsed()) return RunGradcheckCmd(scope, seed, tol);
    if (ep->parsed()) return RunExportParams(ckpt, out);
    if (sy->parsed())
      return RunSynth(kind, out, seed, duration, f0, harmonics, cap_omega, omega,
                      amplitude);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
