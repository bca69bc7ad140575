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

#include "audflow/modelcheck.hpp"

#include <Eigen/Dense>
#include <chrono>
#include <cmath>

#include "audflow/backends.hpp"
#include "audflow/rng.hpp"

namespace audflow {
namespace {

using MatRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<MatRM>;
using MapC = Eigen::Map<const MatRM>;

constexpr double kCheckDurationS = 0.25;

// Kernel truncation tight enough that every STRF fits a 50-frame input.
const CorticalConfig kCheckCortical{64, 24};

double StepFor(double theta, double rel_step) {
  return rel_step * std::max(1.0, std::abs(theta));
}

void CheckComponent(GradCheckReport& report, const std::string& name, int64_t index,
                    double analytic, double fp, double fm, double h, double tol,
                    double abs_tol) {
  GradCheckEntry e;
  e.param = name;
  e.index = index;
  e.analytic = analytic;
  if (!std::isfinite(fp) || !std::isfinite(fm)) {
    e.evaluable = false;
  } else {
    e.numeric = (fp - fm) / (2.0 * h);
    e.rel_err = std::abs(e.analytic - e.numeric) /
                std::max({std::abs(e.analytic), std::abs(e.numeric), 1e-12});
    e.pass = e.rel_err < tol || std::abs(e.analytic - e.numeric) <= abs_tol;
  }
  if (!e.pass) {
    report.all_pass = false;
    ++report.num_failed;
  }
  report.entries.push_back(std::move(e));
}

// ---------------------------------------------------------------------
// Fixtures.

struct Fixture {
  Waveform wave;             // classify input (pink noise)
  std::vector<int> labels;   // random frame labels
  Waveform enh_target;       // harmonic complex
  Waveform enh_mix;          // target + pink at 0 dB
  RoexFilterbank fb;
  FrontendParams frontend;
  ClassifierNet cls;
  EnhancerNet enh;
};

Fixture MakeFixture(const ModelCheckConfig& cfg) {
  Fixture f;
  f.wave = GenPinkNoise(kCheckDurationS, cfg.seed + 11);
  Rng rng(cfg.seed + 13);
  const int64_t frames = f.wave.size() / kFrameHop;
  f.labels.resize(frames);
  for (int64_t i = 0; i < frames; ++i)
    f.labels[i] = static_cast<int>(rng.UniformInt(cfg.n_classes));
  f.enh_target = GenHarmonicComplex(200.0, 8, kCheckDurationS);
  f.enh_mix = MixAtSnr(f.enh_target, GenPinkNoise(kCheckDurationS, cfg.seed + 17), 0.0);
  f.fb = BuildFilterbank(f.wave.size());
  f.frontend.cochlear = CochlearParams::Init();
  f.frontend.cortical = InitCortical(CorticalInit::kRandom, cfg.seed + 19);
  f.cls = ClassifierNet::Init(cfg.n_classes, cfg.seed + 23);
  f.enh = EnhancerNet::Init(cfg.seed + 29);
  return f;
}

// ---------------------------------------------------------------------
// Frontend scope: full-model re-evaluation per perturbed component.

double ClassifyLossValue(const Fixture& f, const FrontendParams& fp) {
  Tape t;
  FrontendVars fv = MakeFrontendVars(t, fp, false, false);
  Var features = FrontendForward(t, f.wave, f.fb, fv, kCheckCortical);
  ClassifierVars cv = MakeClassifierVars(t, f.cls, false);
  Var loss = CrossEntropy(t, ClassifierForward(t, features, cv), f.labels);
  return t.value(loss).data[0];
}

void CheckFrontend(const ModelCheckConfig& cfg, const Fixture& f,
                   ModelCheckSummary& out) {
  // Analytic gradients from one differentiated pass.
  Tape t;
  FrontendVars fv = MakeFrontendVars(t, f.frontend, true, true);
  Var features = FrontendForward(t, f.wave, f.fb, fv, kCheckCortical);
  ClassifierVars cv = MakeClassifierVars(t, f.cls, false);
  Var loss = CrossEntropy(t, ClassifierForward(t, features, cv), f.labels);
  t.Backward(loss);
  struct Item {
    const char* name;
    Var var;
    const Tensor* tensor;
  };
  FrontendParams work = f.frontend;
  const Item items[] = {
      {"frontend/cochlear.alpha", fv.coch.alpha, &work.cochlear.alpha},
      {"frontend/cochlear.w", fv.coch.w, &work.cochlear.w},
      {"frontend/cochlear.tau", fv.coch.tau, &work.cochlear.tau},
      {"frontend/cortical.cap_omega", fv.cort.cap_omega, &work.cortical.cap_omega},
      {"frontend/cortical.omega", fv.cort.omega, &work.cortical.omega},
  };
  for (const Item& it : items) {
    const Tensor& g = t.grad(it.var);
    Tensor& p = const_cast<Tensor&>(*it.tensor);
    for (int64_t i = 0; i < p.size(); ++i) {
      const double orig = p.data[i];
      const double h = StepFor(orig, cfg.rel_step);
      p.data[i] = orig + h;
      const double fp = ClassifyLossValue(f, work);
      p.data[i] = orig - h;
      const double fm = ClassifyLossValue(f, work);
      p.data[i] = orig;
      CheckComponent(out.report, it.name, i, g.data[i], fp, fm, h, cfg.tol,
                     cfg.abs_tol);
      ++out.n_frontend;
    }
  }
}

// ---------------------------------------------------------------------
// Backend scope: staged recompute.

struct Stage {
  Tensor w, b;
  int64_t cin = 0, cout = 0, kh = 0, kw = 0, h = 0, wd = 0;
  int64_t krows = 0, hw = 0;
  std::vector<double> col;  // im2col of the stage input
  Tensor pre;               // conv output before GeLU
};

Stage MakeStage(const Tensor& in, const Tensor& w, const Tensor& b) {
  Stage s;
  s.w = w;
  s.b = b;
  s.cin = in.shape[0];
  s.h = in.shape[1];
  s.wd = in.shape[2];
  s.cout = w.shape[0];
  s.kh = w.shape[2];
  s.kw = w.shape[3];
  s.krows = s.cin * s.kh * s.kw;
  s.hw = s.h * s.wd;
  s.col.resize(s.krows * s.hw);
  convdetail::Im2Col(in.data.data(), s.cin, s.h, s.wd, s.kh, s.kw, s.col.data());
  s.pre = Tensor({s.cout, s.h, s.wd});
  MapM pm(s.pre.data.data(), s.cout, s.hw);
  pm = MapC(w.data.data(), s.cout, s.krows) * MapC(s.col.data(), s.krows, s.hw);
  for (int64_t c = 0; c < s.cout; ++c) pm.row(c).array() += b.data[c];
  return s;
}

Tensor GeluValue(const Tensor& x) {
  Tape t;
  return t.value(Gelu(t, t.Leaf(x, false)));
}

// Replaces output row |o| of s.pre with the conv row under (w, b).
Tensor PerturbedPre(const Stage& s, const Tensor& w, const Tensor& b, int64_t o) {
  Tensor pre = s.pre;
  MapM(pre.data.data() + o * s.hw, 1, s.hw) =
      MapC(w.data.data() + o * s.krows, 1, s.krows) * MapC(s.col.data(), s.krows, s.hw);
  MapM(pre.data.data() + o * s.hw, 1, s.hw).array() += b.data[o];
  return pre;
}

// Finishes the classifier from stage k's pre-activation.
double ClassifyTail(const std::vector<Stage>& stages, size_t k, const Tensor& pre_k,
                    const Tensor& fc_w, const Tensor& fc_b,
                    const std::vector<int>& labels) {
  Tape t;
  Var h = Gelu(t, t.Leaf(pre_k, false));
  for (size_t j = k + 1; j < stages.size(); ++j)
    h = Gelu(t, Conv2D(t, h, t.Leaf(stages[j].w, false), t.Leaf(stages[j].b, false)));
  Var pooled = MeanAxis(t, h, 1);
  Var logits = Transpose2D(
      t, Affine(t, t.Leaf(fc_w, false), pooled, t.Leaf(fc_b, false)));
  return t.value(CrossEntropy(t, logits, labels)).data[0];
}

double ClassifyFcTail(const Tensor& pooled, const Tensor& fc_w, const Tensor& fc_b,
                      const std::vector<int>& labels) {
  Tape t;
  Var logits = Transpose2D(t, Affine(t, t.Leaf(fc_w, false), t.Leaf(pooled, false),
                                     t.Leaf(fc_b, false)));
  return t.value(CrossEntropy(t, logits, labels)).data[0];
}

struct EnhanceContext {
  Tensor spec_re, spec_im;  // STFT of the mix, [T, 129]
  int64_t win = 0, hop = 0, n = 0;
  Tensor target;
};

double EnhanceMaskTail(Tape& t, Var mask, const EnhanceContext& ctx) {
  StftSpec masked;
  masked.re = Mul(t, mask, t.Leaf(ctx.spec_re, false));
  masked.im = Mul(t, mask, t.Leaf(ctx.spec_im, false));
  masked.win = ctx.win;
  masked.hop = ctx.hop;
  masked.n = ctx.n;
  Var est = Istft(t, masked);
  return t.value(EnhancementLoss(t, est, t.Leaf(ctx.target, false))).data[0];
}

double EnhanceTail(const std::vector<Stage>& stages, size_t k, const Tensor& pre_k,
                   const Tensor& fc_w, const Tensor& fc_b, const EnhanceContext& ctx) {
  Tape t;
  Var h = Gelu(t, t.Leaf(pre_k, false));
  for (size_t j = k + 1; j < stages.size(); ++j)
    h = Gelu(t, Conv2D(t, h, t.Leaf(stages[j].w, false), t.Leaf(stages[j].b, false)));
  const int64_t frames = t.value(h).shape[2];
  Var flat = Reshape(t, h, {kNumChannels, frames});
  Var projected = Affine(t, t.Leaf(fc_w, false), flat, t.Leaf(fc_b, false));
  Var mask = Sigmoid(t, Transpose2D(t, projected));
  return EnhanceMaskTail(t, mask, ctx);
}

double EnhanceFcTail(const Tensor& flat, const Tensor& fc_w, const Tensor& fc_b,
                     const EnhanceContext& ctx) {
  Tape t;
  Var projected = Affine(t, t.Leaf(fc_w, false), t.Leaf(flat, false),
                         t.Leaf(fc_b, false));
  Var mask = Sigmoid(t, Transpose2D(t, projected));
  return EnhanceMaskTail(t, mask, ctx);
}

// Stage-by-stage FD over conv weights/biases plus the head, against the
// analytic gradient map. |tail| finishes the loss from (stage index, pre);
// |fc_tail| finishes it from the cached head input.
void CheckBackendStages(
    const ModelCheckConfig& cfg, const std::string& prefix,
    std::vector<Stage>& stages, Tensor& fc_w, Tensor& fc_b,
    const Tensor& head_input, const std::map<std::string, const Tensor*>& grads,
    const std::function<double(size_t, const Tensor&)>& tail,
    const std::function<double(const Tensor&, const Tensor&)>& fc_tail,
    ModelCheckSummary& out) {
  for (size_t k = 0; k < stages.size(); ++k) {
    Stage& s = stages[k];
    const std::string wname = prefix + "conv" + std::to_string(k + 1) + "_w";
    const std::string bname = prefix + "conv" + std::to_string(k + 1) + "_b";
    const Tensor& gw = *grads.at(wname);
    const Tensor& gb = *grads.at(bname);
    for (int64_t i = 0; i < s.w.size(); ++i) {
      const int64_t o = i / s.krows;
      const double orig = s.w.data[i];
      const double h = StepFor(orig, cfg.rel_step);
      s.w.data[i] = orig + h;
      const double fp = tail(k, PerturbedPre(s, s.w, s.b, o));
      s.w.data[i] = orig - h;
      const double fm = tail(k, PerturbedPre(s, s.w, s.b, o));
      s.w.data[i] = orig;
      CheckComponent(out.report, wname, i, gw.data[i], fp, fm, h, cfg.tol, cfg.abs_tol);
      ++out.n_backend;
    }
    for (int64_t o = 0; o < s.b.size(); ++o) {
      const double orig = s.b.data[o];
      const double h = StepFor(orig, cfg.rel_step);
      s.b.data[o] = orig + h;
      const double fp = tail(k, PerturbedPre(s, s.w, s.b, o));
      s.b.data[o] = orig - h;
      const double fm = tail(k, PerturbedPre(s, s.w, s.b, o));
      s.b.data[o] = orig;
      CheckComponent(out.report, bname, o, gb.data[o], fp, fm, h, cfg.tol, cfg.abs_tol);
      ++out.n_backend;
    }
  }
  const Tensor& gfw = *grads.at(prefix + "fc_w");
  for (int64_t i = 0; i < fc_w.size(); ++i) {
    const double orig = fc_w.data[i];
    const double h = StepFor(orig, cfg.rel_step);
    fc_w.data[i] = orig + h;
    const double fp = fc_tail(fc_w, fc_b);
    fc_w.data[i] = orig - h;
    const double fm = fc_tail(fc_w, fc_b);
    fc_w.data[i] = orig;
    CheckComponent(out.report, prefix + "fc_w", i, gfw.data[i], fp, fm, h, cfg.tol,
                   cfg.abs_tol);
    ++out.n_backend;
  }
  const Tensor& gfb = *grads.at(prefix + "fc_b");
  for (int64_t i = 0; i < fc_b.size(); ++i) {
    const double orig = fc_b.data[i];
    const double h = StepFor(orig, cfg.rel_step);
    fc_b.data[i] = orig + h;
    const double fp = fc_tail(fc_w, fc_b);
    fc_b.data[i] = orig - h;
    const double fm = fc_tail(fc_w, fc_b);
    fc_b.data[i] = orig;
    CheckComponent(out.report, prefix + "fc_b", i, gfb.data[i], fp, fm, h, cfg.tol,
                   cfg.abs_tol);
    ++out.n_backend;
  }
  (void)head_input;
}

void CheckClassifierBackend(const ModelCheckConfig& cfg, const Fixture& f,
                            ModelCheckSummary& out) {
  // Frozen-frontend features and analytic gradients.
  Tensor features;
  std::map<std::string, Tensor> analytic;
  {
    Tape t;
    FrontendVars fv = MakeFrontendVars(t, f.frontend, false, false);
    Var feats = FrontendForward(t, f.wave, f.fb, fv, kCheckCortical);
    ClassifierVars cv = MakeClassifierVars(t, f.cls, true);
    Var loss = CrossEntropy(t, ClassifierForward(t, feats, cv), f.labels);
    t.Backward(loss);
    features = t.value(feats);
    analytic["classify/conv1_w"] = t.grad(cv.w1);
    analytic["classify/conv1_b"] = t.grad(cv.b1);
    analytic["classify/conv2_w"] = t.grad(cv.w2);
    analytic["classify/conv2_b"] = t.grad(cv.b2);
    analytic["classify/conv3_w"] = t.grad(cv.w3);
    analytic["classify/conv3_b"] = t.grad(cv.b3);
    analytic["classify/fc_w"] = t.grad(cv.head_w);
    analytic["classify/fc_b"] = t.grad(cv.head_b);
  }

  std::vector<Stage> stages;
  stages.push_back(MakeStage(features, f.cls.w1, f.cls.b1));
  Tensor h1 = GeluValue(stages[0].pre);
  stages.push_back(MakeStage(h1, f.cls.w2, f.cls.b2));
  Tensor h2 = GeluValue(stages[1].pre);
  stages.push_back(MakeStage(h2, f.cls.w3, f.cls.b3));
  Tensor h3 = GeluValue(stages[2].pre);
  // Frequency-mean pool of h3 feeds the head.
  Tensor pooled({h3.shape[0], h3.shape[2]});
  {
    Tape t;
    pooled = t.value(MeanAxis(t, t.Leaf(h3, false), 1));
  }
  Tensor fc_w = f.cls.head_w, fc_b = f.cls.head_b;

  std::map<std::string, const Tensor*> grads;
  for (const auto& [name, g] : analytic) grads[name] = &g;
  CheckBackendStages(
      cfg, "classify/", stages, fc_w, fc_b, pooled, grads,
      [&](size_t k, const Tensor& pre) {
        return ClassifyTail(stages, k, pre, fc_w, fc_b, f.labels);
      },
      [&](const Tensor& w, const Tensor& b) {
        return ClassifyFcTail(pooled, w, b, f.labels);
      },
      out);
}

void CheckEnhancerBackend(const ModelCheckConfig& cfg, const Fixture& f,
                          ModelCheckSummary& out) {
  Tensor features;
  EnhanceContext ctx;
  ctx.target = Tensor::FromVector(f.enh_target.samples);
  std::map<std::string, Tensor> analytic;
  {
    Tape t;
    FrontendVars fv = MakeFrontendVars(t, f.frontend, false, false);
    Var feats = FrontendForward(t, f.enh_mix, f.fb, fv, kCheckCortical);
    EnhancerVars ev = MakeEnhancerVars(t, f.enh, true);
    Var mask = EnhancerMask(t, feats, ev);
    Var mixv = t.Leaf(Tensor::FromVector(f.enh_mix.samples), false);
    StftSpec spec = Stft(t, mixv, kEnhanceWin, kEnhanceHop);
    StftSpec masked{Mul(t, mask, spec.re), Mul(t, mask, spec.im), spec.win,
                    spec.hop, spec.n};
    Var est = Istft(t, masked);
    Var loss = EnhancementLoss(t, est, t.Leaf(ctx.target, false));
    t.Backward(loss);
    features = t.value(feats);
    ctx.spec_re = t.value(spec.re);
    ctx.spec_im = t.value(spec.im);
    ctx.win = spec.win;
    ctx.hop = spec.hop;
    ctx.n = spec.n;
    analytic["enhance/conv1_w"] = t.grad(ev.w1);
    analytic["enhance/conv1_b"] = t.grad(ev.b1);
    analytic["enhance/conv2_w"] = t.grad(ev.w2);
    analytic["enhance/conv2_b"] = t.grad(ev.b2);
    analytic["enhance/conv3_w"] = t.grad(ev.w3);
    analytic["enhance/conv3_b"] = t.grad(ev.b3);
    analytic["enhance/conv4_w"] = t.grad(ev.w4);
    analytic["enhance/conv4_b"] = t.grad(ev.b4);
    analytic["enhance/fc_w"] = t.grad(ev.head_w);
    analytic["enhance/fc_b"] = t.grad(ev.head_b);
  }

  std::vector<Stage> stages;
  stages.push_back(MakeStage(features, f.enh.w1, f.enh.b1));
  Tensor h1 = GeluValue(stages[0].pre);
  stages.push_back(MakeStage(h1, f.enh.w2, f.enh.b2));
  Tensor h2 = GeluValue(stages[1].pre);
  stages.push_back(MakeStage(h2, f.enh.w3, f.enh.b3));
  Tensor h3 = GeluValue(stages[2].pre);
  stages.push_back(MakeStage(h3, f.enh.w4, f.enh.b4));
  Tensor h4 = GeluValue(stages[3].pre);
  Tensor flat = h4;
  flat.shape = {kNumChannels, h4.shape[2]};
  Tensor fc_w = f.enh.head_w, fc_b = f.enh.head_b;

  std::map<std::string, const Tensor*> grads;
  for (const auto& [name, g] : analytic) grads[name] = &g;
  CheckBackendStages(
      cfg, "enhance/", stages, fc_w, fc_b, flat, grads,
      [&](size_t k, const Tensor& pre) {
        return EnhanceTail(stages, k, pre, fc_w, fc_b, ctx);
      },
      [&](const Tensor& w, const Tensor& b) { return EnhanceFcTail(flat, w, b, ctx); },
      out);
}

}  // namespace

ModelCheckSummary RunModelGradCheck(const ModelCheckConfig& cfg) {
  if (cfg.scope != "frontend" && cfg.scope != "backend" && cfg.scope != "all")
    throw std::invalid_argument("gradcheck: scope must be frontend|backend|all, got '" +
                                cfg.scope + "'");
  const auto start = std::chrono::steady_clock::now();
  Fixture f = MakeFixture(cfg);
  ModelCheckSummary out;
  if (cfg.scope == "frontend" || cfg.scope == "all") CheckFrontend(cfg, f, out);
  if (cfg.scope == "backend" || cfg.scope == "all") {
    CheckClassifierBackend(cfg, f, out);
    CheckEnhancerBackend(cfg, f, out);
  }
  out.all_pass = out.report.all_pass;
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                    .count();
  return out;
}

}  // namespace audflow
