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

#include "audflow/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace audflow {
namespace {

const Tensor* Find(const Checkpoint& c, const std::string& name) {
  auto it = c.tensors.find(name);
  return it == c.tensors.end() ? nullptr : &it->second;
}

const Tensor& Require(const Checkpoint& c, const std::string& name) {
  const Tensor* t = Find(c, name);
  if (t == nullptr)
    throw std::runtime_error("export_params: checkpoint missing '" + name + "'");
  return *t;
}

}  // namespace

std::string FormatSig(double v, int sig) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", sig, v);
  return buf;
}

ParamReport ExportParams(const Checkpoint& ckpt) {
  const Tensor& alpha = Require(ckpt, "cochlear.alpha");
  const Tensor& w = Require(ckpt, "cochlear.w");
  const Tensor& tau = Require(ckpt, "cochlear.tau");
  const Tensor* cap_omega = Find(ckpt, "cortical.cap_omega");
  const Tensor* omega = Find(ckpt, "cortical.omega");

  ParamReport report;
  report.has_cortical = cap_omega != nullptr && omega != nullptr;
  std::ostringstream out;
  out << "section,index,omega_hz,capital_omega_cpo,sign,alpha,value\n";
  if (report.has_cortical) {
    if (cap_omega->data.size() != static_cast<size_t>(kNumStrf) ||
        omega->data.size() != static_cast<size_t>(kNumStrf))
      throw std::runtime_error("export_params: cortical tensors are not [40]");
    for (int i = 0; i < kNumStrf; ++i) {
      const double o = omega->data[i];
      out << "cortical," << i << "," << FormatSig(o, 17) << ","
          << FormatSig(cap_omega->data[i], 17) << "," << (o < 0.0 ? -1 : 1)
          << ",,\n";
    }
  } else {
    report.notice = "cortical parameters absent (cnn ablation); section omitted";
    out << "notice,,,,,," << report.notice << "\n";
  }
  if (alpha.data.size() != static_cast<size_t>(kNumChannels))
    throw std::runtime_error("export_params: cochlear.alpha is not [129]");
  for (int k = 0; k < kNumChannels; ++k)
    out << "cochlear_alpha," << k << ",,,," << FormatSig(alpha.data[k], 17) << ",\n";
  if (w.data.size() != 2 || tau.data.size() != 1)
    throw std::runtime_error("export_params: cochlear w/tau have wrong sizes");
  out << "scalar,w0,,,,," << FormatSig(w.data[0], 17) << "\n";
  out << "scalar,w1,,,,," << FormatSig(w.data[1], 17) << "\n";
  out << "scalar,tau_ms,,,,," << FormatSig(tau.data[0], 17) << "\n";
  report.csv = out.str();
  return report;
}

void WriteParamReport(const std::string& path, const ParamReport& report) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("export_params: cannot open '" + path + "'");
  f << report.csv;
}

std::vector<double> FilterEnergies(const Tensor& sgram, const CorticalParams& params,
                                   const CorticalConfig& cfg) {
  Tape t;
  Var sg = t.Leaf(sgram, false);
  CorticalVars v = MakeCorticalVars(t, params, false);
  const Tensor& y = t.value(CorticalForward(t, sg, v, cfg));  // [40,129,T]
  const int64_t per = y.shape[1] * y.shape[2];
  std::vector<double> energies(kNumStrf, 0.0);
  for (int f = 0; f < kNumStrf; ++f) {
    double s = 0.0;
    for (int64_t i = 0; i < per; ++i) {
      const double x = y.data[f * per + i];
      s += x * x;
    }
    energies[f] = s / static_cast<double>(per);
  }
  return energies;
}

Tensor ModulationProfile(const CorticalParams& params,
                         const std::vector<ProbePoint>& probes, double duration_s,
                         double amplitude, const CorticalConfig& cfg) {
  if (probes.empty()) throw std::invalid_argument("modulation_profile: empty probe grid");
  Tensor out({kNumStrf, static_cast<int64_t>(probes.size())});
  for (size_t p = 0; p < probes.size(); ++p) {
    const Tensor ripple = GenMovingRipple(probes[p].cap_omega_cpo, probes[p].omega_hz,
                                          duration_s, amplitude);
    const std::vector<double> e = FilterEnergies(ripple, params, cfg);
    for (int f = 0; f < kNumStrf; ++f)
      out.data[f * probes.size() + p] = e[f];
  }
  return out;
}

std::string ModulationProfileCsv(const CorticalParams& params,
                                 const std::vector<ProbePoint>& probes,
                                 const Tensor& energies) {
  if (energies.shape.size() != 2 || energies.shape[0] != kNumStrf ||
      energies.shape[1] != static_cast<int64_t>(probes.size()))
    throw std::invalid_argument("modulation_profile: energies shape mismatch");
  std::ostringstream out;
  out << "filter_capital_omega_cpo,filter_omega_hz";
  for (const ProbePoint& p : probes)
    out << ",probe_" << FormatSig(p.cap_omega_cpo, 9) << "cpo_"
        << FormatSig(p.omega_hz, 9) << "hz";
  out << "\n";
  for (int f = 0; f < kNumStrf; ++f) {
    out << FormatSig(params.cap_omega.data[f], 9) << ","
        << FormatSig(params.omega.data[f], 9);
    for (size_t p = 0; p < probes.size(); ++p)
      out << "," << FormatSig(energies.data[f * probes.size() + p], 9);
    out << "\n";
  }
  return out.str();
}

Tensor ComputeSpectrogram(const Waveform& w, const CochlearParams& params) {
  const RoexFilterbank fb = BuildFilterbank(w.size());
  Tape t;
  CochlearVars v = MakeCochlearVars(t, params, false);
  return t.value(CochlearForward(t, w, fb, v));
}

void WriteSpectrogramCsv(const std::string& path, const Tensor& sgram) {
  if (sgram.shape.size() != 2 || sgram.shape[0] != kNumChannels)
    throw std::invalid_argument("spectrogram csv: expected [129, frames]");
  std::ofstream f(path);
  if (!f) throw std::runtime_error("spectrogram csv: cannot open '" + path + "'");
  const int64_t frames = sgram.shape[1];
  for (int64_t n = 0; n < frames; ++n) {
    for (int k = 0; k < kNumChannels; ++k) {
      if (k > 0) f << ",";
      f << FormatSig(sgram.data[static_cast<int64_t>(k) * frames + n], 9);
    }
    f << "\n";
  }
}

void WriteSpectrogramPgm(const std::string& path, const Tensor& sgram,
                         double floor_db) {
  if (sgram.shape.size() != 2 || sgram.shape[0] != kNumChannels)
    throw std::invalid_argument("spectrogram pgm: expected [129, frames]");
  if (floor_db >= 0.0) throw std::invalid_argument("spectrogram pgm: floor_db must be < 0");
  const int64_t frames = sgram.shape[1];
  double peak = 0.0;
  for (double v : sgram.data) peak = std::max(peak, v);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("spectrogram pgm: cannot open '" + path + "'");
  f << "P5\n" << frames << " " << kNumChannels << "\n255\n";
  for (int k = kNumChannels - 1; k >= 0; --k) {
    for (int64_t n = 0; n < frames; ++n) {
      double px = 0.0;
      const double v = sgram.data[static_cast<int64_t>(k) * frames + n];
      if (peak > 0.0 && v > 0.0) {
        const double db = 20.0 * std::log10(v / peak);
        px = std::clamp(1.0 - db / floor_db, 0.0, 1.0);
      }
      f.put(static_cast<char>(std::lround(255.0 * px)));
    }
  }
}

}  // namespace audflow
