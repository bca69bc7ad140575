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
// Interpretability exports: learned-parameter CSV reports,
// modulation-selectivity profiles against moving-ripple probes, and
// spectrogram dumps (CSV and PGM) for external plotting.

#ifndef AUDFLOW_ANALYSIS_H_
#define AUDFLOW_ANALYSIS_H_

#include <string>
#include <vector>

#include "audflow/checkpoint.hpp"
#include "audflow/cochlear.hpp"
#include "audflow/cortical.hpp"
#include "audflow/signal.hpp"

namespace audflow {

// Learned parameters as one CSV. Columns:
//   section,index,omega_hz,capital_omega_cpo,sign,alpha,value
// Rows: "cortical" (index, omega_hz, capital_omega_cpo, sign),
// "cochlear_alpha" (index = channel, alpha), "scalar" (index in
// {w0, w1, tau_ms}, value). Values are copied verbatim with 17 significant
// digits so the report is lossless w.r.t. the checkpoint. When the
// checkpoint has no cortical parameters (cnn ablation) the cortical
// section is replaced by a "notice" row.
struct ParamReport {
  std::string csv;
  bool has_cortical = false;
  std::string notice;
};

ParamReport ExportParams(const Checkpoint& ckpt);
void WriteParamReport(const std::string& path, const ParamReport& report);

struct ProbePoint {
  double cap_omega_cpo = 0.0;
  double omega_hz = 0.0;
};

// Mean squared filter response of every STRF to every moving-ripple
// probe: [n_filters, n_probes]. Pure function of (params, probes).
Tensor ModulationProfile(const CorticalParams& params,
                         const std::vector<ProbePoint>& probes,
                         double duration_s = 1.0, double amplitude = 0.9,
                         const CorticalConfig& cfg = {});

// CSV: one row per filter; first two columns are the filter's own
// (capital_omega_cpo, omega_hz), then one energy column per probe.
std::string ModulationProfileCsv(const CorticalParams& params,
                                 const std::vector<ProbePoint>& probes,
                                 const Tensor& energies);

// Per-filter mean squared response to an arbitrary spectrogram.
std::vector<double> FilterEnergies(const Tensor& sgram, const CorticalParams& params,
                                   const CorticalConfig& cfg = {});

// Non-tape forward pass of the cochlear stage, for exports.
Tensor ComputeSpectrogram(const Waveform& w, const CochlearParams& params);

// Frames as rows, 129 columns, 9 significant digits.
void WriteSpectrogramCsv(const std::string& path, const Tensor& sgram);

// 8-bit PGM, log-compressed: dB relative to the per-file maximum, floor at
// |floor_db|, mapped to 0..255. Frequency runs bottom-up.
void WriteSpectrogramPgm(const std::string& path, const Tensor& sgram,
                         double floor_db = -80.0);

// Shared formatting helper: shortest decimal with |sig| significant digits.
std::string FormatSig(double v, int sig);

}  // namespace audflow

#endif  // AUDFLOW_ANALYSIS_H_
