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
// Python bindings for the main frontend operations. Arrays cross the
// boundary as copies; the C++ side stays the single source of numerics.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "audflow/analysis.hpp"
#include "audflow/backends.hpp"

namespace py = pybind11;

namespace {

using namespace audflow;

Waveform WaveFromArray(const py::array_t<double, py::array::c_style>& a) {
  if (a.ndim() != 1) throw std::invalid_argument("expected a 1-D float64 array");
  Waveform w;
  w.samples.assign(a.data(), a.data() + a.size());
  return w;
}

py::array_t<double> ArrayFromTensor(const Tensor& t) {
  std::vector<ssize_t> shape(t.shape.begin(), t.shape.end());
  py::array_t<double> out(shape);
  std::copy(t.data.begin(), t.data.end(), out.mutable_data());
  return out;
}

py::array_t<double> PySpectrogram(const py::array_t<double, py::array::c_style>& x) {
  return ArrayFromTensor(ComputeSpectrogram(WaveFromArray(x), CochlearParams::Init()));
}

py::array_t<double> PyCortical(const py::array_t<double, py::array::c_style>& x,
                               const std::string& init, uint64_t seed) {
  const Tensor sg = ComputeSpectrogram(WaveFromArray(x), CochlearParams::Init());
  const CorticalInit mode =
      init == "random" ? CorticalInit::kRandom : CorticalInit::kLogSpaced;
  CorticalParams cp = InitCortical(mode, seed);
  Tape t;
  CorticalVars cv = MakeCorticalVars(t, cp, false);
  return ArrayFromTensor(t.value(CorticalForward(t, t.Leaf(sg, false), cv)));
}

py::array_t<double> PyStrfKernel(double cap_omega, double omega) {
  return ArrayFromTensor(StrfKernelValues(cap_omega, omega));
}

py::array_t<double> PyFilterbank(int64_t signal_length) {
  return ArrayFromTensor(BuildFilterbank(signal_length).response);
}

double PySiSdr(const py::array_t<double, py::array::c_style>& est,
               const py::array_t<double, py::array::c_style>& target) {
  return SiSdr(WaveFromArray(est).samples, WaveFromArray(target).samples);
}

}  // namespace

PYBIND11_MODULE(_audflow, m) {
  m.doc() = "Differentiable biomimetic auditory frontend";
  m.def("spectrogram", &PySpectrogram, py::arg("samples"),
        "16 kHz waveform -> [129, frames] auditory spectrogram at 200 Hz");
  m.def("cortical", &PyCortical, py::arg("samples"), py::arg("init") = "log",
        py::arg("seed") = 0, "16 kHz waveform -> [40, 129, frames] STRF responses");
  m.def("strf_kernel", &PyStrfKernel, py::arg("cap_omega"), py::arg("omega"),
        "Gabor STRF kernel for (cycles/octave, Hz)");
  m.def("filterbank_response", &PyFilterbank, py::arg("signal_length"),
        "[129, bins] roex magnitude responses at the rFFT grid");
  m.def("center_freqs",
        [] { return BuildFilterbank(256).center_freqs_hz; },
        "the 129 channel center frequencies in Hz");
  m.def("gen_pink_noise",
        [](double duration_s, uint64_t seed) {
          Waveform w = GenPinkNoise(duration_s, seed);
          return ArrayFromTensor(Tensor::FromVector(std::move(w.samples)));
        },
        py::arg("duration_s"), py::arg("seed") = 0);
  m.def("gen_harmonic",
        [](double f0, int harmonics, double duration_s) {
          Waveform w = GenHarmonicComplex(f0, harmonics, duration_s);
          return ArrayFromTensor(Tensor::FromVector(std::move(w.samples)));
        },
        py::arg("f0"), py::arg("harmonics") = 8, py::arg("duration_s") = 1.0);
  m.def("gen_moving_ripple",
        [](double cap_omega, double omega, double duration_s, double amplitude) {
          return ArrayFromTensor(
              GenMovingRipple(cap_omega, omega, duration_s, amplitude));
        },
        py::arg("cap_omega"), py::arg("omega"), py::arg("duration_s") = 1.0,
        py::arg("amplitude") = 0.9);
  m.def("si_sdr", &PySiSdr, py::arg("estimate"), py::arg("target"),
        "scale-invariant SDR in dB");
  m.attr("SAMPLE_RATE") = kSampleRate;
  m.attr("FRAME_RATE") = kFrameRate;
  m.attr("NUM_CHANNELS") = kNumChannels;
  m.attr("NUM_STRF") = kNumStrf;
}
