# Copyright 2026 The Audflow Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Differentiable biomimetic auditory frontend."""

from ._audflow import (
    FRAME_RATE,
    NUM_CHANNELS,
    NUM_STRF,
    SAMPLE_RATE,
    center_freqs,
    cortical,
    filterbank_response,
    gen_harmonic,
    gen_moving_ripple,
    gen_pink_noise,
    si_sdr,
    spectrogram,
    strf_kernel,
)

__all__ = [
    "FRAME_RATE",
    "NUM_CHANNELS",
    "NUM_STRF",
    "SAMPLE_RATE",
    "center_freqs",
    "cortical",
    "filterbank_response",
    "gen_harmonic",
    "gen_moving_ripple",
    "gen_pink_noise",
    "si_sdr",
    "spectrogram",
    "strf_kernel",
]
