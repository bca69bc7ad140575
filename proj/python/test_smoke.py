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
"""Smoke test for the _audflow extension. argv[1] is the build dir."""

import math
import sys

if len(sys.argv) > 1:
    sys.path.insert(0, sys.argv[1])

import _audflow as af  # noqa: E402


def main():
    assert af.SAMPLE_RATE == 16000
    assert af.NUM_CHANNELS == 129
    assert af.NUM_STRF == 40

    x = af.gen_pink_noise(1.0, seed=7)
    assert x.shape == (16000,)

    sg = af.spectrogram(x)
    assert sg.shape[0] == 129
    assert sg.shape[1] == 200
    assert sg.min() >= 0.0
    assert sg.max() > 0.0

    feats = af.cortical(x, init="log", seed=0)
    assert feats.shape == (40, 129, 200)
    assert all(math.isfinite(v) for v in feats.flat[:100])

    k = af.strf_kernel(2.0, 8.0)
    assert k.ndim == 2
    norm = math.sqrt(float((k * k).sum()))
    assert abs(norm - 1.0) < 1e-9

    fb = af.filterbank_response(1024)
    assert fb.shape == (129, 513)
    cf = af.center_freqs()
    assert len(cf) == 129
    assert abs(cf[0] - 180.0) < 1e-9

    h = af.gen_harmonic(220.0, harmonics=6, duration_s=0.25)
    mix = h + 0.1 * af.gen_pink_noise(0.25, seed=3)
    assert af.si_sdr(h, h) > 80.0
    assert af.si_sdr(mix, h) < af.si_sdr(h, h)

    rip = af.gen_moving_ripple(2.0, 8.0, duration_s=0.5)
    assert rip.shape == (129, 100)

    print("python smoke: ok")


if __name__ == "__main__":
    main()
