#!/usr/bin/env python3
# Copyright 2026 The MCIS Authors
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
"""Writes a synthetic stand-in for the airfoil self-noise table.

Same six tab-separated columns as the public file: frequency [Hz], angle of
attack [deg], chord length [m], free-stream velocity [m/s], suction-side
displacement thickness [m], scaled sound pressure level [dB].
"""

import argparse

import numpy as np


def generate(rows: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    freq = rng.choice([200, 250, 315, 400, 500, 630, 800, 1000, 1250, 1600, 2000,
                       2500, 3150, 4000, 5000, 6300, 8000, 10000, 12500, 16000], rows)
    angle = rng.choice([0.0, 1.5, 2.0, 3.0, 4.0, 5.4, 7.3, 9.9, 12.6, 15.4, 17.4, 22.2], rows)
    chord = rng.choice([0.0254, 0.0508, 0.1016, 0.1524, 0.2286, 0.3048], rows)
    velocity = rng.choice([31.7, 39.6, 55.5, 71.3], rows)
    thickness = (0.0004 + 0.0012 * chord / 0.3048) * np.exp(0.11 * angle) \
        * rng.lognormal(0.0, 0.15, rows)
    spl = (132.0
           - 4.0 * np.log10(freq / 1000.0) ** 2
           - 2.5 * np.log10(freq)
           - 12.0 * chord
           + 0.08 * velocity
           - 250.0 * thickness
           + 1.2 * np.sin(angle / 4.0)
           + rng.normal(0.0, 1.5, rows))
    return np.column_stack([freq, angle, chord, velocity, thickness, spl])


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--rows", type=int, default=1503)
    parser.add_argument("--seed", type=int, default=20260101)
    parser.add_argument("--out", default="data/airfoil_self_noise_synthetic.dat")
    args = parser.parse_args()
    table = generate(args.rows, args.seed)
    np.savetxt(args.out, table, delimiter="\t",
               fmt=["%d", "%.1f", "%.4f", "%.1f", "%.9f", "%.3f"])


if __name__ == "__main__":
    main()
