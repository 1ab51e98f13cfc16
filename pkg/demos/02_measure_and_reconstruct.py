"""Simulate a single-pixel acquisition and invert it with FFTs.

The detector sees one voltage per pattern.  With a cyclic S-matrix the
whole measurement is a circular correlation, so reconstruction costs two
FFTs regardless of how large N gets.
"""

import time

import numpy as np

from _common import OUT
from spikit import CyclicSMatrix, MeasurementModel, measure_full, reconstruct
from spikit.fixtures import silhouette
from spikit.forward import block_average, fit_to_grid
from spikit.images import save_image
from spikit.metrics import psnr

m = CyclicSMatrix.from_degree(16, 255, 257)
truth = fit_to_grid(block_average(silhouette()[0], 3), *m.shape)

for label, model in [
    ("ideal", MeasurementModel(adc_bits=None)),
    ("14-bit ADC + noise", MeasurementModel(gain=1 / m.N, noise_sigma=2e-4, adc_bits=14, rng_seed=1)),
]:
    trace = measure_full(m, truth, model)
    t0 = time.perf_counter()
    img = reconstruct(trace, m)
    ms = (time.perf_counter() - t0) * 1e3
    print(f"{label:>20}: PSNR {psnr(truth, np.clip(img, 0, 1)):6.2f} dB in {ms:.1f} ms")
    save_image(np.clip(img, 0, 1), OUT / f"kangaroo_{label.split()[0]}.png")
