"""Generate a maximal-length sequence and fold it into DMD patterns.

A cyclic S-matrix is fully described by one binary row; every other
pattern is a cyclic shift of it.  This script prints the register
polynomial, checks the two-valued autocorrelation and saves the first
three patterns as images.
"""

import numpy as np

from _common import OUT
from spikit import CyclicSMatrix
from spikit.mls import primitive_polynomial
from spikit.images import save_image

n = 10
m = CyclicSMatrix.from_degree(n)  # near-square 31 x 33
print(f"polynomial for degree {n}: {primitive_polynomial(n)}")
print(f"N = {m.N}, pattern shape {m.shape}, ones per row {int(m.row(1).sum())}")

s = 1 - 2 * m.row(1).astype(int)
ac = np.real(np.fft.ifft(np.abs(np.fft.fft(s)) ** 2)).round().astype(int)
print(f"autocorrelation: peak {ac[0]}, off-peak values {sorted(set(ac[1:].tolist()))}")

for j in (1, 2, 3):
    save_image(m.pattern(j).astype(float), OUT / f"pattern_{j}.png")
print(f"patterns written to {OUT}")
