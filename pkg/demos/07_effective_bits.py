"""Count how many distinct detector levels an image actually produces.

For an 8-bit scene every S-matrix row sums to an integer, so the number
of unique sums bounds the ADC depth worth paying for.  Finer patterns
collect more pixels per measurement and need more bits.
"""

from spikit import CyclicSMatrix
from spikit.fixtures import usaf_target
from spikit.forward import block_average, fit_to_grid
from spikit.metrics import effective_bits

usaf = usaf_target().image
for n, block, shape in ((10, 24, (31, 33)), (12, 12, (63, 65)), (14, 6, (127, 129)), (16, 3, (255, 257))):
    m = CyclicSMatrix.from_degree(n, *shape)
    count, bits = effective_bits(m, fit_to_grid(block_average(usaf, block), *shape))
    print(f"{shape[0]:>4} x {shape[1]:<4} {count:>6} levels = {bits:5.2f} bits")
