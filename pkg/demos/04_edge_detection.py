"""Find edges by high-pass filtering the detector voltage.

Filtering the time trace is the same as filtering the image with a
matching spatial kernel, so a single RC stage in front of the ADC turns
the reconstruction into a gradient map.  Otsu's threshold then picks
the edges.
"""

from _common import OUT
from spikit import CyclicSMatrix, MeasurementModel, measure_full
from spikit.edges import FilterSpec, edge_maps
from spikit.fixtures import silhouette
from spikit.forward import block_average, fit_to_grid
from spikit.images import save_image

m = CyclicSMatrix.from_degree(16, 255, 257)
img = fit_to_grid(block_average(silhouette()[0], 3), *m.shape)
trace = measure_full(m, img, MeasurementModel(adc_bits=None))

for fc in (100.0, 300.0, 1000.0):
    spec = FilterSpec(fc)
    grad, edges = edge_maps(trace, m, spec)
    print(f"cutoff {fc:6.0f} Hz -> k_c {spec.pixel_cutoff(trace.dwell_T, m.N):6.0f}, "
          f"edge fraction {edges.mean():.3f}")
    save_image(grad / max(grad.max(), 1e-12), OUT / f"gradient_{fc:.0f}Hz.png")
    save_image(edges.astype(float), OUT / f"edges_{fc:.0f}Hz.png")
