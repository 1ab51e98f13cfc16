"""How detector size limits resolution in a Fourier-plane collection geometry.

The lens maps object frequencies onto the detector plane; a square
detector of side a passes only frequencies below a / (2 lambda f).
This script filters the USAF target with two detector sizes and reports
the finest group/element whose bars still show contrast.
"""

from dataclasses import replace

from _common import OUT
from spikit.fixtures import usaf_target
from spikit.images import save_image
from spikit.optics import ApertureModel, aperture_filter, resolvable_frequency

target = usaf_target()
base = ApertureModel()
print(f"Fourier-plane side for 2048 samples: {base.fourier_extent_um(2048):.1f} um")
for side in (170.0, 30.0):
    model = replace(base, detector_side_um=side)
    lp = resolvable_frequency(model, target)
    print(f"detector {side:5.0f} um: cutoff {model.cutoff_lp_mm:6.2f} lp/mm, resolves {lp:6.2f} lp/mm")
    save_image(aperture_filter(target.image, model), OUT / f"usaf_{side:.0f}um.png")
