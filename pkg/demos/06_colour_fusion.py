"""Combine three monochrome reconstructions into an sRGB picture.

Each LED channel is weighted by its spectrum through the CIE 1931
observer, summed in linear XYZ, converted to sRGB and gamma-encoded
once at the end.
"""

import numpy as np

from _common import OUT
from spikit.color import SpectralChannel, cie1931, channel_to_xyz, fuse_rgb, xyz_to_xy
from spikit.fixtures import silhouette
from spikit.forward import block_average
from spikit.images import save_rgb

img = block_average(silhouette()[0], 4)
ramp = np.linspace(0, 1, img.shape[1])[None, :] * np.ones_like(img)
cmf = cie1931()

channels = [SpectralChannel.led(780, img), SpectralChannel.led(565, ramp), SpectralChannel.led(450, 1 - img)]
for ch in channels:
    x, y = xyz_to_xy(channel_to_xyz(SpectralChannel.led(ch.center_wavelength), cmf))
    print(f"{ch.center_wavelength:.0f} nm LED chromaticity ({x:.3f}, {y:.3f})")

rgb = fuse_rgb(channels, cmf)
save_rgb(rgb, OUT / "fused.png")
print(f"fused image {rgb.shape} written; the 780 nm channel is almost invisible")
