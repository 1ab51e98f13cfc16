"""Three-LED colour fusion through the CIE 1931 observer.

Each LED spectrum is reduced to an XYZ tristimulus, mapped to linear sRGB
(D65), and every pixel becomes the intensity-weighted sum of the three LED
colours.  Out-of-gamut negatives are clipped, the image is normalised to
its maximum and gamma encoded.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

import numpy as np
from scipy.integrate import trapezoid

from .errors import BadGamma, ConfigError, GridMismatch, ShapeMismatch

GRID_NM = np.arange(380.0, 781.0, 5.0)
DEFAULT_FWHM_NM = 25.0
LED_WAVELENGTHS_NM = (780.0, 565.0, 450.0)  # red, green, blue channels

# IEC 61966-2-1 XYZ -> linear sRGB
XYZ_TO_SRGB = np.array(
    [
        [3.2406, -1.5372, -0.4986],
        [-0.9689, 1.8758, 0.0415],
        [0.0557, -0.2040, 1.0570],
    ]
)


@dataclass(frozen=True, eq=False)
class CmfTable:
    wavelength_nm: np.ndarray
    xbar: np.ndarray
    ybar: np.ndarray
    zbar: np.ndarray

    @property
    def matrix(self) -> np.ndarray:
        """(n, 3) stack of xbar, ybar, zbar."""
        return np.column_stack([self.xbar, self.ybar, self.zbar])

    def chromaticity_at(self, wavelength_nm: float) -> tuple:
        xyz = np.array([np.interp(wavelength_nm, self.wavelength_nm, c) for c in (self.xbar, self.ybar, self.zbar)])
        return tuple(xyz[:2] / xyz.sum())


@lru_cache(maxsize=1)
def cie1931() -> CmfTable:
    """CIE 1931 2-degree observer, 380-780 nm in 5 nm steps (bundled CSV)."""
    text = resources.files("spikit").joinpath("data/cie1931_2deg_5nm.csv").read_text()
    rows = [r for r in csv.reader(line for line in text.splitlines() if not line.startswith("#"))]
    data = np.array([[float(v) for v in r] for r in rows[1:]])
    return CmfTable(*(data[:, i].copy() for i in range(4)))


def gaussian_spectrum(center_nm: float, fwhm_nm: float = DEFAULT_FWHM_NM, grid=GRID_NM) -> np.ndarray:
    sigma = fwhm_nm / (2.0 * np.sqrt(2.0 * np.log(2.0)))
    return normalize_spectrum(np.exp(-0.5 * ((grid - center_nm) / sigma) ** 2), grid)


def normalize_spectrum(power, grid=GRID_NM) -> np.ndarray:
    p = np.asarray(power, dtype=np.float64)
    if np.any(p < 0):
        raise ConfigError("spectrum must be non-negative")
    area = trapezoid(p, grid)
    if not area > 0:
        raise ConfigError("spectrum has zero integral on the grid")
    return p / area


def load_spectrum_csv(path, grid=GRID_NM) -> np.ndarray:
    """Two-column CSV (wavelength_nm, power), resampled onto ``grid``, zero outside."""
    data = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            try:
                data.append((float(row[0]), float(row[1])))
            except (ValueError, IndexError):
                continue  # header, comment or blank line
    if len(data) < 2:
        raise ConfigError(f"{path}: need at least two (wavelength, power) rows")
    data = np.array(data)
    order = np.argsort(data[:, 0])
    return normalize_spectrum(np.interp(grid, data[order, 0], data[order, 1], left=0.0, right=0.0), grid)


@dataclass(frozen=True, eq=False)
class SpectralChannel:
    center_wavelength: float
    spectrum: np.ndarray  # on GRID_NM, unit integral
    image: np.ndarray | None = None
    gain: float = 1.0

    @classmethod
    def led(cls, center_nm: float, image=None, fwhm_nm: float = DEFAULT_FWHM_NM, gain: float = 1.0):
        return cls(center_nm, gaussian_spectrum(center_nm, fwhm_nm), image, gain)


def channel_to_xyz(ch: SpectralChannel, cmf: CmfTable | None = None) -> np.ndarray:
    """Trapezoidal integrals of P * xbar, P * ybar, P * zbar."""
    cmf = cmf or cie1931()
    p = np.asarray(ch.spectrum, dtype=np.float64)
    if p.shape != cmf.wavelength_nm.shape:
        raise GridMismatch(f"spectrum has {p.size} samples, CMF grid has {cmf.wavelength_nm.size}")
    return trapezoid(p[:, None] * cmf.matrix, cmf.wavelength_nm, axis=0)


def xyz_to_xy(xyz) -> tuple:
    xyz = np.asarray(xyz, dtype=np.float64)
    return tuple(xyz[:2] / xyz.sum())


def channel_rgb(ch: SpectralChannel, cmf: CmfTable | None = None) -> np.ndarray:
    """Linear sRGB of one LED (may have negative, out-of-gamut components)."""
    return ch.gain * (XYZ_TO_SRGB @ channel_to_xyz(ch, cmf))


def fuse_linear(channels, cmf: CmfTable | None = None) -> np.ndarray:
    """Per-pixel sum of intensity * LED colour, before clipping and gamma."""
    if len(channels) != 3:
        raise ShapeMismatch("need exactly three channels")
    images = [np.asarray(c.image, dtype=np.float64) for c in channels]
    if any(im.shape != images[0].shape for im in images):
        raise ShapeMismatch("channel images are not co-registered")
    colours = np.stack([channel_rgb(c, cmf) for c in channels])  # (3 channels, 3 rgb)
    return np.stack(images, axis=-1) @ colours


def gamma_encode(v, gamma: float = 2.2) -> np.ndarray:
    if not gamma > 0:
        raise BadGamma(f"gamma must be > 0, got {gamma}")
    return np.power(np.clip(v, 0.0, 1.0), 1.0 / gamma)


def gamma_decode(v, gamma: float = 2.2) -> np.ndarray:
    if not gamma > 0:
        raise BadGamma(f"gamma must be > 0, got {gamma}")
    return np.power(np.clip(v, 0.0, 1.0), gamma)


def fuse_rgb(channels, cmf: CmfTable | None = None, gamma: float = 2.2) -> np.ndarray:
    """Display-ready (h, w, 3) image in [0, 1]."""
    if not gamma > 0:
        raise BadGamma(f"gamma must be > 0, got {gamma}")
    rgb = np.clip(fuse_linear(channels, cmf), 0.0, None)
    peak = rgb.max() if rgb.size else 0.0
    if peak > 0:
        rgb = rgb / peak
    return gamma_encode(rgb, gamma)
