"""Image-quality metrics and the ADC effective-bits analysis."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.ndimage import correlate1d

from .errors import NumericalError, ShapeMismatch, TooSmall
from .forward import check_image
from .mls import CyclicSMatrix

PSNR_CAP_DB = 99.0
SSIM_WIN = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


@dataclass(frozen=True)
class QualityReport:
    psnr_db: float
    ssim: float | None  # None when the image is smaller than the window
    n_unique_levels: int | None = None
    effective_bits: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def _pair(a, b) -> tuple:
    x = np.asarray(a, dtype=np.float64)
    y = np.asarray(b, dtype=np.float64)
    if x.shape != y.shape:
        raise ShapeMismatch(f"shapes differ: {x.shape} vs {y.shape}")
    return x, y


def psnr(a, b, peak: float = 1.0, cap: float = PSNR_CAP_DB) -> float:
    """10 log10(peak^2 / MSE) in dB; identical images give ``cap``."""
    x, y = _pair(a, b)
    mse = float(np.mean((x - y) ** 2)) if x.size else 0.0
    if mse == 0.0:
        return cap
    return min(10.0 * math.log10(peak * peak / mse), cap)


def gaussian_window(win_size: int = SSIM_WIN, sigma: float = SSIM_SIGMA) -> np.ndarray:
    """Normalised 1-D Gaussian taps; the 2-D window is their outer product."""
    r = (win_size - 1) / 2
    g = np.exp(-0.5 * ((np.arange(win_size) - r) / sigma) ** 2)
    return g / g.sum()


def _local_mean(x: np.ndarray, g: np.ndarray) -> np.ndarray:
    r = g.size // 2
    out = correlate1d(correlate1d(x, g, axis=0, mode="constant"), g, axis=1, mode="constant")
    return out[r : x.shape[0] - r, r : x.shape[1] - r]


def ssim_map(a, b, win_size: int = SSIM_WIN, sigma: float = SSIM_SIGMA, K1: float = SSIM_K1,
             K2: float = SSIM_K2, data_range: float = 1.0) -> np.ndarray:
    """Local SSIM over every window position that fits entirely inside the image."""
    x, y = _pair(a, b)
    if win_size < 1 or win_size % 2 == 0:
        raise TooSmall(f"window size must be odd and positive, got {win_size}")
    if x.ndim != 2 or min(x.shape) < win_size:
        raise TooSmall(f"need a 2-D image of at least {win_size}x{win_size}, got {x.shape}")
    g = gaussian_window(win_size, sigma)
    mx, my = _local_mean(x, g), _local_mean(y, g)
    vx = _local_mean(x * x, g) - mx * mx
    vy = _local_mean(y * y, g) - my * my
    cxy = _local_mean(x * y, g) - mx * my
    C1 = (K1 * data_range) ** 2
    C2 = (K2 * data_range) ** 2
    return ((2 * mx * my + C1) * (2 * cxy + C2)) / ((mx * mx + my * my + C1) * (vx + vy + C2))


def ssim(a, b, win_size: int = SSIM_WIN, sigma: float = SSIM_SIGMA, K1: float = SSIM_K1,
         K2: float = SSIM_K2, data_range: float = 1.0) -> float:
    """Mean local SSIM (Gaussian window, population statistics).

    The mean is clipped to [-1, 1] to absorb last-bit rounding.
    """
    return float(np.clip(np.mean(ssim_map(a, b, win_size, sigma, K1, K2, data_range)), -1.0, 1.0))


def effective_bits(m: CyclicSMatrix, img, quantum: int = 255) -> tuple:
    """(number of distinct ideal samples, log2 of that number).

    Pixels are snapped to integer multiples of ``1 / quantum`` so every
    ideal sample ``S_j . X`` is an exact integer count of quanta; the FFT
    result is rounded back to those integers before counting.
    """
    x = check_image(m, img)
    levels = np.round(x * quantum)
    ints = np.fft.irfft(m.kernel_spectrum * np.conj(np.fft.rfft(levels.ravel())), n=m.N)
    P = np.round(ints)
    if np.max(np.abs(ints - P), initial=0.0) >= 0.25:
        raise NumericalError("FFT inner products drifted too far to round to integers")
    n = int(np.unique(P).size)
    return n, math.log2(n)


def quality_report(reference, test, m: CyclicSMatrix | None = None, peak: float = 1.0,
                   win_size: int = SSIM_WIN) -> QualityReport:
    """PSNR and SSIM of ``test`` against ``reference``; bits of ``reference`` when ``m`` is given."""
    x, y = _pair(reference, test)
    n = bits = None
    if m is not None:
        n, bits = effective_bits(m, x)
    s = ssim(x, y, win_size=win_size) if min(x.shape) >= win_size else None
    return QualityReport(psnr(x, y, peak), s, n, bits)
