"""Edge extraction by high-pass filtering the voltage sequence.

Filtering the trace with H(f) is the same as filtering the image spectrum
with H_X(k) = H(k / (T N)): the DFT of a piecewise-constant voltage train
is the DFT of its samples times T sinc(fT) exp(j pi f T), and that prefactor
multiplies both sides of the identity, so neither is modelled here.

Because samples are a correlation (not a convolution) with the image, the
identity holds for the index-reversed image vector.  On the row-major
image itself the filter therefore acts as conj(H_X(k)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.signal import lfilter

from .errors import ConfigError, CutoffOutOfRange, IncompleteTrace, ShapeMismatch
from .forward import VoltageTrace
from .mls import CyclicSMatrix
from .recon import reconstruct

REALIZATIONS = ("dft", "time-domain")
OTSU_SCALE = 0.7


@dataclass(frozen=True)
class FilterSpec:
    cutoff_hz: float
    order: int = 1
    realization: str = "dft"

    def __post_init__(self):
        if not self.cutoff_hz > 0:
            raise CutoffOutOfRange(f"cutoff must be > 0 Hz, got {self.cutoff_hz}")
        if self.order < 1:
            raise ConfigError(f"order must be >= 1, got {self.order}")
        if self.realization not in REALIZATIONS:
            raise ConfigError(f"realization must be one of {REALIZATIONS}")
        if self.realization == "time-domain" and self.order != 1:
            raise ConfigError("time-domain realization is first order only")

    def pixel_cutoff(self, T: float, N: int) -> float:
        """k_c = f_c T N, the cutoff in DFT bins of the pattern axis."""
        return self.cutoff_hz * T * N

    def check(self, T: float, N: int) -> float:
        kc = self.pixel_cutoff(T, N)
        if not 1 <= kc < N / 2:
            raise CutoffOutOfRange(f"k_c = {kc:.4g} outside [1, {N / 2})")
        return kc


def transfer(f, cutoff_hz: float, order: int = 1) -> np.ndarray:
    """First-order high-pass (j f/f_c)/(1 + j f/f_c), cascaded ``order`` times."""
    s = 1j * np.asarray(f, dtype=np.float64) / cutoff_hz
    return (s / (1.0 + s)) ** order


def bin_response(spec: FilterSpec, T: float, N: int) -> np.ndarray:
    """H(k / (T N)) on the non-negative rfft bins k = 0 .. N//2."""
    k = np.arange(N // 2 + 1)
    return transfer(k / (T * N), spec.cutoff_hz, spec.order)


def _time_domain_hpf(v: np.ndarray, spec: FilterSpec, T: float) -> np.ndarray:
    # Analog RC high-pass driven by the held voltage, in periodic steady
    # state (the pattern sequence repeats), averaged over each dwell window.
    N = v.size
    tau = 1.0 / (2 * math.pi * spec.cutoff_hz)
    a = math.exp(-T / tau)
    gain = (tau / T) * (1.0 - a)
    # low-pass state at the start of window k: u[k+1] = a u[k] + (1 - a) v[k]
    powers = a ** np.arange(N - 1, -1, -1)
    u0 = (1.0 - a) * np.dot(powers, v) / (1.0 - a**N)
    w, _ = lfilter([1.0 - a], [1.0, -a], v, zi=[a * u0])
    u = np.concatenate(([u0], w[:-1]))
    return gain * (v - u)


def hpf_trace(t: VoltageTrace, spec: FilterSpec) -> VoltageTrace:
    """High-pass filter a complete trace (interpolate compressed traces first)."""
    if not t.complete:
        raise IncompleteTrace("hpf_trace needs a complete trace")
    spec.check(t.dwell_T, t.N)
    if spec.realization == "dft":
        H = bin_response(spec, t.dwell_T, t.N)
        out = np.fft.irfft(H * np.fft.rfft(t.samples), n=t.N)
    else:
        out = _time_domain_hpf(t.samples, spec, t.dwell_T)
    return replace(t, samples=out)


def spatial_hpf(img, spec: FilterSpec, T: float, N: int) -> np.ndarray:
    """Image-domain counterpart of :func:`hpf_trace` (1-D over the vectorization)."""
    x = np.asarray(img, dtype=np.float64)
    if x.size != N:
        raise ShapeMismatch(f"image has {x.size} pixels, expected N={N}")
    spec.check(T, N)
    H = bin_response(spec, T, N)
    return np.fft.irfft(np.conj(H) * np.fft.rfft(x.ravel()), n=N).reshape(x.shape)


# -- Otsu --------------------------------------------------------------------
def between_class_variance(hist) -> np.ndarray:
    """sigma_B^2(t) for splits {0..t} | {t+1..}, t = 0 .. len(hist) - 1."""
    h = np.asarray(hist, dtype=np.float64)
    total = h.sum()
    if total <= 0:
        return np.zeros(h.size)
    p = h / total
    levels = np.arange(h.size)
    w0 = np.cumsum(p)
    mu = np.cumsum(p * levels)
    mu_t = mu[-1]
    denom = w0 * (1.0 - w0)
    with np.errstate(divide="ignore", invalid="ignore"):
        var = (mu_t * w0 - mu) ** 2 / denom
    var[~(denom > 1e-15)] = 0.0
    return var


def otsu_index(hist) -> int:
    """Histogram bin index maximising the between-class variance (first on ties)."""
    return int(np.argmax(between_class_variance(hist)))


def otsu_threshold(values, nbins: int = 256) -> float:
    """Otsu level in [0, 1] for data already normalised to [0, 1]."""
    hist, _ = np.histogram(np.clip(values, 0.0, 1.0), bins=nbins, range=(0.0, 1.0))
    return (otsu_index(hist) + 1) / nbins


def threshold_edges(grad, scale: float = OTSU_SCALE, nbins: int = 256) -> np.ndarray:
    """Binary edge map from a signed gradient image.

    The magnitude is normalised by its global maximum and Otsu's level is
    taken from its histogram.  Each polarity is binarised at ``scale``
    times that level and the two maps are OR-ed.  When every magnitude falls
    in one histogram bin (a flat input) the map is empty.
    """
    g = np.asarray(grad, dtype=np.float64)
    peak = np.max(np.abs(g)) if g.size else 0.0
    if not peak > 0:
        return np.zeros(g.shape, dtype=bool)
    hist, _ = np.histogram(np.abs(g) / peak, bins=nbins, range=(0.0, 1.0))
    if np.count_nonzero(hist) < 2:
        return np.zeros(g.shape, dtype=bool)  # degenerate histogram: nothing to separate
    level = scale * (otsu_index(hist) + 1) / nbins
    rising = g / peak > level
    falling = -g / peak > level
    return rising | falling


def edge_maps(t: VoltageTrace, m: CyclicSMatrix, spec: FilterSpec, scale: float = OTSU_SCALE) -> tuple:
    """(gradient image, binary edge map) for a complete trace."""
    grad = reconstruct(hpf_trace(t, spec), m)
    return grad, threshold_edges(grad, scale)
