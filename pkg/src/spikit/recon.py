"""Reconstruction by cyclic deconvolution, plus compressed-trace interpolation."""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from .errors import BadCrop, IncompleteTrace, KernelZero, LengthMismatch, TooFewSamples
from .forward import SamplingPlan, VoltageTrace  # noqa: F401  (SamplingPlan re-exported)
from .mls import CyclicSMatrix

ANCHORS = ("top-left", "center")


def _nearest_fill(N: int, xp: np.ndarray, fp: np.ndarray, idx: np.ndarray) -> np.ndarray:
    pos = np.searchsorted(xp, idx, side="right")
    prev_i = (pos - 1) % xp.size
    next_i = pos % xp.size
    d_prev = (idx - xp[prev_i]) % N
    d_next = (xp[next_i] - idx) % N
    return np.where(d_prev <= d_next, fp[prev_i], fp[next_i])


def interpolate_trace(t: VoltageTrace) -> VoltageTrace:
    """Fill missing samples over the cyclic pattern axis (index N wraps to 1)."""
    if t.complete:
        return t
    measured = np.flatnonzero(~t.missing)
    if measured.size < 2:
        raise TooFewSamples(f"need at least 2 measured samples, have {measured.size}")
    N = t.N
    fp = t.samples[measured]
    holes = np.flatnonzero(t.missing)
    if t.plan.interpolation == "nearest":
        fill = _nearest_fill(N, measured, fp, holes)
    else:
        fill = np.interp(holes, measured, fp, period=N)
    samples = t.samples.copy()
    samples[holes] = fill
    return replace(t, samples=samples, missing=np.zeros(N, dtype=bool), interpolated=t.missing.copy())


def deconvolve(samples: np.ndarray, m: CyclicSMatrix, gain: float = 1.0) -> np.ndarray:
    """Vectorized image from a complete sample vector (inverse of ``ideal_samples``)."""
    kernel = m.kernel_spectrum
    if np.min(np.abs(kernel)) < 1e-6 * np.sqrt(m.N):
        raise KernelZero("first-row spectrum has a (near) zero; not a maximal-length row")
    spec = np.fft.rfft(samples) / (gain * kernel)
    return np.fft.irfft(np.conj(spec), n=m.N)


def reconstruct(t: VoltageTrace, m: CyclicSMatrix) -> np.ndarray:
    """Unclamped p x q image.  Clamp with ``np.clip(..., 0, 1)`` when exporting."""
    if t.N != m.N:
        raise LengthMismatch(f"trace has {t.N} samples, matrix has N={m.N}")
    if not t.complete:
        raise IncompleteTrace("trace has missing samples; run interpolate_trace first")
    return deconvolve(t.samples, m, t.model.gain).reshape(m.p, m.q)


def crop_active(img, active_w: int, active_h: int, anchor: str = "top-left") -> np.ndarray:
    """Cut the DMD active area (width x height) out of a reconstructed field."""
    x = np.asarray(img)
    h, w = x.shape[:2]
    if not (0 < active_w <= w and 0 < active_h <= h):
        raise BadCrop(f"cannot crop {w}x{h} to {active_w}x{active_h}")
    if anchor == "top-left":
        r0, c0 = 0, 0
    elif anchor == "center":
        r0, c0 = (h - active_h) // 2, (w - active_w) // 2
    else:
        raise BadCrop(f"anchor must be one of {ANCHORS}")
    return x[r0 : r0 + active_h, c0 : c0 + active_w].copy()
