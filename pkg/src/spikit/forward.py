"""Measurement chain: pattern inner products, detector noise, ADC.

Sample ``j`` (0-based) is the inner product of pattern ``j + 1`` with the
vectorized image,

    V[j] = gain * sum_i c[(i + j) % N] * x[i],

a circular cross-correlation of the first row ``c`` with ``x``.  Written as a
convolution it is ``c (*) y`` with ``y[i] = x[-i % N]``, the index-reversed
image.  In the frequency domain ``V^ = C^ * conj(X^)`` for real ``x``, which
is what both :func:`ideal_samples` and the deconvolution in ``recon`` use.
"""

from __future__ import annotations

import math
import struct
import zlib
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import (
    ConfigError,
    CorruptFile,
    IoFailure,
    NonFiniteInput,
    ShapeMismatch,
)
from .mls import CyclicSMatrix

DMD_MAX_FRAME_RATE_HZ = 22_727.0
INTERPOLATIONS = ("linear", "nearest")


def rng_stream(seed: int, name: str) -> np.random.Generator:
    """Independent generator for a named stage, derived from one root seed."""
    key = zlib.crc32(name.encode("utf-8"))
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(key,)))


@dataclass(frozen=True)
class SamplingPlan:
    """Measure every ``stride``-th pattern, starting at pattern 1.

    The measured 1-based pattern indices are ``i = 1 (mod stride)``; missing
    samples are filled by ``interpolation`` over the cyclic pattern axis.
    """

    N: int
    stride: int = 1
    interpolation: str = "linear"

    def __post_init__(self):
        if self.N < 1:
            raise ConfigError(f"N must be positive, got {self.N}")
        if self.stride < 1:
            raise ConfigError(f"stride must be >= 1, got {self.stride}")
        if self.interpolation not in INTERPOLATIONS:
            raise ConfigError(f"interpolation must be one of {INTERPOLATIONS}")

    @property
    def measured_indices(self) -> np.ndarray:
        """0-based sample positions that are measured."""
        return np.arange(0, self.N, self.stride)

    @property
    def measured_count(self) -> int:
        return -(-self.N // self.stride)

    @property
    def declared_rate(self) -> float:
        return self.measured_count / self.N

    def missing_mask(self) -> np.ndarray:
        mask = np.ones(self.N, dtype=bool)
        mask[:: self.stride] = False
        return mask


@dataclass(frozen=True)
class MeasurementModel:
    gain: float = 1.0
    noise_sigma: float = 0.0
    adc_bits: int | None = 14
    adc_full_scale: float | None = None  # None -> 1.05 x max ideal sample
    dwell_T: float = 1.0 / DMD_MAX_FRAME_RATE_HZ
    rng_seed: int = 0

    def __post_init__(self):
        if not (self.noise_sigma >= 0 and math.isfinite(self.noise_sigma)):
            raise ConfigError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        if self.adc_bits is not None and not 1 <= self.adc_bits <= 24:
            raise ConfigError(f"adc_bits must be in [1, 24], got {self.adc_bits}")
        if not self.dwell_T > 0:
            raise ConfigError(f"dwell_T must be > 0, got {self.dwell_T}")
        if self.adc_full_scale is not None and not self.adc_full_scale > 0:
            raise ConfigError(f"adc_full_scale must be > 0, got {self.adc_full_scale}")
        if not (math.isfinite(self.gain) and self.gain != 0):
            raise ConfigError(f"gain must be finite and nonzero, got {self.gain}")


@dataclass
class VoltageTrace:
    samples: np.ndarray
    missing: np.ndarray
    dwell_T: float
    plan: SamplingPlan
    model: MeasurementModel = field(default_factory=MeasurementModel)
    interpolated: np.ndarray | None = None  # filled positions after interpolation

    @property
    def N(self) -> int:
        return self.samples.size

    @property
    def complete(self) -> bool:
        return not self.missing.any()

    @property
    def measured_count(self) -> int:
        return int(self.samples.size - self.missing.sum())


def noise_sigma_from_density(current_density: float, bandwidth_hz: float, transimpedance: float) -> float:
    """Voltage noise sigma for a white current-noise density behind a TIA.

    ``current_density`` in A/sqrt(Hz), ``transimpedance`` in V/A.
    """
    return current_density * math.sqrt(bandwidth_hz) * transimpedance


def check_image(m: CyclicSMatrix, img) -> np.ndarray:
    x = np.asarray(img, dtype=np.float64)
    if x.shape != m.shape:
        raise ShapeMismatch(f"image shape {x.shape} does not match matrix {m.shape}")
    if not np.all(np.isfinite(x)):
        raise NonFiniteInput("image contains NaN or inf")
    return x


def ideal_samples(m: CyclicSMatrix, img, gain: float = 1.0) -> np.ndarray:
    """Noiseless samples gain * (S x) via one real FFT round trip."""
    x = check_image(m, img).ravel()
    spec = m.kernel_spectrum * np.conj(np.fft.rfft(x))
    return gain * np.fft.irfft(spec, n=m.N)


def quantize(samples: np.ndarray, bits: int, full_scale: float) -> np.ndarray:
    """Unipolar ADC: codes 0 .. 2**bits - 1 with LSB = full_scale / 2**bits."""
    lsb = full_scale / (1 << bits)
    codes = np.clip(np.round(samples / lsb), 0, (1 << bits) - 1)
    return codes * lsb


def effective_full_scale(model: MeasurementModel, ideal: np.ndarray) -> float:
    if model.adc_full_scale is not None:
        return model.adc_full_scale
    peak = float(np.max(np.abs(ideal))) if ideal.size else 0.0
    return 1.05 * peak if peak > 0 else 1.0


def _acquire(m: CyclicSMatrix, img, model: MeasurementModel, plan: SamplingPlan) -> VoltageTrace:
    ideal = ideal_samples(m, img, model.gain)
    v = ideal
    if model.noise_sigma > 0:
        rng = rng_stream(model.rng_seed, "noise")
        v = v + rng.normal(0.0, model.noise_sigma, size=v.shape)
    if model.adc_bits is not None:
        fs = effective_full_scale(model, ideal)
        v = quantize(v, model.adc_bits, fs)
        model = replace(model, adc_full_scale=fs)
    missing = plan.missing_mask()
    v = np.where(missing, 0.0, v)
    return VoltageTrace(v, missing, model.dwell_T, plan, model)


def measure_full(m: CyclicSMatrix, img, model: MeasurementModel | None = None) -> VoltageTrace:
    """Measure every pattern.  The returned model has the ADC full scale resolved."""
    return _acquire(m, img, model or MeasurementModel(), SamplingPlan(m.N))


def measure_planned(
    m: CyclicSMatrix, img, model: MeasurementModel | None = None, plan: SamplingPlan | None = None
) -> VoltageTrace:
    """Measure only the patterns selected by ``plan``; the rest are flagged missing.

    Noise is drawn for the full sequence so the measured samples equal the
    corresponding samples of :func:`measure_full` under the same seed.
    """
    plan = plan or SamplingPlan(m.N)
    if plan.N != m.N:
        raise ShapeMismatch(f"plan is for N={plan.N}, matrix has N={m.N}")
    return _acquire(m, img, model or MeasurementModel(), plan)


def acquisition_time(plan: SamplingPlan, frame_rate_hz: float = DMD_MAX_FRAME_RATE_HZ,
                     overhead_factor: float = 1.0) -> tuple:
    """(pattern_time_s, total_time_s) for displaying the measured patterns."""
    if not frame_rate_hz > 0:
        raise ConfigError("frame_rate_hz must be > 0")
    pattern = plan.measured_count / frame_rate_hz
    return pattern, pattern * overhead_factor


def block_average(img, factor: int) -> np.ndarray:
    """Average non-overlapping ``factor x factor`` blocks (trailing rows/cols dropped)."""
    x = np.asarray(img, dtype=np.float64)
    if factor == 1:
        return x.copy()
    h, w = (x.shape[0] // factor) * factor, (x.shape[1] // factor) * factor
    return x[:h, :w].reshape(h // factor, factor, w // factor, factor).mean(axis=(1, 3))


def fit_to_grid(img, p: int, q: int) -> np.ndarray:
    """Place ``img`` top-left on a p x q zero field, cropping any overhang."""
    x = np.asarray(img, dtype=np.float64)
    out = np.zeros((p, q))
    h, w = min(p, x.shape[0]), min(q, x.shape[1])
    out[:h, :w] = x[:h, :w]
    return out


# -- trace file --------------------------------------------------------------
TRACE_MAGIC = b"SPIV"
_TRACE_HEADER = struct.Struct("<4sIdIQ")


def write_trace(path, trace: VoltageTrace) -> None:
    """Header, float64 samples, then one uint8 missing flag per sample."""
    bits = trace.model.adc_bits or 0
    try:
        with open(path, "wb") as fh:
            fh.write(_TRACE_HEADER.pack(TRACE_MAGIC, trace.N, trace.dwell_T, bits, trace.model.rng_seed))
            fh.write(np.asarray(trace.samples, dtype="<f8").tobytes())
            fh.write(np.asarray(trace.missing, dtype=np.uint8).tobytes())
    except OSError as exc:
        raise IoFailure(str(exc)) from exc


def _infer_stride(missing: np.ndarray) -> int:
    measured = np.flatnonzero(~missing)
    if measured.size < 2:
        return max(missing.size, 1)
    return int(measured[1] - measured[0])


def read_trace(path, interpolation: str = "linear") -> VoltageTrace:
    """Inverse of :func:`write_trace`; the stride is inferred from the flags."""
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    hs = _TRACE_HEADER.size
    if len(raw) < hs:
        raise CorruptFile(f"{path}: truncated header")
    magic, N, dwell_T, bits, seed = _TRACE_HEADER.unpack_from(raw)
    if magic != TRACE_MAGIC:
        raise CorruptFile(f"{path}: bad magic {magic!r}")
    if len(raw) != hs + 9 * N:
        raise CorruptFile(f"{path}: expected {hs + 9 * N} bytes, got {len(raw)}")
    samples = np.frombuffer(raw, dtype="<f8", count=N, offset=hs).astype(np.float64)
    flags = np.frombuffer(raw, dtype=np.uint8, count=N, offset=hs + 8 * N)
    if np.any(flags > 1):
        raise CorruptFile(f"{path}: missing flags must be 0 or 1")
    missing = flags.astype(bool)
    plan = SamplingPlan(N, _infer_stride(missing), interpolation)
    model = MeasurementModel(adc_bits=bits or None, dwell_T=dwell_T, rng_seed=seed)
    return VoltageTrace(samples, missing, dwell_T, plan, model)
