"""Maximal-length sequences and cyclic S-matrices.

A Fibonacci shift register of ``n`` stages is clocked ``2**n - 1`` times.
The output bit is the leading stage; the new trailing stage is the XOR of
the stages whose indices are the polynomial exponents below ``n``.  For
``x^20 + x^3 + 1`` that is ``s[0] ^ s[3]``.

The S-matrix of order ``N`` is never stored: row ``j`` (1-based) is the first
row rotated left by ``j - 1`` and every consumer works from the first row.

Vectorization contract, shared by every module: a ``p x q`` image maps to
index ``i = r * q + c`` (row-major, ``numpy.ravel`` order).
"""

from __future__ import annotations

import functools
import itertools
import struct
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import (
    BadFactorization,
    ConfigError,
    CorruptFile,
    IndexOutOfRange,
    IoFailure,
    NonPrimitive,
    UnsupportedDegree,
    ZeroSeed,
)

MIN_DEGREE = 2
MAX_DEGREE = 20

# Degrees 9-20 as published for cyclic S-matrix generation.  Lower degrees
# are found by search in :func:`find_primitive`.
PUBLISHED_TAPS = {
    9: (9, 4, 0),
    10: (10, 3, 0),
    11: (11, 2, 0),
    12: (12, 7, 4, 3, 0),
    13: (13, 4, 3, 1, 0),
    14: (14, 12, 11, 1, 0),
    15: (15, 1, 0),
    16: (16, 5, 3, 2, 0),
    17: (17, 3, 0),
    18: (18, 7, 0),
    19: (19, 6, 5, 1, 0),
    20: (20, 3, 0),
}


def _check_degree(n: int) -> None:
    if not MIN_DEGREE <= n <= MAX_DEGREE:
        raise UnsupportedDegree(f"degree must be in [{MIN_DEGREE}, {MAX_DEGREE}], got {n}")


@dataclass(frozen=True)
class PrimitivePolynomial:
    """Binary polynomial given by its set of nonzero exponents."""

    degree: int
    taps: frozenset

    def __post_init__(self):
        _check_degree(self.degree)
        taps = frozenset(int(t) for t in self.taps)
        object.__setattr__(self, "taps", taps)
        if self.degree not in taps or 0 not in taps:
            raise NonPrimitive(f"taps {sorted(taps)} must contain {self.degree} and 0")
        if min(taps) < 0 or max(taps) > self.degree:
            raise NonPrimitive(f"taps {sorted(taps)} outside [0, {self.degree}]")

    @classmethod
    def from_exponents(cls, *exponents: int) -> "PrimitivePolynomial":
        return cls(max(exponents), frozenset(exponents))

    @property
    def feedback_stages(self) -> tuple:
        """Register stages XORed into the feedback, ascending."""
        return tuple(sorted(t for t in self.taps if t != self.degree))

    def __str__(self) -> str:
        terms = []
        for e in sorted(self.taps, reverse=True):
            terms.append("1" if e == 0 else "x" if e == 1 else f"x^{e}")
        return " + ".join(terms)


@dataclass(frozen=True, eq=False)
class MlsSequence:
    bits: np.ndarray
    degree: int
    poly: PrimitivePolynomial | None = None

    def __post_init__(self):
        bits = np.ascontiguousarray(self.bits, dtype=np.uint8)
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    def __len__(self) -> int:
        return self.bits.size

    @property
    def length(self) -> int:
        return self.bits.size


def canonical_seed(n: int) -> np.ndarray:
    """Single 1 in the last stage."""
    seed = np.zeros(n, dtype=np.uint8)
    seed[-1] = 1
    return seed


def _prime_factors(n: int) -> list:
    out, d = [], 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


def _run_register(poly: PrimitivePolynomial, seed: np.ndarray, count: int) -> np.ndarray:
    """Return ``count + n`` bits b with b[t:t+n] the register state at step t."""
    n = poly.degree
    stages = poly.feedback_stages
    b = np.zeros(count + n, dtype=np.uint8)
    b[:n] = seed
    # b[t+n] depends on b[t+e] for e <= max stage, so blocks of this size
    # can be computed at once.
    block = n - max(stages)
    first, rest = stages[0], stages[1:]
    t = 0
    while t < count:
        m = min(block, count - t)
        acc = b[t + first : t + first + m].copy()
        for e in rest:
            acc ^= b[t + e : t + e + m]
        b[t + n : t + n + m] = acc
        t += m
    return b


def _has_full_period(b: np.ndarray, n: int, N: int) -> bool:
    seed = b[:n]
    if not np.array_equal(b[N : N + n], seed):
        return False
    # the state sequence is purely periodic, so the minimal period divides N;
    # it equals N iff no maximal proper divisor N/r already returns to the seed
    return not any(np.array_equal(b[N // r : N // r + n], seed) for r in _prime_factors(N))


def lfsr_sequence(poly: PrimitivePolynomial, seed=None) -> MlsSequence:
    """Generate one period of the register output.

    Raises NonPrimitive when the register state comes back to the seed in
    fewer than ``2**n - 1`` steps.
    """
    n = poly.degree
    _check_degree(n)
    seed = canonical_seed(n) if seed is None else np.asarray(seed, dtype=np.uint8)
    if seed.shape != (n,) or np.any(seed > 1):
        raise ConfigError(f"seed must be a binary vector of length {n}")
    if not seed.any():
        raise ZeroSeed("seed must not be all zeros")
    N = (1 << n) - 1
    b = _run_register(poly, seed, N)
    if not _has_full_period(b, n, N):
        raise NonPrimitive(f"{poly} does not generate period {N}")
    return MlsSequence(b[:N], n, poly)


def is_primitive(poly: PrimitivePolynomial) -> bool:
    try:
        lfsr_sequence(poly)
    except NonPrimitive:
        return False
    return True


def find_primitive(n: int) -> PrimitivePolynomial:
    """Lowest-weight, lexicographically first polynomial passing the period test."""
    _check_degree(n)
    middle = range(1, n)
    for k in range(0, n):
        for extra in itertools.combinations(middle, k):
            poly = PrimitivePolynomial(n, frozenset((n, 0, *extra)))
            if is_primitive(poly):
                return poly
    raise NonPrimitive(f"no primitive polynomial found for degree {n}")  # pragma: no cover


@functools.lru_cache(maxsize=None)
def primitive_polynomial(n: int) -> PrimitivePolynomial:
    _check_degree(n)
    if n in PUBLISHED_TAPS:
        return PrimitivePolynomial.from_exponents(*PUBLISHED_TAPS[n])
    return find_primitive(n)


def polynomial_table(validate: bool = True) -> list:
    """Primitive polynomials for every supported degree.

    With ``validate`` each entry is run through the period test (about a
    second in total, dominated by degree 20).
    """
    table = [primitive_polynomial(n) for n in range(MIN_DEGREE, MAX_DEGREE + 1)]
    if validate:
        for poly in table:
            lfsr_sequence(poly)
    return table


@functools.lru_cache(maxsize=8)
def mls(n: int) -> MlsSequence:
    """Canonical-seed sequence for degree ``n`` (cached)."""
    return lfsr_sequence(primitive_polynomial(n))


def factor_pairs(N: int) -> list:
    return [(p, N // p) for p in range(1, N + 1) if N % p == 0]


def near_square_shape(N: int) -> tuple:
    """Factor pair (p, q) with p <= q and the smallest aspect ratio."""
    return max((p, q) for p, q in factor_pairs(N) if p <= q)


@dataclass(frozen=True, eq=False)
class CyclicSMatrix:
    """Cyclic S-matrix defined by its first row and a p x q tiling."""

    first_row: MlsSequence
    p: int
    q: int
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.p < 1 or self.q < 1 or self.p * self.q != self.N:
            raise BadFactorization(f"{self.p} x {self.q} != N = {self.N}")

    @classmethod
    def from_degree(cls, n: int, p: int | None = None, q: int | None = None) -> "CyclicSMatrix":
        seq = mls(n)
        if p is None and q is None:
            p, q = near_square_shape(seq.length)
        elif p is None:
            p = seq.length // q
        elif q is None:
            q = seq.length // p
        return cls(seq, p, q)

    @property
    def N(self) -> int:
        return self.first_row.length

    @property
    def degree(self) -> int:
        return self.first_row.degree

    @property
    def shape(self) -> tuple:
        return (self.p, self.q)

    @cached_property
    def kernel_spectrum(self) -> np.ndarray:
        """Half spectrum (rfft) of the first row as float64."""
        return np.fft.rfft(self.first_row.bits.astype(np.float64))

    def row(self, j: int) -> np.ndarray:
        return smatrix_row(self, j)

    def pattern(self, j: int) -> np.ndarray:
        return tile_pattern(self, j)

    def dense(self, max_n: int = 4095) -> np.ndarray:
        """Explicit N x N matrix; only for small oracle checks."""
        if self.N > max_n:
            raise ConfigError(f"refusing to materialise a {self.N}x{self.N} matrix")
        idx = (np.arange(self.N)[:, None] + np.arange(self.N)[None, :]) % self.N
        return self.first_row.bits[idx].astype(np.float64)


def smatrix_row(m: CyclicSMatrix, j: int) -> np.ndarray:
    """Row ``j`` (1-based): first row rotated left by ``j - 1``."""
    if not 1 <= j <= m.N:
        raise IndexOutOfRange(f"pattern index {j} outside 1..{m.N}")
    return np.roll(m.first_row.bits, -(j - 1))


def tile_pattern(m: CyclicSMatrix, j: int) -> np.ndarray:
    """Row ``j`` laid out as a p x q DMD pattern under the row-major contract."""
    if m.p * m.q != m.N:
        raise BadFactorization(f"{m.p} x {m.q} != N = {m.N}")
    return smatrix_row(m, j).reshape(m.p, m.q)


def harwit_sloane_inverse(S: np.ndarray) -> np.ndarray:
    """Closed-form inverse of an S-matrix: (2/(N+1)) (2 S^T - J)."""
    N = S.shape[0]
    return (2.0 / (N + 1)) * (2.0 * S.T - 1.0)


# -- matrix file -------------------------------------------------------------
MATRIX_MAGIC = b"SPI1"
_MATRIX_HEADER = struct.Struct("<4sIII")


def write_matrix(path, m: CyclicSMatrix) -> None:
    """First row as little-endian packed bits after a 16-byte header."""
    payload = np.packbits(m.first_row.bits, bitorder="little").tobytes()
    try:
        with open(path, "wb") as fh:
            fh.write(_MATRIX_HEADER.pack(MATRIX_MAGIC, m.degree, m.p, m.q))
            fh.write(payload)
    except OSError as exc:
        raise IoFailure(str(exc)) from exc


def read_matrix(path) -> CyclicSMatrix:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    if len(raw) < _MATRIX_HEADER.size:
        raise CorruptFile(f"{path}: truncated header")
    magic, degree, p, q = _MATRIX_HEADER.unpack_from(raw)
    if magic != MATRIX_MAGIC:
        raise CorruptFile(f"{path}: bad magic {magic!r}")
    _check_degree(degree)
    N = (1 << degree) - 1
    payload = raw[_MATRIX_HEADER.size :]
    if len(payload) != (N + 7) // 8:
        raise CorruptFile(f"{path}: expected {(N + 7) // 8} payload bytes, got {len(payload)}")
    bits = np.unpackbits(np.frombuffer(payload, dtype=np.uint8), count=N, bitorder="little")
    return CyclicSMatrix(MlsSequence(bits, degree), p, q)
