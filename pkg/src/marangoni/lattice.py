"""Square and hexagonal Fourier lattices with Hermitian coefficient fields.

A lattice point is an integer combination gamma = n1*k1 + n2*k2 of the
generators.  Fields store one complex 2-vector (h-component, theta-component)
per retained lattice point; points beyond the truncation distance are treated
as zero.  Products of fields in physical space become convolutions of the
coefficient maps.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.signal import fftconvolve

from .errors import DomainError, UsageError

SQUARE = "square"
HEXAGONAL = "hexagonal"

_SQRT3 = math.sqrt(3.0)


@dataclass(frozen=True)
class LatticeSpec:
    """Geometry of the dual lattice: kind, critical wave number, truncation.

    Square generators are k1 = k*(1,0), k2 = k*(0,1); hexagonal generators
    are k1 = k*(1,0), k2 = (k*/2)(-1,sqrt(3)), so that k3 := -k1-k2 also has
    modulus k*.  ``truncation`` is the maximal lattice distance retained,
    where the distance is the l1 word length normalised so that every
    generator (including k3 on the hexagonal lattice) has distance 1.
    """

    kind: str
    k_star: float
    truncation: int = 8

    def __post_init__(self):
        if self.kind not in (SQUARE, HEXAGONAL):
            raise UsageError(f"unknown lattice kind {self.kind!r}")
        if self.k_star <= 0:
            raise DomainError("k_star must be positive")
        if self.truncation < 1:
            raise DomainError("truncation must be a positive integer")

    @cached_property
    def generators(self) -> np.ndarray:
        """Rows are the generators k1, k2."""
        k = self.k_star
        if self.kind == SQUARE:
            return np.array([[k, 0.0], [0.0, k]])
        return np.array([[k, 0.0], [-0.5 * k, 0.5 * _SQRT3 * k]])

    def distance(self, index: tuple[int, int]) -> int:
        """Normalised l1 lattice distance from the origin."""
        n1, n2 = index
        if self.kind == SQUARE:
            return abs(n1) + abs(n2)
        # On the hexagonal lattice k3 = -k1-k2 is a unit step as well, which
        # collapses the word length to max(|n1|, |n2|, |n1-n2|).
        return max(abs(n1), abs(n2), abs(n1 - n2))

    def wavevector(self, index: tuple[int, int]) -> np.ndarray:
        if self.distance(index) > self.truncation:
            raise DomainError(f"index {index} outside truncation {self.truncation}")
        n1, n2 = index
        g = self.generators
        return n1 * g[0] + n2 * g[1]

    @cached_property
    def mask(self) -> np.ndarray:
        """Boolean (2T+1, 2T+1) array of indices within the truncation."""
        T = self.truncation
        n = np.arange(-T, T + 1)
        n1, n2 = np.meshgrid(n, n, indexing="ij")
        if self.kind == SQUARE:
            d = np.abs(n1) + np.abs(n2)
        else:
            d = np.maximum(np.maximum(np.abs(n1), np.abs(n2)), np.abs(n1 - n2))
        return d <= T

    @cached_property
    def wavevector_grid(self) -> tuple[np.ndarray, np.ndarray]:
        """(gx, gy) real wavevector components per index, zero off-mask."""
        T = self.truncation
        n = np.arange(-T, T + 1)
        n1, n2 = np.meshgrid(n, n, indexing="ij")
        g = self.generators
        gx = n1 * g[0, 0] + n2 * g[1, 0]
        gy = n1 * g[0, 1] + n2 * g[1, 1]
        gx = np.where(self.mask, gx, 0.0)
        gy = np.where(self.mask, gy, 0.0)
        return gx, gy

    def indices(self):
        """All retained indices, in deterministic lexicographic order."""
        T = self.truncation
        for n1 in range(-T, T + 1):
            for n2 in range(-T, T + 1):
                if self.distance((n1, n2)) <= T:
                    yield (n1, n2)


def wavevector(spec: LatticeSpec, index: tuple[int, int]) -> np.ndarray:
    return spec.wavevector(index)


def lattice_distance(spec: LatticeSpec, index: tuple[int, int]) -> int:
    return spec.distance(index)


class LatticeField:
    """Truncated Fourier series with a complex (h, theta) pair per mode.

    Coefficients are held in a dense array indexed by integer offsets
    (never by floating-point wavevectors).  Physical fields satisfy the
    Hermitian symmetry coeff(-n) = conj(coeff(n)); single complex modes
    without the conjugate partner are permitted as inputs to the multilinear
    form extraction, so the symmetry is checked on demand rather than
    enforced in the constructor.
    """

    __slots__ = ("spec", "arr")

    def __init__(self, spec: LatticeSpec, arr: np.ndarray | None = None):
        self.spec = spec
        n = 2 * spec.truncation + 1
        if arr is None:
            arr = np.zeros((n, n, 2), dtype=complex)
        else:
            arr = np.asarray(arr, dtype=complex)
            if arr.shape != (n, n, 2):
                raise UsageError(f"coefficient array must have shape {(n, n, 2)}")
        self.arr = arr

    # -- construction ------------------------------------------------------

    @classmethod
    def from_modes(cls, spec: LatticeSpec, modes: dict) -> "LatticeField":
        """Build a field from ``{(n1, n2): (h, theta)}``; no conjugates added."""
        f = cls(spec)
        for index, value in modes.items():
            f[index] = value
        return f

    @classmethod
    def single_mode(cls, spec, index, value, hermitian=True) -> "LatticeField":
        """One mode, optionally with its conjugate partner at -index."""
        f = cls(spec)
        f[index] = value
        if hermitian:
            n1, n2 = index
            if (n1, n2) != (0, 0):
                f[(-n1, -n2)] = np.conj(value)
        return f

    def copy(self) -> "LatticeField":
        return LatticeField(self.spec, self.arr.copy())

    # -- indexing ----------------------------------------------------------

    def _offset(self, index):
        T = self.spec.truncation
        n1, n2 = index
        if self.spec.distance(index) > T:
            raise DomainError(f"index {index} outside truncation {T}")
        return n1 + T, n2 + T

    def __getitem__(self, index) -> np.ndarray:
        i, j = self._offset(index)
        return self.arr[i, j]

    def __setitem__(self, index, value):
        i, j = self._offset(index)
        self.arr[i, j] = np.asarray(value, dtype=complex)

    @property
    def coeffs(self) -> dict:
        """Nonzero coefficients as ``{(n1, n2): ndarray(2,)}``."""
        out = {}
        T = self.spec.truncation
        nz = np.argwhere(np.any(self.arr != 0, axis=2))
        for i, j in nz:
            out[(int(i - T), int(j - T))] = self.arr[i, j].copy()
        return out

    # -- algebra -----------------------------------------------------------

    def __add__(self, other: "LatticeField") -> "LatticeField":
        self._check_spec(other)
        return LatticeField(self.spec, self.arr + other.arr)

    def __sub__(self, other: "LatticeField") -> "LatticeField":
        self._check_spec(other)
        return LatticeField(self.spec, self.arr - other.arr)

    def __mul__(self, scalar) -> "LatticeField":
        return LatticeField(self.spec, self.arr * scalar)

    __rmul__ = __mul__

    def _check_spec(self, other):
        if not isinstance(other, LatticeField) or other.spec != self.spec:
            raise UsageError("lattice fields have mismatched specs")

    def norm(self) -> float:
        return float(np.linalg.norm(self.arr))

    # -- symmetry ----------------------------------------------------------

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        scale = max(np.abs(self.arr).max(), 1.0)
        flipped = np.conj(self.arr[::-1, ::-1, :])
        return bool(np.abs(self.arr - flipped).max() <= tol * scale)

    def reflect(self) -> "LatticeField":
        """Index reflection (n1, n2) -> (-n1, -n2)."""
        return LatticeField(self.spec, self.arr[::-1, ::-1, :].copy())

    # -- serialization -----------------------------------------------------

    def to_json(self) -> str:
        entries = []
        for index in sorted(self.coeffs):
            h, theta = self[index]
            entries.append(
                {
                    "n": [index[0], index[1]],
                    "h": [h.real, h.imag],
                    "theta": [theta.real, theta.imag],
                }
            )
        return json.dumps(
            {
                "kind": self.spec.kind,
                "k_star": self.spec.k_star,
                "truncation": self.spec.truncation,
                "coeffs": entries,
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "LatticeField":
        data = json.loads(text)
        spec = LatticeSpec(data["kind"], data["k_star"], data["truncation"])
        f = cls(spec)
        for entry in data["coeffs"]:
            f[tuple(entry["n"])] = [complex(*entry["h"]), complex(*entry["theta"])]
        return f


def convolve_coeffs(spec: LatticeSpec, a: np.ndarray, b: np.ndarray):
    """Convolution of two (2T+1, 2T+1) coefficient arrays, cropped to the lattice.

    Returns ``(result, discarded, retained)`` where the last two are the l2
    masses lost to, and kept within, the truncation.
    """
    T = spec.truncation
    full = fftconvolve(a, b)
    inner = full[T : 3 * T + 1, T : 3 * T + 1]
    result = np.where(spec.mask, inner, 0.0)
    retained = float(np.linalg.norm(result))
    discarded = math.sqrt(max(float(np.linalg.norm(full)) ** 2 - retained**2, 0.0))
    return result, discarded, retained


def field_product(a: LatticeField, b: LatticeField) -> LatticeField:
    """Componentwise pointwise product in physical space (coefficient convolution)."""
    a._check_spec(b)
    out = LatticeField(a.spec)
    for c in (0, 1):
        out.arr[:, :, c], _, _ = convolve_coeffs(a.spec, a.arr[:, :, c], b.arr[:, :, c])
    return out
