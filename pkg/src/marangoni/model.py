"""Exact right-hand side of the thin-film system on lattice fields.

``rhs_full`` evaluates both equation residuals F = (F1, F2) about the pure
conduction state, with spectral derivatives and convolution products:

    F1 = -div( h^3/3 (grad lap h - g grad h) + M h^2/2 grad(h - theta) )
    F2 =  div(h grad theta) - |grad h|^2 / 2 - beta (theta - h)
          + j . grad(theta - h)
          - div( h^4/8 (grad lap h - g grad h) + M h^3/6 grad(h - theta) )

with h = 1 + h~ and theta = 1 + theta~.  The evolution form carries the mass
matrix diag(1, h); all coefficient formulas are expressed through F alone, so
this module exposes F only and the simulator owns the mass-matrix division.

``taylor_forms`` extracts the symmetric bilinear and trilinear Taylor forms
N2, N3 of F at the origin by exact polynomial-order separation: F(tU) is a
polynomial of degree <= 5 in t, so sampling at six Chebyshev nodes and
solving the Vandermonde system recovers every homogeneous part, which is then
polarized.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ExtractionError
from .lattice import LatticeField, LatticeSpec, convolve_coeffs
from .linear import FluidParams

MAX_DEGREE = 5  # j . grad(theta - h) with j cubic in h is the quintic term

DISCARD_WARN_RATIO = 1e-12


class TruncationOverflowWarning(UserWarning):
    """Convolution mass discarded by the lattice truncation is non-negligible."""


@dataclass
class RHSValue:
    """Equation residuals (F1, F2) in coefficient space."""

    field: LatticeField
    discarded_mass: float
    retained_mass: float


class _Workspace:
    """Spectral-derivative and convolution helpers on raw coefficient arrays."""

    def __init__(self, spec: LatticeSpec):
        self.spec = spec
        gx, gy = spec.wavevector_grid
        self.igx = 1j * gx
        self.igy = 1j * gy
        self.neg_gsq = -(gx * gx + gy * gy)
        T = spec.truncation
        self.one = np.zeros((2 * T + 1, 2 * T + 1), dtype=complex)
        self.one[T, T] = 1.0
        self.discarded = 0.0
        self.retained = 0.0

    def conv(self, a, b):
        out, d, r = convolve_coeffs(self.spec, a, b)
        self.discarded = math.hypot(self.discarded, d)
        self.retained = max(self.retained, r)
        return out

    def dx(self, a):
        return self.igx * a

    def dy(self, a):
        return self.igy * a

    def lap(self, a):
        return self.neg_gsq * a


def rhs_full(U: LatticeField, p: FluidParams) -> RHSValue:
    """Evaluate F = (F1, F2) at the field U = (h - 1, theta - 1)."""
    ws = _Workspace(U.spec)
    g, beta, M = p.g, p.beta, p.M

    H = U.arr[:, :, 0]
    TH = U.arr[:, :, 1]
    h = ws.one + H

    h2 = ws.conv(h, h)
    h3 = ws.conv(h2, h)
    h4 = ws.conv(h3, h)

    hx, hy = ws.dx(H), ws.dy(H)
    thx, thy = ws.dx(TH), ws.dy(TH)
    lap_h = ws.lap(H)
    wx = ws.dx(lap_h) - g * hx
    wy = ws.dy(lap_h) - g * hy
    dphix = hx - thx  # grad(h - theta)
    dphiy = hy - thy

    jx = ws.conv(h3, wx) / 3.0 + (M / 2.0) * ws.conv(h2, dphix)
    jy = ws.conv(h3, wy) / 3.0 + (M / 2.0) * ws.conv(h2, dphiy)

    F1 = -(ws.dx(jx) + ws.dy(jy))

    heat_flux_x = ws.conv(h, thx)
    heat_flux_y = ws.conv(h, thy)
    flux2x = ws.conv(h4, wx) / 8.0 + (M / 6.0) * ws.conv(h3, dphix)
    flux2y = ws.conv(h4, wy) / 8.0 + (M / 6.0) * ws.conv(h3, dphiy)

    F2 = (
        ws.dx(heat_flux_x)
        + ws.dy(heat_flux_y)
        - 0.5 * (ws.conv(hx, hx) + ws.conv(hy, hy))
        - beta * (TH - H)
        - (ws.conv(jx, dphix) + ws.conv(jy, dphiy))
        - (ws.dx(flux2x) + ws.dy(flux2y))
    )

    if ws.retained > 0 and ws.discarded > DISCARD_WARN_RATIO * ws.retained:
        warnings.warn(
            f"lattice truncation discarded {ws.discarded:.3e} of convolution mass "
            f"(retained {ws.retained:.3e}); increase the truncation if low modes matter",
            TruncationOverflowWarning,
            stacklevel=2,
        )

    out = LatticeField(U.spec)
    out.arr[:, :, 0] = F1
    out.arr[:, :, 1] = F2
    return RHSValue(out, ws.discarded, ws.retained)


def _chebyshev_nodes(n: int) -> np.ndarray:
    i = np.arange(n)
    return np.cos((2 * i + 1) * np.pi / (2 * n))


class TaylorForms:
    """Symmetric multilinear Taylor forms of F at the pure conduction state."""

    def __init__(self, p: FluidParams, degree: int = MAX_DEGREE):
        self.p = p
        self.degree = degree
        self.nodes = _chebyshev_nodes(degree + 1)
        self.vandermonde = np.vander(self.nodes, degree + 1, increasing=True)

    def homogeneous(self, U: LatticeField) -> list[LatticeField]:
        """Homogeneous parts [H0, ..., Hd] of t -> F(tU), solved exactly."""
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", TruncationOverflowWarning)
            samples = np.stack(
                [rhs_full(t * U, self.p).field.arr for t in self.nodes]
            )
        flat = samples.reshape(len(self.nodes), -1)
        coeffs = np.linalg.solve(self.vandermonde, flat)
        shape = samples.shape[1:]
        parts = [LatticeField(U.spec, coeffs[d].reshape(shape)) for d in range(self.degree + 1)]
        scale = max(part.norm() for part in parts)
        if scale > 0 and parts[0].norm() > 1e-9 * scale:
            raise ExtractionError(
                "Taylor separation left a nonzero constant part; "
                "Vandermonde solve is inconsistent"
            )
        return parts

    def quadratic(self, U: LatticeField) -> LatticeField:
        """Q2(U) = N2(U, U)."""
        return self.homogeneous(U)[2]

    def cubic(self, U: LatticeField) -> LatticeField:
        """Q3(U) = N3(U, U, U)."""
        return self.homogeneous(U)[3]

    def n2(self, U: LatticeField, V: LatticeField) -> LatticeField:
        """Symmetric bilinear form, by polarization of Q2."""
        return 0.5 * (self.quadratic(U + V) - self.quadratic(U) - self.quadratic(V))

    def n3(self, U: LatticeField, V: LatticeField, W: LatticeField) -> LatticeField:
        """Symmetric trilinear form, by cubic polarization of Q3."""
        return (1.0 / 6.0) * (
            self.cubic(U + V + W)
            - self.cubic(U + V)
            - self.cubic(U + W)
            - self.cubic(V + W)
            + self.cubic(U)
            + self.cubic(V)
            + self.cubic(W)
        )


def taylor_forms(p: FluidParams) -> TaylorForms:
    return TaylorForms(p)
