"""Physical-space (h, theta) fields for bifurcating patterns and fronts.

Patterns are leading-order center-manifold states

    (h, theta) = (1, 1) + 2 A sum_j cos(k_j . x) phi_+(k*)

with the branch amplitude A fixed by the reduced equations.  Modulating
fronts replace the constant A by the heteroclinic profile A_j(Xi) evaluated
at Xi = eps^2 x (snapshot at t = 0, so the co-moving coordinate coincides
with x).  Hexagonal fields live on the rectangle Lx = 4 pi / k*,
Ly = 4 pi / (sqrt(3) k*), on which every lattice mode is exactly periodic.
"""

from __future__ import annotations

import math
from enum import Enum

import numpy as np

from .coeffs import hex_coefficients, square_coefficients
from .errors import BranchNotFoundError, DomainError, UsageError
from .grids import GridField, GridSpec
from .lattice import HEXAGONAL, SQUARE, LatticeSpec
from .linear import eigpair_plus, FluidParams
from .reduced import HeteroclinicOrbit

SQRT3 = math.sqrt(3.0)


class PatternKind(str, Enum):
    ROLL = "roll"
    SQUARE = "square"
    HEX_N = "hex_n"
    HEX_PM = "hex_pm"


def natural_grid(kind: str, k_star: float, cells: int = 2,
                 points_per_cell: int = 16) -> GridSpec:
    """A periodic rectangle on which every lattice mode closes exactly."""
    if kind == SQUARE:
        L = 2.0 * math.pi / k_star * cells
        n = points_per_cell * cells
        return GridSpec(n, n, L, L)
    Lx = 4.0 * math.pi / k_star * cells
    Ly = 4.0 * math.pi / (SQRT3 * k_star) * cells
    n = 2 * points_per_cell * cells
    return GridSpec(n, n, Lx, Ly)


def _lattice_wavevectors(kind: str, k_star: float) -> list[np.ndarray]:
    spec = LatticeSpec(kind, k_star, 2)
    if kind == SQUARE:
        return [spec.wavevector((1, 0)), spec.wavevector((0, 1))]
    return [spec.wavevector((1, 0)), spec.wavevector((0, 1)),
            spec.wavevector((-1, -1))]


def pattern_amplitude(kind: PatternKind, coeffs, mu: float, M0: float,
                      sign: int = +1) -> float:
    """Branch amplitude of the requested pattern, or raise if it does not exist."""
    m = mu * M0 * coeffs.kappa
    if kind == PatternKind.ROLL:
        if M0 * coeffs.K0 >= 0:
            raise BranchNotFoundError("roll waves need M0*K0 < 0")
        return math.sqrt(-m / coeffs.K0)
    if kind == PatternKind.SQUARE:
        tot = coeffs.K0 + coeffs.K1
        if M0 * tot >= 0:
            raise BranchNotFoundError("square patterns need M0*(K0+K1) < 0")
        return math.sqrt(-m / tot)
    if kind == PatternKind.HEX_N:
        if coeffs.N == 0:
            raise BranchNotFoundError("hex_n branch needs N != 0")
        return -m / coeffs.N
    if kind == PatternKind.HEX_PM:
        n0 = coeffs.N / math.sqrt(mu)
        k02 = coeffs.K0 + 2.0 * coeffs.K2
        disc = n0 * n0 - 4.0 * M0 * coeffs.kappa * k02
        if k02 == 0 or disc <= 0:
            raise BranchNotFoundError(
                "hex_pm branch needs K0 + 2K2 != 0 and a positive radicand")
        return math.sqrt(mu) * (-n0 + sign * math.sqrt(disc)) / (2.0 * k02)
    raise DomainError(f"unknown pattern kind {kind}")


def pattern_field(kind: PatternKind | str, g: float, beta: float, mu: float,
                  M0: float, grid: GridSpec, sign: int = +1) -> GridField:
    """Leading-order pattern sampled on the grid; amplitude attached as metadata."""
    kind = PatternKind(kind)
    if mu < 0:
        raise DomainError("mu must be nonnegative")
    lattice_kind = SQUARE if kind in (PatternKind.ROLL, PatternKind.SQUARE) else HEXAGONAL
    if lattice_kind == SQUARE:
        coeffs, _ = square_coefficients(g, beta)
    else:
        coeffs, _ = hex_coefficients(g, beta)
    phi = eigpair_plus(coeffs.k_star,
                       FluidParams(g, beta, coeffs.M_star))[1].vec.real

    if mu == 0.0:
        amplitude = 0.0
    else:
        amplitude = pattern_amplitude(kind, coeffs, mu, M0, sign)

    kvecs = _lattice_wavevectors(lattice_kind, coeffs.k_star)
    if kind == PatternKind.ROLL:
        kvecs = kvecs[:1]
    x, y = grid.x(), grid.y()
    carrier = np.zeros((grid.nx, grid.ny))
    for kv in kvecs:
        carrier += np.cos(kv[0] * x[:, None] + kv[1] * y[None, :])
    h = 1.0 + 2.0 * amplitude * carrier * phi[0]
    theta = 1.0 + 2.0 * amplitude * carrier * phi[1]
    out = GridField(grid, h, theta)
    out.amplitude = amplitude
    out.k_star = coeffs.k_star
    return out


def _interp_profile(orbit: HeteroclinicOrbit, xi_query: np.ndarray) -> np.ndarray:
    """Componentwise interpolation of A(Xi), clamped to the endpoint values."""
    out = np.empty((len(xi_query), 2))
    for c in range(2):
        out[:, c] = np.interp(xi_query, orbit.xi, orbit.samples[:, c])
    return out


def front_field(kind: str, orbit: HeteroclinicOrbit, eps: float, c: float,
                g: float, beta: float, grid: GridSpec,
                xi_offset: float | None = None) -> GridField:
    """Leading-order modulating front at t = 0: Xi = eps^2 x.

    The far fields match the source pattern on the left edge and the target
    pattern on the right edge.  ``xi_offset`` shifts the interface; by default
    the orbit is centred in the domain.
    """
    if kind not in (SQUARE, HEXAGONAL):
        raise DomainError(f"unknown lattice kind {kind!r}")
    if np.diff(orbit.xi).max() >= 0.1:
        raise UsageError("orbit samples too sparse (need max dXi < 0.1)")
    gap_src = np.linalg.norm(orbit.samples[0] - orbit.source.position)
    gap_tgt = np.linalg.norm(orbit.samples[-1] - orbit.target.position)
    if max(gap_src, gap_tgt) > 1e-3:
        raise UsageError("orbit endpoints have not converged to the fixed points")

    coeffs = (square_coefficients if kind == SQUARE else hex_coefficients)(g, beta)[0]
    phi = eigpair_plus(coeffs.k_star,
                       FluidParams(g, beta, coeffs.M_star))[1].vec.real
    kvecs = _lattice_wavevectors(kind, coeffs.k_star)

    x, y = grid.x(), grid.y()
    if xi_offset is None:
        xi_mid = 0.5 * (orbit.xi[0] + orbit.xi[-1])
        xi_offset = xi_mid - eps * eps * 0.5 * grid.Lx
    xi = eps * eps * x + xi_offset
    prof = _interp_profile(orbit, xi)  # (nx, 2): A1 and A2 (=A3 on hex)

    amp = [prof[:, 0], prof[:, 1]] + ([prof[:, 1]] if kind == HEXAGONAL else [])
    field = np.zeros((grid.nx, grid.ny))
    for a, kv in zip(amp, kvecs):
        field += 2.0 * a[:, None] * np.cos(kv[0] * x[:, None] + kv[1] * y[None, :])
    out = GridField(grid, 1.0 + eps * field * phi[0], 1.0 + eps * field * phi[1])
    out.k_star = coeffs.k_star
    return out


def front_field_periodic(kind: str, orbit: HeteroclinicOrbit, eps: float, c: float,
                         g: float, beta: float, grid: GridSpec) -> GridField:
    """Front plus its mirror image, periodic on the domain.

    The envelope follows the orbit on the left half and its reflection on the
    right half, so both domain edges sit in the source state; the left
    interface travels at +c, its mirror at -c.  The cosine carriers are even,
    so only the envelope is reflected.
    """
    coeffs = (square_coefficients if kind == SQUARE else hex_coefficients)(g, beta)[0]
    phi = eigpair_plus(coeffs.k_star,
                       FluidParams(g, beta, coeffs.M_star))[1].vec.real
    kvecs = _lattice_wavevectors(kind, coeffs.k_star)

    x, y = grid.x(), grid.y()
    quarter = 0.25 * grid.Lx
    dist = np.where(x <= 0.5 * grid.Lx, x - quarter, (3.0 * quarter) - x)
    xi = eps * eps * dist + 0.5 * (orbit.xi[0] + orbit.xi[-1])
    prof = _interp_profile(orbit, xi)

    amp = [prof[:, 0], prof[:, 1]] + ([prof[:, 1]] if kind == HEXAGONAL else [])
    field = np.zeros((grid.nx, grid.ny))
    for a, kv in zip(amp, kvecs):
        field += 2.0 * a[:, None] * np.cos(kv[0] * x[:, None] + kv[1] * y[None, :])
    out = GridField(grid, 1.0 + eps * field * phi[0], 1.0 + eps * field * phi[1])
    out.k_star = coeffs.k_star
    return out
