"""Dispersion relation and critical parameters of the pure conduction state.

The linearisation about (h, theta) = (1, 1) has the 2x2 Fourier symbol
``symbol_matrix(k, p)``; its eigenvalues are the roots of the quadratic
lambda^2 + a1(k, M) lambda + a0(k, M).  Setting a0 = 0 gives the monotonic
(Turing) instability threshold M_m(k), setting a1 = 0 the oscillatory one
M_o(k).  Critical values minimise these curves over k.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DegenerateEigenvalueError, DomainError, RegimeError

BETA_MONOTONIC_MAX = 72.0  # M_m has a finite minimiser iff 0 < beta < 72
M_M_LARGE_K_LIMIT = 48.0


@dataclass(frozen=True)
class FluidParams:
    """Gravity number g, rescaled Biot number beta, Marangoni number M."""

    g: float
    beta: float
    M: float = 0.0

    def __post_init__(self):
        if self.g <= 0:
            raise DomainError("g must be positive")
        if self.beta <= 0:
            raise DomainError("beta must be positive")
        if self.M < 0:
            raise DomainError("M must be nonnegative")

    def at_marangoni(self, M: float) -> "FluidParams":
        return FluidParams(self.g, self.beta, M)


class Regime(str, Enum):
    MONOTONIC = "monotonic"
    OSCILLATORY = "oscillatory"
    DEGENERATE = "degenerate"


class Normalization(str, Enum):
    H_UNIT = "h_unit"
    THETA_UNIT = "theta_unit"


@dataclass(frozen=True)
class SpectralRoots:
    """Roots ordered by real part; ties broken by positive imaginary part."""

    lambda_plus: complex
    lambda_minus: complex


@dataclass(frozen=True)
class CriticalPoint:
    M_star: float
    k_star: float
    regime: Regime


@dataclass(frozen=True)
class ModeVector:
    """Eigenvector (h, theta) with its normalization convention."""

    h: complex
    theta: complex
    normalization: Normalization

    @property
    def vec(self) -> np.ndarray:
        return np.array([self.h, self.theta])


def dispersion_coeffs(k: float, p: FluidParams) -> tuple[float, float]:
    """Coefficients (a0, a1) of the quadratic dispersion polynomial."""
    k2 = k * k
    g, beta, M = p.g, p.beta, p.M
    a1 = beta + k2 * (g + k2 - M + 3.0) / 3.0
    a0 = (48.0 * beta * k2 * (g + k2) + k2 * k2 * (48.0 * (g + k2) - M * (g + k2 + 72.0))) / 144.0
    return a0, a1


def symbol_matrix(k: float, p: FluidParams) -> np.ndarray:
    """Fourier symbol of the linearisation at wave number k = |k|."""
    k2 = k * k
    g, beta, M = p.g, p.beta, p.M
    return np.array(
        [
            [-k2 * k2 / 3.0 - (g / 3.0 - M / 2.0) * k2, -(M / 2.0) * k2],
            [-k2 * k2 / 8.0 - (g / 8.0 - M / 6.0) * k2 + beta, -(1.0 + M / 6.0) * k2 - beta],
        ]
    )


def symbol_matrix_complex(mu: np.ndarray, p: FluidParams) -> np.ndarray:
    """Symbol evaluated on a complex wave vector, with the bilinear dot mu.mu.

    For mu = i*k this reduces to ``symbol_matrix(|k|, p)``.
    """
    s = mu[0] * mu[0] + mu[1] * mu[1]
    g, beta, M = p.g, p.beta, p.M
    return np.array(
        [
            [-s * s / 3.0 + (g / 3.0 - M / 2.0) * s, (M / 2.0) * s],
            [-s * s / 8.0 + (g / 8.0 - M / 6.0) * s + beta, (1.0 + M / 6.0) * s - beta],
        ],
        dtype=complex,
    )


def _order_roots(r1: complex, r2: complex) -> tuple[complex, complex]:
    if r1.real > r2.real:
        return r1, r2
    if r2.real > r1.real:
        return r2, r1
    return (r1, r2) if r1.imag >= r2.imag else (r2, r1)


def spectral_roots(k: float, p: FluidParams) -> SpectralRoots:
    a0, a1 = dispersion_coeffs(k, p)
    disc = cmath.sqrt(a1 * a1 - 4.0 * a0)
    plus, minus = _order_roots((-a1 + disc) / 2.0, (-a1 - disc) / 2.0)
    return SpectralRoots(plus, minus)


def M_monotonic(k: float, g: float, beta: float) -> float:
    """Marangoni number where a0(k, M) = 0 (stationary neutral mode)."""
    if k <= 0:
        raise DomainError("M_m(k) has a pole at k = 0")
    k2 = k * k
    return 48.0 * (beta + k2) * (g + k2) / (k2 * (g + k2 + 72.0))


def M_oscillatory(k: float, g: float, beta: float) -> float:
    """Marangoni number where a1(k, M) = 0 (oscillatory neutral mode)."""
    if k <= 0:
        raise DomainError("M_o(k) has a pole at k = 0")
    return g + 3.0 * beta / (k * k) + k * k + 3.0


def _minimize_curve(curve, k_lo, k_hi) -> tuple[float, float]:
    res = minimize_scalar(curve, bounds=(k_lo, k_hi), method="bounded",
                          options={"xatol": 1e-12})
    return float(res.x), float(res.fun)


def critical_monotonic(g: float, beta: float) -> CriticalPoint:
    """Critical point of the monotonic (Turing) instability.

    Uses the closed form for (k_m*)^2 and cross-validates against direct 1-D
    minimization of M_m; the numerical minimum wins if they disagree.
    """
    if not (0.0 < beta < BETA_MONOTONIC_MAX):
        raise DomainError("M_m has no finite minimiser unless 0 < beta < 72")
    if g <= 0:
        raise DomainError("g must be positive")
    k2 = (beta * g + 6.0 * math.sqrt(2.0) * math.sqrt(beta * g * (-beta + g + 72.0))) / (72.0 - beta)
    k_closed = math.sqrt(k2)
    m_closed = M_monotonic(k_closed, g, beta)
    k_num, m_num = _minimize_curve(lambda k: M_monotonic(k, g, beta),
                                   1e-6, 4.0 * k_closed + 10.0)
    if abs(m_num - m_closed) > 1e-6 * max(1.0, abs(m_closed)):
        k_star, m_star = k_num, m_num
    else:
        k_star, m_star = k_closed, m_closed
    return CriticalPoint(m_star, k_star, Regime.MONOTONIC)


def critical_oscillatory(g: float, beta: float) -> CriticalPoint:
    """Critical point of the oscillatory instability; k_o* = (3 beta)^(1/4).

    The critical Marangoni number is the numerical minimum of M_o over k,
    which coincides with M_o(k_o*) = g + 3 + 2 sqrt(3 beta).
    """
    if g <= 0 or beta <= 0:
        raise DomainError("g and beta must be positive")
    k_star = (3.0 * beta) ** 0.25
    k_num, m_num = _minimize_curve(lambda k: M_oscillatory(k, g, beta),
                                   1e-6, 4.0 * k_star + 10.0)
    m_closed = M_oscillatory(k_star, g, beta)
    m_star = m_num if abs(m_num - m_closed) > 1e-6 * max(1.0, abs(m_closed)) else m_closed
    return CriticalPoint(m_star, k_star, Regime.OSCILLATORY)


def classify_regime(g: float, beta: float, tol: float = 1e-10) -> Regime:
    """Which instability occurs first as M increases."""
    if beta < BETA_MONOTONIC_MAX:
        m_m = critical_monotonic(g, beta).M_star
    else:
        m_m = M_M_LARGE_K_LIMIT  # M_m decreases monotonically to 48
    m_o = critical_oscillatory(g, beta).M_star
    if abs(m_m - m_o) < tol:
        return Regime.DEGENERATE
    return Regime.MONOTONIC if m_m < m_o else Regime.OSCILLATORY


def _eigvec_for(matrix: np.ndarray, lam: complex) -> np.ndarray:
    """Null vector of (lam*I - matrix) for a 2x2 matrix, by row selection."""
    a, b = matrix[0]
    c, d = matrix[1]
    cand1 = np.array([b, lam - a])
    cand2 = np.array([lam - d, c])
    v = cand1 if np.linalg.norm(cand1) >= np.linalg.norm(cand2) else cand2
    n = np.linalg.norm(v)
    if n == 0:  # matrix is lam*I
        return np.array([1.0 + 0j, 0.0 + 0j])
    return v / n


def _normalize(v: np.ndarray, normalization: Normalization | None) -> ModeVector:
    if normalization in (None, Normalization.H_UNIT) and abs(v[0]) >= 1e-8:
        v = v / v[0]
        return ModeVector(v[0], v[1], Normalization.H_UNIT)
    if normalization == Normalization.H_UNIT and abs(v[0]) < 1e-8:
        normalization = Normalization.THETA_UNIT  # fallback, tag records it
    v = v / v[1]
    return ModeVector(v[0], v[1], Normalization.THETA_UNIT)


def eigpair_plus(k: float, p: FluidParams,
                 normalization: Normalization = Normalization.H_UNIT,
                 ) -> tuple[complex, ModeVector]:
    """Eigenvalue lambda_+(k) and its eigenvector of the Fourier symbol."""
    roots = spectral_roots(k, p)
    if abs(roots.lambda_plus - roots.lambda_minus) < 1e-12:
        raise DegenerateEigenvalueError(f"eigenvalue collision at k = {k}")
    L = symbol_matrix(k, p)
    v = _eigvec_for(L, roots.lambda_plus)
    return roots.lambda_plus, _normalize(v, normalization)


def eigpair_minus(k: float, p: FluidParams,
                  normalization: Normalization = Normalization.H_UNIT,
                  ) -> tuple[complex, ModeVector]:
    """As ``eigpair_plus`` for the other spectral branch."""
    roots = spectral_roots(k, p)
    if abs(roots.lambda_plus - roots.lambda_minus) < 1e-12:
        raise DegenerateEigenvalueError(f"eigenvalue collision at k = {k}")
    L = symbol_matrix(k, p)
    v = _eigvec_for(L, roots.lambda_minus)
    return roots.lambda_minus, _normalize(v, normalization)


def adjoint_eigpair_plus(k: float, p: FluidParams) -> ModeVector:
    """Adjoint eigenvector for conj(lambda_+); normalised to unit length."""
    roots = spectral_roots(k, p)
    if abs(roots.lambda_plus - roots.lambda_minus) < 1e-12:
        raise DegenerateEigenvalueError(f"eigenvalue collision at k = {k}")
    L = symbol_matrix(k, p)
    v = _eigvec_for(L.conj().T, np.conj(roots.lambda_plus))
    return ModeVector(v[0], v[1], Normalization.THETA_UNIT if abs(v[0]) < 1e-8
                      else Normalization.H_UNIT)


def adjoint_eigpair_minus(k: float, p: FluidParams) -> ModeVector:
    roots = spectral_roots(k, p)
    if abs(roots.lambda_plus - roots.lambda_minus) < 1e-12:
        raise DegenerateEigenvalueError(f"eigenvalue collision at k = {k}")
    L = symbol_matrix(k, p)
    v = _eigvec_for(L.conj().T, np.conj(roots.lambda_minus))
    return ModeVector(v[0], v[1], Normalization.THETA_UNIT if abs(v[0]) < 1e-8
                      else Normalization.H_UNIT)


def spectral_projector(k: float, p: FluidParams, branch: str = "+") -> np.ndarray:
    """Rank-one projector onto the lambda_{+/-} eigendirection."""
    if branch == "+":
        _, phi = eigpair_plus(k, p)
        phi_adj = adjoint_eigpair_plus(k, p)
    else:
        _, phi = eigpair_minus(k, p)
        phi_adj = adjoint_eigpair_minus(k, p)
    denom = np.vdot(phi_adj.vec, phi.vec)
    return np.outer(phi.vec, phi_adj.vec.conj()) / denom


def project_plus(k: float, p: FluidParams, value: np.ndarray) -> complex:
    """Scalar amplitude <phi_+^*, value> / <phi_+^*, phi_+>."""
    _, phi = eigpair_plus(k, p)
    phi_adj = adjoint_eigpair_plus(k, p)
    return complex(np.vdot(phi_adj.vec, value) / np.vdot(phi_adj.vec, phi.vec))


def project_minus(k: float, p: FluidParams, value: np.ndarray) -> complex:
    _, phi = eigpair_minus(k, p)
    phi_adj = adjoint_eigpair_minus(k, p)
    return complex(np.vdot(phi_adj.vec, value) / np.vdot(phi_adj.vec, phi.vec))


def kappa(g: float, beta: float) -> float:
    """Derivative of lambda_+ in M at the monotonic critical point.

    kappa = -d_M a0 / a1 evaluated at (k_m*, M_m*), which is positive
    throughout the monotonic regime.
    """
    if classify_regime(g, beta) != Regime.MONOTONIC:
        raise RegimeError("kappa is defined at the monotonic critical point")
    crit = critical_monotonic(g, beta)
    k, M = crit.k_star, crit.M_star
    k2 = k * k
    dM_a0 = -(k2 * k2) * (g + k2 + 72.0) / 144.0
    _, a1 = dispersion_coeffs(k, FluidParams(g, beta, M))
    return -dM_a0 / a1
