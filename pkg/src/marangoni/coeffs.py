"""Amplitude-equation coefficients on square and hexagonal lattices.

Every coefficient is assembled from evaluations of the quadratic and cubic
Taylor forms N2, N3 on the exact one- or two-mode fields appearing in its
defining formula, projected onto the critical eigendirection.  The
combinatorial prefactors (2, 3, 6) follow the multilinear expansion of the
nonlinearity.  All coefficients are real by rotation and reflection symmetry;
imaginary parts beyond tolerance raise ``ExtractionError``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, ExtractionError, RegimeError
from .lattice import HEXAGONAL, SQUARE, LatticeField, LatticeSpec
from .linear import (
    FluidParams,
    Normalization,
    Regime,
    adjoint_eigpair_minus,
    adjoint_eigpair_plus,
    classify_regime,
    critical_monotonic,
    eigpair_minus,
    eigpair_plus,
    kappa as kappa_of,
    spectral_roots,
    symbol_matrix,
)
from .model import TruncationOverflowWarning, rhs_full, taylor_forms

IMAG_TOL = 1e-9
DEFAULT_TRUNCATION = 8

# index-space generators: k1, k2 and, on the hexagonal lattice, k3 = -k1-k2
K1 = (1, 0)
K2 = (0, 1)
K3 = (-1, -1)


@dataclass(frozen=True)
class AmplitudeCoefficients:
    """Reduced-equation coefficients at a monotonic critical point.

    ``K1`` is populated on the square lattice, ``N`` and ``K2`` on the
    hexagonal one.  ``kappa0``/``kappa1`` are the conserved-mode flux
    polynomial p_c(k k^T) = kappa0 + kappa1 k k^T.
    """

    g: float
    beta: float
    M_star: float
    k_star: float
    kappa: float
    Kc: float
    N: float | None
    K0: float
    K1: float | None
    K2: float | None
    nu0: float
    kappa0: float
    kappa1: float
    normalization: Normalization


@dataclass(frozen=True)
class CorrectionVectors:
    """Quadratic balance corrections; each solves its 2x2 linear system."""

    nu_2k1: np.ndarray
    nu_k1_plus_k2: np.ndarray | None
    nu_k1_minus_k2: np.ndarray
    nu3: complex | None


def _neg(index):
    return (-index[0], -index[1])


def _add(*indices):
    return tuple(int(sum(c)) for c in zip(*indices))


class CriticalSetup:
    """Caches the critical point, eigenvectors and Taylor forms for (g, beta)."""

    def __init__(self, g: float, beta: float, kind: str,
                 truncation: int = DEFAULT_TRUNCATION):
        if classify_regime(g, beta) != Regime.MONOTONIC:
            raise RegimeError(f"(g, beta) = ({g}, {beta}) is not in the monotonic regime")
        self.g, self.beta = g, beta
        crit = critical_monotonic(g, beta)
        self.M_star, self.k_star = crit.M_star, crit.k_star
        self.params = FluidParams(g, beta, self.M_star)
        self.spec = LatticeSpec(kind, self.k_star, truncation)
        self.forms = taylor_forms(self.params)

        _, phi = eigpair_plus(self.k_star, self.params)
        self.phi = phi.vec
        self.normalization = phi.normalization
        self.phi_plus_0 = eigpair_plus(0.0, self.params)[1].vec
        self.phi_minus_0 = eigpair_minus(0.0, self.params)[1].vec
        lam_minus_star, phi_minus_star = eigpair_minus(self.k_star, self.params)
        self.lambda_minus_star = lam_minus_star
        self.phi_minus_star = phi_minus_star.vec

        roots0 = spectral_roots(0.0, self.params)
        if abs(roots0.lambda_minus - (-beta)) > 1e-10 * max(1.0, beta):
            raise ExtractionError("lambda_-(0) deviates from -beta")

        # adjoint data for the scalar projections
        adj_p = adjoint_eigpair_plus(self.k_star, self.params).vec
        self._proj_plus = (adj_p, np.vdot(adj_p, self.phi))
        adj_m = adjoint_eigpair_minus(self.k_star, self.params).vec
        self._proj_minus = (adj_m, np.vdot(adj_m, self.phi_minus_star))
        adj_m0 = adjoint_eigpair_minus(0.0, self.params).vec
        self._proj_minus_0 = (adj_m0, np.vdot(adj_m0, self.phi_minus_0))

    # -- projections on single Fourier coefficients --------------------------

    def p_plus(self, value: np.ndarray) -> complex:
        adj, denom = self._proj_plus
        return complex(np.vdot(adj, value) / denom)

    def p_minus_star(self, value: np.ndarray) -> complex:
        adj, denom = self._proj_minus
        return complex(np.vdot(adj, value) / denom)

    def p_minus_0(self, value: np.ndarray) -> complex:
        adj, denom = self._proj_minus_0
        return complex(np.vdot(adj, value) / denom)

    # -- multilinear forms on single complex modes ---------------------------

    def mode(self, index, vec) -> LatticeField:
        return LatticeField.single_mode(self.spec, index, np.asarray(vec, dtype=complex),
                                        hermitian=False)

    def n2_modes(self, m1, m2) -> np.ndarray:
        """Coefficient of N2(e_{m1} v1, e_{m2} v2) at the sum mode."""
        (i1, v1), (i2, v2) = m1, m2
        out = self.forms.n2(self.mode(i1, v1), self.mode(i2, v2))
        return out[_add(i1, i2)]

    def n3_modes(self, m1, m2, m3) -> np.ndarray:
        (i1, v1), (i2, v2), (i3, v3) = m1, m2, m3
        out = self.forms.n3(self.mode(i1, v1), self.mode(i2, v2), self.mode(i3, v3))
        return out[_add(i1, i2, i3)]

    def inv_symbol(self, index) -> np.ndarray:
        k = float(np.linalg.norm(self.spec.wavevector(index)))
        return np.linalg.inv(symbol_matrix(k, self.params))


def _real_or_raise(value: complex, scale: float, what: str) -> float:
    if abs(value.imag) > IMAG_TOL * max(scale, 1.0):
        raise ExtractionError(f"{what} has non-real value {value}")
    return float(value.real)


def _corrections(setup: CriticalSetup, hexagonal: bool) -> CorrectionVectors:
    phi = setup.phi
    # Psi_0 balance: nu0 = (2/beta) P_-(0) N2(phi E_j, phi E_-j)
    q0 = setup.n2_modes((K1, phi), (_neg(K1), phi))
    nu0 = 2.0 / setup.beta * setup.p_minus_0(q0)

    q2 = setup.n2_modes((K1, phi), (K1, phi))
    nu_2k1 = -setup.inv_symbol((2, 0)) @ q2

    qm = setup.n2_modes((K1, phi), (_neg(K2), phi))
    nu_minus = -2.0 * setup.inv_symbol(_add(K1, _neg(K2))) @ qm

    if hexagonal:
        # k1 + k2 = -k3 is a lattice generator, handled by the nu3 balance
        q3 = setup.n2_modes((_neg(K1), phi), (_neg(K2), phi))
        nu3 = -2.0 / setup.lambda_minus_star * setup.p_minus_star(q3)
        nu_plus = None
    else:
        qp = setup.n2_modes((K1, phi), (K2, phi))
        nu_plus = -2.0 * setup.inv_symbol(_add(K1, K2)) @ qp
        nu3 = None

    scale = float(np.abs(q0).max() + 1.0)
    nu0 = _real_or_raise(nu0, scale, "nu0")
    return nu0, CorrectionVectors(nu_2k1, nu_plus, nu_minus, nu3)


def _self_interaction(setup: CriticalSetup, nu0: float, nu_2k1: np.ndarray) -> complex:
    phi = setup.phi
    term_nu0 = 2.0 * setup.p_plus(setup.n2_modes(((0, 0), setup.phi_minus_0), (K1, phi))) * nu0
    term_2k1 = 2.0 * setup.p_plus(setup.n2_modes(((2, 0), nu_2k1), (_neg(K1), phi)))
    term_cubic = 3.0 * setup.p_plus(setup.n3_modes((K1, phi), (K1, phi), (_neg(K1), phi)))
    return term_nu0 + term_2k1 + term_cubic


def conservation_polynomial(g: float, beta: float, M: float, k: np.ndarray,
                            check_scaling: bool = False) -> tuple[float, float]:
    """Conserved-mode flux polynomial p_c(k k^T) = kappa0 + kappa1 * k k^T.

    With ``check_scaling=True`` the closed form is verified against the
    measured quadratic response of the full system to a slowly modulated
    critical mode (an independent collocation-grid oracle); disagreement
    beyond 10 percent raises ``ExtractionError``.
    """
    p = FluidParams(g, beta, M)
    knorm = float(np.linalg.norm(k))
    _, phi = eigpair_plus(knorm, p)
    p1, p2 = phi.vec[0], phi.vec[1]
    # Assembled from the flux decomposition -j = sum_m f_m(U) grad g_m(U, lap U):
    # each pair contributes (Df.phi)(D1g.phi - D2g.phi |k|^2) to kappa0 and
    # -2 (Df.phi)(D2g.phi) to kappa1.  The slow-modulation oracle below pins
    # the convention (total quadratic content of the conserved projection).
    kappa0 = complex((g - M) * p1 * p1 + M * p1 * p2 + knorm**2 * p1 * p1)
    kappa1 = complex(2.0 * p1 * p1)
    scale = max(abs(kappa0), abs(kappa1))
    kappa0 = _real_or_raise(kappa0, scale, "kappa0")
    kappa1 = _real_or_raise(kappa1, scale, "kappa1")
    if check_scaling:
        rel, power = modulation_scaling_check(g, beta)
        if abs(rel) > 0.10:
            raise ExtractionError(
                f"conserved-mode flux check failed: relative mismatch {rel:.3f}")
    return kappa0, kappa1


def modulation_scaling_check(g: float, beta: float, m: int = 128,
                             ) -> tuple[float, float]:
    """Quadratic response of the conservation law to a modulated critical mode.

    Builds 2 cos(eps x) cos(k* x) phi_+ on a fine collocation grid with
    eps = k*/m, extracts the quadratic-in-amplitude part of F by polynomial
    separation, and compares its slow-mode h-coefficient against
    -eps^2 (kappa0 + kappa1 k*^2).  Returns (relative mismatch, fitted
    eps-power from a second run at 2*eps).
    """
    from .simulator import GridSpec, grid_rhs

    crit = critical_monotonic(g, beta)
    k_star, M_star = crit.k_star, crit.M_star
    p = FluidParams(g, beta, M_star)
    phi = eigpair_plus(k_star, p)[1].vec.real
    kappa0, kappa1 = conservation_polynomial(g, beta, M_star, np.array([k_star, 0.0]))
    pred_factor = -(kappa0 + kappa1 * k_star**2)

    def slow_coeff(mm: int) -> tuple[float, complex]:
        eps = k_star / mm
        grid = GridSpec(nx=4096, ny=1, Lx=2.0 * math.pi / eps, Ly=1.0)
        x = grid.x()[:, None]
        envelope = 2.0 * np.cos(eps * x) * np.cos(k_star * x)
        h = envelope * phi[0]
        theta = envelope * phi[1]
        nodes = np.cos((2 * np.arange(6) + 1) * np.pi / 12.0)
        samples = np.stack([
            np.asarray(grid_rhs(t * h, t * theta, grid, p)) for t in nodes
        ])
        V = np.vander(nodes, 6, increasing=True)
        h2 = np.linalg.solve(V, samples.reshape(6, -1))[2].reshape(samples.shape[1:])
        spectrum = np.fft.fft(h2[0][:, 0]) / grid.nx
        return eps, spectrum[2]  # coefficient of exp(2i eps x)

    eps1, c1 = slow_coeff(m)
    eps2, c2 = slow_coeff(m // 2)
    measured = c1.real
    predicted = pred_factor * eps1**2
    rel = (measured - predicted) / predicted
    power = math.log(abs(c2 / c1)) / math.log(eps2 / eps1)
    return float(rel), float(power)


def square_coefficients(g: float, beta: float,
                        truncation: int = DEFAULT_TRUNCATION,
                        ) -> tuple[AmplitudeCoefficients, CorrectionVectors]:
    """Coefficients of the reduced equations on the square lattice."""
    setup = CriticalSetup(g, beta, SQUARE, truncation)
    phi = setup.phi
    nu0, corr = _corrections(setup, hexagonal=False)

    k0 = _self_interaction(setup, nu0, corr.nu_2k1)
    k1 = (
        2.0 * setup.p_plus(setup.n2_modes(((0, 0), setup.phi_minus_0), (K1, phi))) * nu0
        + 2.0 * setup.p_plus(setup.n2_modes((_add(K1, K2), corr.nu_k1_plus_k2),
                                            (_neg(K2), phi)))
        + 2.0 * setup.p_plus(setup.n2_modes((_add(K1, _neg(K2)), corr.nu_k1_minus_k2),
                                            (K2, phi)))
        + 6.0 * setup.p_plus(setup.n3_modes((K1, phi), (K2, phi), (_neg(K2), phi)))
    )
    kc = 2.0 * setup.p_plus(setup.n2_modes(((0, 0), setup.phi_plus_0), (K1, phi)))

    kap = kappa_of(g, beta)
    scale = max(abs(k0), abs(k1), abs(kap), 1.0)
    kappa0, kappa1 = conservation_polynomial(
        g, beta, setup.M_star, setup.spec.wavevector(K1))
    coeffs = AmplitudeCoefficients(
        g=g, beta=beta, M_star=setup.M_star, k_star=setup.k_star,
        kappa=kap,
        Kc=_real_or_raise(kc, scale, "Kc"),
        N=None,
        K0=_real_or_raise(k0, scale, "K0"),
        K1=_real_or_raise(k1, scale, "K1"),
        K2=None,
        nu0=nu0,
        kappa0=kappa0,
        kappa1=kappa1,
        normalization=setup.normalization,
    )
    return coeffs, corr


def hex_coefficients(g: float, beta: float,
                     truncation: int = DEFAULT_TRUNCATION,
                     ) -> tuple[AmplitudeCoefficients, CorrectionVectors]:
    """Coefficients of the reduced equations on the hexagonal lattice."""
    setup = CriticalSetup(g, beta, HEXAGONAL, truncation)
    phi = setup.phi
    nu0, corr = _corrections(setup, hexagonal=True)

    k0 = _self_interaction(setup, nu0, corr.nu_2k1)
    quad = 2.0 * setup.p_plus(setup.n2_modes((_neg(K2), phi), (_neg(K3), phi)))
    k2 = (
        2.0 * setup.p_plus(setup.n2_modes(((0, 0), setup.phi_minus_0), (K1, phi))) * nu0
        + 2.0 * setup.p_plus(setup.n2_modes((_add(K1, _neg(K2)), corr.nu_k1_minus_k2),
                                            (K2, phi)))
        + 2.0 * setup.p_plus(setup.n2_modes((_neg(K3), setup.phi_minus_star),
                                            (_neg(K2), phi))) * np.conj(corr.nu3)
        + 6.0 * setup.p_plus(setup.n3_modes((K1, phi), (K2, phi), (_neg(K2), phi)))
    )
    kc = 2.0 * setup.p_plus(setup.n2_modes(((0, 0), setup.phi_plus_0), (K1, phi)))

    kap = kappa_of(g, beta)
    scale = max(abs(k0), abs(k2), abs(quad), abs(kap), 1.0)
    kappa0, kappa1 = conservation_polynomial(
        g, beta, setup.M_star, setup.spec.wavevector(K1))
    coeffs = AmplitudeCoefficients(
        g=g, beta=beta, M_star=setup.M_star, k_star=setup.k_star,
        kappa=kap,
        Kc=_real_or_raise(kc, scale, "Kc"),
        N=_real_or_raise(quad, scale, "N"),
        K0=_real_or_raise(k0, scale, "K0"),
        K1=None,
        K2=_real_or_raise(k2, scale, "K2"),
        nu0=nu0,
        kappa0=kappa0,
        kappa1=kappa1,
        normalization=setup.normalization,
    )
    return coeffs, corr


def beta_of_g(g: float) -> float:
    """Parameter curve beta(g) on which the hexagonal quadratic coefficient vanishes."""
    if not (0.0 < g < 18.0):
        raise DomainError("beta_of_g is defined for 0 < g < 18")
    root = math.sqrt(484.0 * g**3 + 7425.0 * g**2 + 34992.0 * g + 46656.0)
    return (2.0 * g**2 - root + 87.0 * g + 216.0) / (3.0 * (g + 2.0))


def hex_N(g: float, beta: float) -> float:
    """Quadratic coefficient alone (cheaper than the full hexagonal set)."""
    setup = CriticalSetup(g, beta, HEXAGONAL, truncation=4)
    quad = 2.0 * setup.p_plus(setup.n2_modes((_neg(K2), setup.phi), (_neg(K3), setup.phi)))
    return _real_or_raise(quad, abs(quad) + 1.0, "N")


def beta_root_of_N(g: float, bracket_width: float = 0.05) -> float:
    """Root in beta of N(., g) by bisection, bracketing the closed-form curve."""
    b0 = beta_of_g(g)
    lo, hi = b0 * (1.0 - bracket_width), b0 * (1.0 + bracket_width)
    return float(brentq(lambda b: hex_N(g, b), lo, hi, xtol=1e-10))


def K0_sign_change_on_curve(lo: float = 8.0, hi: float = 12.0) -> float:
    """The g where the self-interaction coefficient vanishes along {N = 0}."""

    def k0_on_curve(g: float) -> float:
        return square_coefficients(g, beta_of_g(g))[0].K0

    f_lo, f_hi = k0_on_curve(lo), k0_on_curve(hi)
    if f_lo * f_hi >= 0:
        raise ExtractionError(
            f"K0 does not change sign on ({lo}, {hi}): K0({lo})={f_lo}, K0({hi})={f_hi}")
    return float(brentq(k0_on_curve, lo, hi, xtol=1e-4))


# -- independent residual oracle ---------------------------------------------


def roll_ansatz(setup: CriticalSetup, corr: CorrectionVectors, nu0: float,
                amplitude: float) -> LatticeField:
    """Roll pattern with its quadratic corrections at amplitude A."""
    phi = setup.phi
    U = LatticeField(setup.spec)
    a = amplitude
    U[K1] = a * phi
    U[_neg(K1)] = a * phi
    U[(0, 0)] = a * a * nu0 * setup.phi_minus_0
    U[(2, 0)] = a * a * corr.nu_2k1
    U[(-2, 0)] = a * a * np.conj(corr.nu_2k1)
    return U


def square_ansatz(setup: CriticalSetup, corr: CorrectionVectors, nu0: float,
                  nu_2k2: np.ndarray, amplitude: float) -> LatticeField:
    """Square pattern (A1 = A2 = A) with its quadratic corrections."""
    phi = setup.phi
    a = amplitude
    U = LatticeField(setup.spec)
    for idx in (K1, _neg(K1), K2, _neg(K2)):
        U[idx] = a * phi
    U[(0, 0)] = 2.0 * a * a * nu0 * setup.phi_minus_0
    for idx, nu in (((2, 0), corr.nu_2k1), ((0, 2), nu_2k2),
                    ((1, 1), corr.nu_k1_plus_k2), ((1, -1), corr.nu_k1_minus_k2)):
        U[idx] = a * a * nu
        U[_neg(idx)] = a * a * np.conj(nu)
    return U


def hex_pattern_ansatz(setup: CriticalSetup, corr: CorrectionVectors, nu0: float,
                       nu_2k: dict, nu_diff: dict, amplitude: float) -> LatticeField:
    """Hexagon pattern (A1 = A2 = A3 = A) with its quadratic corrections."""
    phi = setup.phi
    a = amplitude
    U = LatticeField(setup.spec)
    for idx in (K1, K2, K3):
        U[idx] = a * phi
        U[_neg(idx)] = a * phi
    U[(0, 0)] = 3.0 * a * a * nu0 * setup.phi_minus_0
    for idx, nu in {**nu_2k, **nu_diff}.items():
        U[idx] = a * a * nu
        U[_neg(idx)] = a * a * np.conj(nu)
    # resonance corrections Psi_j along phi_-(k*) on the critical circle
    for idx in (K1, K2, K3):
        U[idx] = U[idx] + a * a * corr.nu3 * setup.phi_minus_star
        U[_neg(idx)] = U[_neg(idx)] + a * a * np.conj(corr.nu3) * setup.phi_minus_star
    return U


def hex_projected_residual_fit(g: float, beta: float, dM: float = 1e-5,
                               amax: float = 0.02,
                               ) -> tuple[float, float, float]:
    """Amplitude expansion of the projected residual for the hexagon ansatz.

    Returns (c1, c2, c3); the reduced equation on the diagonal predicts
    c1 = dM * kappa, c2 = N and c3 = K0 + 2 K2.  Both parities occur (the
    resonance produces even powers), so a full degree-10 fit is used.
    """
    setup = CriticalSetup(g, beta, HEXAGONAL)
    nu0, corr = _corrections(setup, hexagonal=True)
    nu_2k, nu_diff = {}, {}
    for idx in (K1, K2, K3):
        q = setup.n2_modes((idx, setup.phi), (idx, setup.phi))
        two = (2 * idx[0], 2 * idx[1])
        nu_2k[two] = -setup.inv_symbol(two) @ q
    for ja, jb in ((K1, K2), (K2, K3), (K3, K1)):
        diff = (ja[0] - jb[0], ja[1] - jb[1])
        q = setup.n2_modes((ja, setup.phi), (_neg(jb), setup.phi))
        nu_diff[diff] = -2.0 * setup.inv_symbol(diff) @ q
    p_perturbed = setup.params.at_marangoni(setup.M_star + dM)

    nodes = amax * np.linspace(0.1, 1.0, 10)
    residuals = []
    with warnings.catch_warnings():
        # quintic output modes beyond the truncation are read nowhere here
        warnings.simplefilter("ignore", TruncationOverflowWarning)
        for a in nodes:
            U = hex_pattern_ansatz(setup, corr, nu0, nu_2k, nu_diff, a)
            residuals.append(setup.p_plus(rhs_full(U, p_perturbed).field[K1]))
    residuals = np.asarray(residuals)
    if np.abs(residuals.imag).max() > IMAG_TOL * max(1.0, np.abs(residuals).max()):
        raise ExtractionError("projected residual is not real")
    design = np.vander(nodes / amax, 11, increasing=True)[:, 1:]
    sol, *_ = np.linalg.lstsq(design, residuals.real, rcond=None)
    return float(sol[0] / amax), float(sol[1] / amax**2), float(sol[2] / amax**3)


def projected_residual_fit(g: float, beta: float, pattern: str = "roll",
                           dM: float = 1e-5,
                           amplitudes: np.ndarray | None = None,
                           ) -> tuple[float, float]:
    """Critical-mode projection of the full residual, separated in amplitude.

    The projected residual r(A) at M = M* + dM is an odd polynomial of degree
    at most 9 in the pattern amplitude A (the ansatz is A*modes + A^2*
    corrections and F has degree 5), so five evaluations determine its odd
    coefficients exactly.  Independent check of the extracted coefficients:
    c1 = dM * kappa and c3 = K0 (rolls) or K0 + K1 (squares).
    Returns (c1, c3).
    """
    if amplitudes is None:
        amplitudes = 0.01 * np.array([0.2, 0.4, 0.6, 0.8, 1.0])
    if len(amplitudes) < 5:
        raise DomainError("need at least five amplitudes to separate odd orders")
    setup = CriticalSetup(g, beta, SQUARE)
    nu0, corr = _corrections(setup, hexagonal=False)
    if pattern == "square":
        q22 = setup.n2_modes((K2, setup.phi), (K2, setup.phi))
        nu_2k2 = -setup.inv_symbol((0, 2)) @ q22
    p_perturbed = setup.params.at_marangoni(setup.M_star + dM)

    residuals = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationOverflowWarning)
        for a in amplitudes:
            if pattern == "roll":
                U = roll_ansatz(setup, corr, nu0, a)
            elif pattern == "square":
                U = square_ansatz(setup, corr, nu0, nu_2k2, a)
            else:
                raise DomainError(f"unknown pattern {pattern!r}")
            value = rhs_full(U, p_perturbed).field[K1]
            residuals.append(setup.p_plus(value))
    residuals = np.asarray(residuals)
    if np.abs(residuals.imag).max() > IMAG_TOL * max(1.0, np.abs(residuals).max()):
        raise ExtractionError("projected residual is not real")

    amplitudes = np.asarray(amplitudes)
    design = np.column_stack([amplitudes ** d for d in (1, 3, 5, 7, 9)])
    sol, *_ = np.linalg.lstsq(design, residuals.real, rcond=None)
    return float(sol[0]), float(sol[1])
