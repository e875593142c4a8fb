"""Reduced travelling-front ODE systems and their heteroclinic orbits.

In the co-moving frame the leading-order amplitude dynamics is the planar
system dA/dXi = f(A) with

    square:     f1 = -(M0 kappa A1 + K0 A1^3 + K1 A1 A2^2) / c        (A1 <-> A2)
    hexagonal:  f1 = -(M0 kappa A1 + N0 A2^2 + K0 A1^3 + 2 K2 A1 A2^2) / c
                f2 = -(M0 kappa A2 + N0 A1 A2 + (K0+K2) A2^3 + K2 A2 A1^2) / c

restricted to real amplitudes (square) and to the invariant set A2 = A3
(hexagonal).  Both systems carry a Lyapunov function that decreases strictly
along orbits, so connections between fixed points are found by shooting along
the appropriate eigendirections.  Fixed-point positions and the T/R/S/H
eigenvalues come from closed forms (cross-checked against a finite-difference
Jacobian); mixed-mode eigenvalues are numerical only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from numpy.polynomial import polynomial as npol
from scipy.integrate import solve_ivp

from .errors import (
    BranchNotFoundError,
    ConnectionNotFoundError,
    DomainError,
    ExtractionError,
)
from .lattice import HEXAGONAL, SQUARE, LatticeSpec
from .linear import FluidParams, symbol_matrix_complex

EIGEN_CHECK_TOL = 1e-6


class Label(str, Enum):
    T = "T"
    R = "R"
    S = "S"
    H1p = "H1p"
    H1m = "H1m"
    H2p = "H2p"
    H2m = "H2m"
    MM_plus = "MM_plus"
    MM_minus = "MM_minus"


class Stability(str, Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"
    SADDLE = "saddle"


@dataclass(frozen=True)
class ReducedParams:
    """Coefficients of the reduced front system in a fixed regime."""

    kind: str
    c: float
    M0: float
    kappa: float
    K0: float
    K1: float | None = None
    K2: float | None = None
    N0: float | None = None
    epsilon: float = 0.1

    def __post_init__(self):
        if self.kind not in (SQUARE, HEXAGONAL):
            raise DomainError(f"unknown lattice kind {self.kind!r}")
        if self.c <= 0:
            raise DomainError("front speed c must be positive")
        if self.kind == SQUARE and self.K1 is None:
            raise DomainError("square systems need K1")
        if self.kind == HEXAGONAL:
            if self.K2 is None or self.N0 is None:
                raise DomainError("hexagonal systems need K2 and N0")
            if self.N0 <= 0:
                raise DomainError(
                    "convention N0 > 0; for N0 < 0 apply the symmetry "
                    "N -> -N, A_j -> -A_j")
        if self.epsilon <= 0:
            raise DomainError("epsilon must be positive")

    @property
    def m0k(self) -> float:
        return self.M0 * self.kappa

    @classmethod
    def from_coefficients(cls, coeffs, c: float, M0: float,
                          epsilon: float = 0.1) -> "ReducedParams":
        """Wire an AmplitudeCoefficients record into a reduced system."""
        if coeffs.K1 is not None:
            return cls(SQUARE, c, M0, coeffs.kappa, coeffs.K0, K1=coeffs.K1,
                       epsilon=epsilon)
        n0 = coeffs.N / epsilon
        sign = 1.0 if n0 > 0 else -1.0
        # N0 < 0 is mapped back to the N0 > 0 convention via A_j -> -A_j
        return cls(HEXAGONAL, c, M0, coeffs.kappa, coeffs.K0, K2=coeffs.K2,
                   N0=sign * n0, epsilon=epsilon)


@dataclass
class FixedPointInfo:
    label: Label
    position: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns are the eigenvectors
    stability: Stability


@dataclass
class HeteroclinicOrbit:
    source: FixedPointInfo
    target: FixedPointInfo
    xi: np.ndarray
    samples: np.ndarray  # shape (n, 2)
    convergence_gap: float


def square_rhs(A, rp: ReducedParams) -> np.ndarray:
    a1, a2 = A
    m = rp.m0k
    return np.array([
        -(m * a1 + rp.K0 * a1**3 + rp.K1 * a1 * a2**2) / rp.c,
        -(m * a2 + rp.K0 * a2**3 + rp.K1 * a2 * a1**2) / rp.c,
    ])


def hex_rhs(A, rp: ReducedParams) -> np.ndarray:
    a1, a2 = A
    m = rp.m0k
    return np.array([
        -(m * a1 + rp.N0 * a2**2 + rp.K0 * a1**3 + 2.0 * rp.K2 * a1 * a2**2) / rp.c,
        -(m * a2 + rp.N0 * a1 * a2 + (rp.K0 + rp.K2) * a2**3 + rp.K2 * a2 * a1**2) / rp.c,
    ])


def rhs(A, rp: ReducedParams) -> np.ndarray:
    return square_rhs(A, rp) if rp.kind == SQUARE else hex_rhs(A, rp)


def lyapunov(A, rp: ReducedParams) -> float:
    a1, a2 = A
    m, c = rp.m0k, rp.c
    if rp.kind == SQUARE:
        return (m / (2 * c)) * (a1**2 + a2**2) + (rp.K0 / (4 * c)) * (a1**4 + a2**4) \
            + (rp.K1 / (2 * c)) * a1**2 * a2**2
    return (m / (2 * c)) * (a1**2 + 2 * a2**2) + (rp.N0 / c) * a1 * a2**2 \
        + (rp.K0 / (4 * c)) * a1**4 + (rp.K2 / c) * a1**2 * a2**2 \
        + ((rp.K0 + rp.K2) / (2 * c)) * a2**4


def numerical_jacobian(A, rp: ReducedParams, step: float = 1e-6) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    J = np.empty((2, 2))
    for j in range(2):
        e = np.zeros(2)
        e[j] = step * max(1.0, abs(A[j]))
        J[:, j] = (rhs(A + e, rp) - rhs(A - e, rp)) / (2 * e[j])
    return J


def _classify(eigenvalues) -> Stability:
    if np.all(eigenvalues.real < 0):
        return Stability.STABLE
    if np.all(eigenvalues.real > 0):
        return Stability.UNSTABLE
    return Stability.SADDLE


def _make_fp(label, position, rp, closed_eigs=None, closed_vecs=None) -> FixedPointInfo:
    position = np.asarray(position, dtype=float)
    res = np.linalg.norm(rhs(position, rp))
    if res > 1e-10 * max(1.0, np.linalg.norm(position)):
        raise ExtractionError(f"{label} position residual {res:.2e}")
    J = numerical_jacobian(position, rp)
    evals, evecs = np.linalg.eig(J)
    if np.abs(evals.imag).max() > 1e-8 * max(1.0, np.abs(evals).max()):
        raise ExtractionError(f"{label} has complex eigenvalues {evals}")
    evals, evecs = evals.real, evecs.real

    if closed_eigs is not None:
        closed_eigs = np.asarray(closed_eigs, dtype=float)
        # pair each closed-form eigenvalue with the nearest numerical one
        order = []
        remaining = list(range(2))
        for ce in closed_eigs:
            i = min(remaining, key=lambda j: abs(evals[j] - ce))
            remaining.remove(i)
            order.append(i)
        evals, evecs = evals[order], evecs[:, order]
        scale = max(np.abs(closed_eigs).max(), 1.0)
        if np.abs(evals - closed_eigs).max() > EIGEN_CHECK_TOL * scale:
            raise ExtractionError(
                f"{label}: closed-form eigenvalues {closed_eigs} disagree with "
                f"numerical Jacobian {evals}")
        evals = closed_eigs
        if closed_vecs is not None:
            evecs = np.asarray(closed_vecs, dtype=float)
            evecs = evecs / np.linalg.norm(evecs, axis=0)
    else:
        order = np.argsort(-evals)
        evals, evecs = evals[order], evecs[:, order]
    return FixedPointInfo(label, position, evals, evecs, _classify(evals))


def fixed_points(rp: ReducedParams) -> list[FixedPointInfo]:
    """All fixed points existing in this regime, with stability data."""
    m, c = rp.m0k, rp.c
    out = [_make_fp(Label.T, (0.0, 0.0), rp,
                    closed_eigs=[-m / c, -m / c],
                    closed_vecs=np.eye(2))]

    if m * rp.K0 < 0:
        r = math.sqrt(-m / rp.K0)
        if rp.kind == SQUARE:
            lam2 = (rp.K1 - rp.K0) * m / (c * rp.K0)
        else:
            lam2 = -(rp.K0 - rp.K2) * m / (c * rp.K0) - rp.N0 * r / c
        out.append(_make_fp(Label.R, (r, 0.0), rp,
                            closed_eigs=[2 * m / c, lam2],
                            closed_vecs=np.array([[1.0, 0.0], [0.0, 1.0]])))

    if rp.kind == SQUARE:
        if m * (rp.K0 + rp.K1) < 0:
            s = math.sqrt(-m / (rp.K0 + rp.K1))
            lam2 = -2 * (rp.K1 - rp.K0) * m / (c * (rp.K0 + rp.K1))
            out.append(_make_fp(Label.S, (s, s), rp,
                                closed_eigs=[2 * m / c, lam2],
                                closed_vecs=np.array([[1.0, -1.0], [1.0, 1.0]])))
        return out

    # hexagonal branches
    k02 = rp.K0 + 2.0 * rp.K2
    disc = rp.N0**2 - 4.0 * m * k02
    if disc > 0 and k02 != 0:
        sqrt_d = math.sqrt(disc)
        for sign_branch, lab1, lab2 in ((+1, Label.H1p, Label.H2p),
                                        (-1, Label.H1m, Label.H2m)):
            x = (-rp.N0 - sign_branch * sqrt_d) / (2.0 * k02)
            lam1 = (m - k02 * x * x) / c
            lam2 = (-2.0 * m - 2.0 * (2.0 * rp.K0 + rp.K2) * x * x) / c
            out.append(_make_fp(lab1, (x, x), rp, closed_eigs=[lam1, lam2],
                                closed_vecs=np.array([[1.0, -2.0], [1.0, 1.0]])))
            out.append(_make_fp(lab2, (x, -x), rp, closed_eigs=[lam1, lam2],
                                closed_vecs=np.array([[1.0, -2.0], [-1.0, -1.0]])))

    if rp.K0 != rp.K2 and rp.K0 + rp.K2 != 0:
        rad = -(rp.K0 * rp.N0**2 + (rp.K0 - rp.K2) ** 2 * m) / (rp.K0 + rp.K2)
        if rad > 0:
            a1 = rp.N0 / (rp.K0 - rp.K2)
            a2 = math.sqrt(rad) / (rp.K0 - rp.K2)
            out.append(_make_fp(Label.MM_plus, (a1, a2), rp))
            out.append(_make_fp(Label.MM_minus, (a1, -a2), rp))
    return out


def fixed_point_map(rp: ReducedParams) -> dict[Label, FixedPointInfo]:
    return {fp.label: fp for fp in fixed_points(rp)}


# -- heteroclinic connections -------------------------------------------------


def _integrate_to(rp: ReducedParams, start: np.ndarray, endpoint: np.ndarray,
                  tol: float, xi_cap: float, reverse: bool,
                  ball: float) -> tuple[np.ndarray, np.ndarray, float] | None:
    sign = -1.0 if reverse else 1.0

    def f(_, y):
        return sign * rhs(y, rp)

    def arrived(_, y):
        return np.linalg.norm(y - endpoint) - 0.5 * tol

    arrived.terminal = True
    arrived.direction = -1

    def escaped(_, y):
        return np.linalg.norm(y) - ball

    escaped.terminal = True
    escaped.direction = 1

    def stagnated(_, y):
        # parked at some other equilibrium (e.g. a symmetry image outside
        # the labelled set); the arrived event fires first near the endpoint
        return np.linalg.norm(rhs(y, rp)) - 1e-10

    stagnated.terminal = True
    stagnated.direction = -1

    # max_step keeps the returned samples dense enough for reconstruction
    sol = solve_ivp(f, (0.0, xi_cap), start, method="RK45",
                    rtol=1e-9, atol=1e-12, events=(arrived, escaped, stagnated),
                    max_step=0.09)
    if sol.t_events[0].size == 0:
        return None
    xi, ys = sol.t, sol.y.T
    gap = float(np.linalg.norm(ys[-1] - endpoint))
    if reverse:
        xi = (xi[-1] - xi)[::-1]
        ys = ys[::-1]
    return xi, ys, gap


def heteroclinic(rp: ReducedParams, source_label, target_label,
                 delta0: float | None = None, tol: float = 1e-6,
                 xi_cap: float | None = None) -> HeteroclinicOrbit:
    """Shoot for the connecting orbit between two fixed points.

    A saddle source is left along its unstable eigenvector; if the source is
    a node but the target is a saddle, the orbit is found by integrating the
    time-reversed flow from the target along its stable eigenvector
    (a forward shot from a node cannot hit the saddle's codimension-one
    stable set).  Node-to-node connections along an invariant line are shot
    along the chord.  Both signs of the offset are tried before failing.
    """
    source_label, target_label = Label(source_label), Label(target_label)
    fps = fixed_point_map(rp)
    for lab in (source_label, target_label):
        if lab not in fps:
            raise BranchNotFoundError(f"fixed point {lab.value} does not exist "
                                      "in this regime")
    source, target = fps[source_label], fps[target_label]
    if xi_cap is None:
        xi_cap = 1e4 / rp.c
    scale = np.linalg.norm(source.position)
    if delta0 is None:
        delta0 = 1e-4 * (scale if scale > 0 else 1.0)
    ball = 10.0 * max(1.0, *(np.linalg.norm(fp.position) for fp in fps.values()))

    attempts = []
    if source.stability == Stability.SADDLE:
        v = source.eigenvectors[:, int(np.argmax(source.eigenvalues))]
        towards = target.position - source.position
        signs = (+1.0, -1.0) if float(v @ towards) >= 0 else (-1.0, +1.0)
        for s in signs:
            attempts.append(("forward", source.position + s * delta0 * v))
    elif target.stability == Stability.SADDLE:
        v = target.eigenvectors[:, int(np.argmin(target.eigenvalues))]
        towards = source.position - target.position
        signs = (+1.0, -1.0) if float(v @ towards) >= 0 else (-1.0, +1.0)
        for s in signs:
            attempts.append(("backward", target.position + s * delta0 * v))
    else:
        chord = target.position - source.position
        chord = chord / np.linalg.norm(chord)
        attempts.append(("forward", source.position + delta0 * chord))
        attempts.append(("forward", source.position - delta0 * chord))

    for direction, start in attempts:
        reverse = direction == "backward"
        endpoint = source.position if reverse else target.position
        res = _integrate_to(rp, start, endpoint, tol, xi_cap, reverse, ball)
        if res is None:
            continue
        xi, ys, gap = res
        return HeteroclinicOrbit(source, target, xi, ys, gap)
    raise ConnectionNotFoundError(
        f"no heteroclinic orbit from {source_label.value} to {target_label.value} found")


# -- phase portraits ----------------------------------------------------------


@dataclass
class Trajectory:
    seed: np.ndarray
    xi: np.ndarray
    samples: np.ndarray
    omega_label: str


@dataclass
class PhasePortrait:
    params: ReducedParams
    fixed_points: list[FixedPointInfo]
    trajectories: list[Trajectory] = field(default_factory=list)


def phase_portrait(rp: ReducedParams, n_seeds: int = 7, extent: float | None = None,
                   xi_max: float | None = None) -> PhasePortrait:
    """Forward trajectories from a seed grid, annotated with their omega limits."""
    fps = fixed_points(rp)
    if extent is None:
        extent = 1.5 * max(1e-2, *(np.linalg.norm(fp.position) for fp in fps))
    if xi_max is None:
        xi_max = 80.0 / rp.c
    portrait = PhasePortrait(rp, fps)
    ball = 10.0 * extent

    def f(_, y):
        return rhs(y, rp)

    def escaped(_, y):
        return np.linalg.norm(y) - ball

    escaped.terminal = True

    grid = np.linspace(-extent, extent, n_seeds)
    for a1 in grid:
        for a2 in grid:
            seed = np.array([a1, a2])
            sol = solve_ivp(f, (0.0, xi_max), seed, method="RK45",
                            rtol=1e-9, atol=1e-12, events=(escaped,),
                            max_step=xi_max / 100.0)
            ys = sol.y.T
            end = ys[-1]
            label = "unbounded" if sol.status == 1 else "none"
            if sol.status != 1:
                dists = [np.linalg.norm(end - fp.position) for fp in fps]
                i = int(np.argmin(dists))
                if dists[i] < 1e-3 * max(1.0, extent):
                    label = fps[i].label.value
            portrait.trajectories.append(Trajectory(seed, sol.t, ys, label))
    return portrait


# -- spatial-dynamics dispersion relation -------------------------------------


def spatial_dispersion(c: float, mu: complex, k: np.ndarray, p: FluidParams) -> complex:
    """det(L_M(e1 mu + i k) + c mu I) for complex spatial eigenvalue mu."""
    k = np.asarray(k, dtype=float)
    arg = np.array([mu + 1j * k[0], 1j * k[1]], dtype=complex)
    L = symbol_matrix_complex(arg, p)
    return complex(np.linalg.det(L + c * mu * np.eye(2)))


def spatial_dispersion_poly(c: float, k: np.ndarray, p: FluidParams) -> np.ndarray:
    """Coefficients (ascending) of mu -> det(L(e1 mu + i k) + c mu I)."""
    k = np.asarray(k, dtype=float)
    g, beta, M = p.g, p.beta, p.M
    # s(mu) = (mu + i kx)^2 + (i ky)^2
    s = np.array([-(k[0] ** 2 + k[1] ** 2), 2j * k[0], 1.0], dtype=complex)
    s2 = npol.polymul(s, s)
    l11 = npol.polyadd(-s2 / 3.0, (g / 3.0 - M / 2.0) * s)
    l12 = (M / 2.0) * s
    l21 = npol.polyadd(npol.polyadd(-s2 / 8.0, (g / 8.0 - M / 6.0) * s),
                       np.array([beta], dtype=complex))
    l22 = npol.polyadd((1.0 + M / 6.0) * s, np.array([-beta], dtype=complex))
    cmu = np.array([0.0, c], dtype=complex)
    d = npol.polysub(npol.polymul(npol.polyadd(l11, cmu), npol.polyadd(l22, cmu)),
                     npol.polymul(l12, l21))
    return d


@dataclass
class SpectralGapReport:
    delta: float
    central_ok: bool
    hyperbolic_ok: bool
    details: dict


def spectral_gap_scan(c: float, p: FluidParams, spec: LatticeSpec,
                      max_distance: int = 4,
                      central_tol: float = 1e-6) -> SpectralGapReport:
    """Root survey of the spatial dispersion relation over lattice modes.

    For modes in Gamma_0 (distance <= 1) exactly one root sits at mu = 0 and
    every other root has nonzero real part; hyperbolic modes have no roots
    near the imaginary axis at all.  ``delta`` is the smallest |Re mu| among
    non-central roots, i.e. the spectral gap; within |Re mu| < delta/2 the
    only roots are the central ones.
    """
    details = {}
    central_ok = True
    hyperbolic_ok = True
    delta = math.inf
    for idx in spec.indices():
        if spec.distance(idx) > max_distance:
            continue
        k = spec.wavevector(idx)
        roots = npol.polyroots(spatial_dispersion_poly(c, k, p))
        in_gamma0 = spec.distance(idx) <= 1
        central = [r for r in roots if abs(r) < central_tol]
        others = [r for r in roots if abs(r) >= central_tol]
        if in_gamma0:
            if len(central) != 1:
                central_ok = False
        else:
            if central:
                hyperbolic_ok = False
        for r in others:
            if abs(r.real) < 1e-9:
                hyperbolic_ok = False
            delta = min(delta, abs(r.real))
        details[idx] = roots
    return SpectralGapReport(delta, central_ok, hyperbolic_ok, details)


# -- canonical regimes for the phase-plane figures ----------------------------

SQUARE_REGIMES = {
    "a": ReducedParams(SQUARE, c=1.0, M0=1.0, kappa=1.0, K0=-2.0, K1=-1.0),
    "b": ReducedParams(SQUARE, c=1.0, M0=-1.0, kappa=1.0, K0=1.0, K1=3.0),
    "c": ReducedParams(SQUARE, c=1.0, M0=1.0, kappa=1.0, K0=-3.0, K1=-4.0),
    "d": ReducedParams(SQUARE, c=1.0, M0=-1.0, kappa=1.0, K0=3.0, K1=2.0),
}

# thresholds for K0 = -1, K2 = -2, N0 = 1: the mixed modes bifurcate from R at
# M0 kappa = 1 and cross the diagonal at M0 kappa = 4
_HEX = dict(kind=HEXAGONAL, c=1.0, kappa=1.0, K0=-1.0, K2=-2.0, N0=1.0)
HEX_REGIMES = {
    "a": ReducedParams(M0=-0.03, **_HEX),
    "b": ReducedParams(M0=0.5, **_HEX),
    "c": ReducedParams(M0=2.0, **_HEX),
    "d": ReducedParams(M0=6.0, **_HEX),
}

SQUARE_CONNECTIONS = {
    "a": [(Label.R, Label.T), (Label.S, Label.T), (Label.S, Label.R)],
    "b": [(Label.T, Label.R), (Label.T, Label.S), (Label.S, Label.R)],
    "c": [(Label.R, Label.T), (Label.S, Label.T), (Label.R, Label.S)],
    "d": [(Label.T, Label.R), (Label.T, Label.S), (Label.R, Label.S)],
}

HEX_CONNECTIONS = {
    "a": [(Label.T, Label.H1m), (Label.H1p, Label.H1m),
          (Label.T, Label.H2m), (Label.H2p, Label.H2m)],
    "b": [(Label.R, Label.T), (Label.H1p, Label.T), (Label.H1m, Label.T),
          (Label.H2p, Label.T), (Label.H2m, Label.T),
          (Label.H1p, Label.R), (Label.H2p, Label.R),
          (Label.H1p, Label.H2m), (Label.H2p, Label.H1m)],
    "c": [(Label.R, Label.T), (Label.H1p, Label.T), (Label.H1m, Label.T),
          (Label.H2p, Label.T), (Label.H2m, Label.T),
          (Label.H1p, Label.H2m), (Label.H2p, Label.H1m),
          (Label.R, Label.MM_plus), (Label.H1p, Label.MM_plus),
          (Label.MM_plus, Label.T),
          (Label.R, Label.MM_minus), (Label.H2p, Label.MM_minus),
          (Label.MM_minus, Label.T)],
    "d": [(Label.R, Label.T), (Label.H1p, Label.T), (Label.H1m, Label.T),
          (Label.H2p, Label.T), (Label.H2m, Label.T),
          (Label.MM_plus, Label.T), (Label.MM_plus, Label.H1p),
          (Label.MM_plus, Label.H2m),
          (Label.MM_minus, Label.T), (Label.MM_minus, Label.H2p),
          (Label.MM_minus, Label.H1m),
          (Label.R, Label.H1p), (Label.R, Label.H2p)],
}
