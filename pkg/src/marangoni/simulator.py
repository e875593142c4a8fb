"""Pseudo-spectral IMEX integration of the full quasilinear thin-film system.

The evolution form is diag(1, h) d/dt (h, theta) = F(h, theta).  Each step
treats the linear Fourier symbol implicitly (a 2x2 solve per mode, making the
stiff fourth-order terms unconditionally stable in the linear part), and the
nonlinear remainder explicitly: F is evaluated pseudospectrally with
zero-padding dealiasing, and the theta-equation's mass factor is applied by
pointwise division by h in physical space.  Divergences are assembled in
spectral space, so the k = 0 coefficient of the h-equation is exactly zero
and the film mass is conserved to machine precision.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, SimulationAbort, UsageError
from .grids import GridField, GridSpec
from .linear import FluidParams, adjoint_eigpair_plus, eigpair_plus


@dataclass(frozen=True)
class SimConfig:
    grid: GridSpec
    params: FluidParams
    dt: float
    t_end: float
    dealias_pad: int = 3
    h_floor: float = 0.2
    sample_every: int = 10
    scheme: str = "imex1"  # "imex1" or "cnab2"
    monitor_modes: tuple = ()  # wavevectors whose amplitudes are tracked
    track_front: bool = False
    front_k: float | None = None

    def __post_init__(self):
        if self.dt <= 0 or self.t_end <= 0:
            raise DomainError("dt and t_end must be positive")
        if self.dealias_pad not in (1, 2, 3):
            raise DomainError("dealias_pad must be 1, 2 or 3")
        if not (0.0 < self.h_floor < 1.0):
            raise DomainError("h_floor must lie in (0, 1)")
        if self.scheme not in ("imex1", "cnab2"):
            raise DomainError(f"unknown scheme {self.scheme!r}")


@dataclass
class SimState:
    t: float
    h: np.ndarray
    theta: np.ndarray

    def copy(self) -> "SimState":
        return SimState(self.t, self.h.copy(), self.theta.copy())


def _pad_spectrum(fk: np.ndarray, pad: int) -> np.ndarray:
    if pad == 1:
        return fk
    nx, ny = fk.shape
    out = np.zeros((pad * nx, pad * ny), dtype=complex)
    sh = np.fft.fftshift(fk)
    x0, y0 = (pad - 1) * nx // 2, (pad - 1) * ny // 2
    out[x0 : x0 + nx, y0 : y0 + ny] = sh
    return np.fft.ifftshift(out) * pad * pad


def _truncate_spectrum(fk: np.ndarray, pad: int, nx: int, ny: int) -> np.ndarray:
    if pad == 1:
        return fk
    sh = np.fft.fftshift(fk)
    x0, y0 = (pad - 1) * nx // 2, (pad - 1) * ny // 2
    return np.fft.ifftshift(sh[x0 : x0 + nx, y0 : y0 + ny]) / (pad * pad)


class _Spectral:
    """Cached wavenumber arrays, linear symbol and implicit-solve factors."""

    def __init__(self, grid: GridSpec, p: FluidParams, dt: float, pad: int,
                 implicit_weight: float = 1.0):
        self.grid = grid
        self.pad = pad
        kx, ky = grid.wavenumbers()
        # odd-order derivatives at the (self-conjugate) Nyquist bin have no
        # consistent sign; zero them and drop Nyquist content from products,
        # which also keeps the x -> -x equivariance exact on even grids
        kxd, kyd = kx.copy(), ky.copy()
        mask = np.ones(kx.shape, dtype=bool)
        if grid.nx % 2 == 0:
            kxd[grid.nx // 2, :] = 0.0
            mask[grid.nx // 2, :] = False
        if grid.ny % 2 == 0:
            kyd[:, grid.ny // 2] = 0.0
            mask[:, grid.ny // 2] = False
        self.ikx, self.iky = 1j * kxd, 1j * kyd
        self.nyq_mask = mask
        k2 = kx * kx + ky * ky
        k4 = k2 * k2
        g, beta, M = p.g, p.beta, p.M
        self.L11 = -k4 / 3.0 - (g / 3.0 - M / 2.0) * k2
        self.L12 = -(M / 2.0) * k2
        self.L21 = -k4 / 8.0 - (g / 8.0 - M / 6.0) * k2 + beta
        self.L22 = -(1.0 + M / 6.0) * k2 - beta
        w = implicit_weight * dt
        a = 1.0 - w * self.L11
        b = -w * self.L12
        c = -w * self.L21
        d = 1.0 - w * self.L22
        det = a * d - b * c
        self.inv = (d / det, -b / det, -c / det, a / det)

    def solve_implicit(self, rhs_h: np.ndarray, rhs_th: np.ndarray):
        m11, m12, m21, m22 = self.inv
        return m11 * rhs_h + m12 * rhs_th, m21 * rhs_h + m22 * rhs_th

    def apply_linear(self, hk: np.ndarray, thk: np.ndarray):
        return self.L11 * hk + self.L12 * thk, self.L21 * hk + self.L22 * thk

    def to_fine(self, fk: np.ndarray) -> np.ndarray:
        return np.fft.ifft2(_pad_spectrum(fk * self.nyq_mask, self.pad)).real

    def from_fine(self, f: np.ndarray) -> np.ndarray:
        out = _truncate_spectrum(np.fft.fft2(f), self.pad, self.grid.nx, self.grid.ny)
        return out * self.nyq_mask


def _rhs_spectral(sp: _Spectral, hk: np.ndarray, thk: np.ndarray, p: FluidParams):
    g, beta, M = p.g, p.beta, p.M
    ikx, iky = sp.ikx, sp.iky
    k2 = -(ikx * ikx + iky * iky).real

    hxk, hyk = ikx * hk, iky * hk
    thxk, thyk = ikx * thk, iky * thk
    lap_hk = -k2 * hk
    wxk = ikx * lap_hk - g * hxk
    wyk = iky * lap_hk - g * hyk

    h = 1.0 + sp.to_fine(hk)
    hx, hy = sp.to_fine(hxk), sp.to_fine(hyk)
    thx, thy = sp.to_fine(thxk), sp.to_fine(thyk)
    wx, wy = sp.to_fine(wxk), sp.to_fine(wyk)
    dphix, dphiy = hx - thx, hy - thy

    h2 = h * h
    h3 = h2 * h
    h4 = h3 * h
    jx = h3 * wx / 3.0 + (M / 2.0) * h2 * dphix
    jy = h3 * wy / 3.0 + (M / 2.0) * h2 * dphiy

    jxk, jyk = sp.from_fine(jx), sp.from_fine(jy)
    f1k = -(ikx * jxk + iky * jyk)

    heat_xk = sp.from_fine(h * thx)
    heat_yk = sp.from_fine(h * thy)
    gradsq_k = sp.from_fine(hx * hx + hy * hy)
    jgrad_k = sp.from_fine(jx * dphix + jy * dphiy)
    flux2xk = sp.from_fine(h4 * wx / 8.0 + (M / 6.0) * h3 * dphix)
    flux2yk = sp.from_fine(h4 * wy / 8.0 + (M / 6.0) * h3 * dphiy)

    f2k = (
        ikx * heat_xk
        + iky * heat_yk
        - 0.5 * gradsq_k
        - beta * (thk - hk)
        - jgrad_k
        - (ikx * flux2xk + iky * flux2yk)
    )
    return f1k, f2k


def grid_rhs(h_tilde: np.ndarray, theta_tilde: np.ndarray, grid: GridSpec,
             p: FluidParams, pad: int = 1):
    """Physical-space residuals F = (F1, F2) at (h, theta) = (1, 1) + fields."""
    sp = _Spectral(grid, p, dt=1.0, pad=pad)
    hk = np.fft.fft2(np.asarray(h_tilde, dtype=float))
    thk = np.fft.fft2(np.asarray(theta_tilde, dtype=float))
    f1k, f2k = _rhs_spectral(sp, hk, thk, p)
    return np.fft.ifft2(f1k).real, np.fft.ifft2(f2k).real


def _nonlinear_remainder(sp: _Spectral, hk, thk, h_phys, p: FluidParams):
    """N(U) = F(U) with the mass division, minus the linear symbol part."""
    f1k, f2k = _rhs_spectral(sp, hk, thk, p)
    # conservation law: the h-equation is a pure divergence
    assert f1k[0, 0] == 0.0
    f2 = np.fft.ifft2(f2k).real
    g2k = np.fft.fft2(f2 / h_phys)
    l1k, l2k = sp.apply_linear(hk, thk)
    return f1k - l1k, g2k - l2k


def _check_state(h: np.ndarray, theta: np.ndarray, h_floor: float):
    if not (np.all(np.isfinite(h)) and np.all(np.isfinite(theta))):
        raise SimulationAbort("non-finite values encountered; reduce dt")
    hmin = float(h.min())
    if hmin < h_floor:
        raise SimulationAbort(
            f"film height {hmin:.4f} fell below the floor {h_floor}; "
            "the model is degenerate at h = 0")


class Stepper:
    """Time stepper owning the spectral caches for a fixed configuration."""

    def __init__(self, config: SimConfig):
        self.config = config
        p, dt = config.params, config.dt
        if config.scheme == "imex1":
            self.sp = _Spectral(config.grid, p, dt, config.dealias_pad, 1.0)
        else:  # Crank-Nicolson / second-order Adams-Bashforth
            self.sp = _Spectral(config.grid, p, dt, config.dealias_pad, 0.5)
        self._prev_n = None

    def step(self, state: SimState) -> SimState:
        cfg = self.config
        p, dt = cfg.params, cfg.dt
        _check_state(state.h, state.theta, cfg.h_floor)
        hk = np.fft.fft2(state.h - 1.0)
        thk = np.fft.fft2(state.theta - 1.0)
        n1k, n2k = _nonlinear_remainder(self.sp, hk, thk, state.h, p)

        if cfg.scheme == "imex1":
            rhs_h = hk + dt * n1k
            rhs_th = thk + dt * n2k
        else:
            if self._prev_n is None:
                expl_1, expl_2 = n1k, n2k
            else:
                expl_1 = 1.5 * n1k - 0.5 * self._prev_n[0]
                expl_2 = 1.5 * n2k - 0.5 * self._prev_n[1]
            self._prev_n = (n1k, n2k)
            l1k, l2k = self.sp.apply_linear(hk, thk)
            rhs_h = hk + dt * (0.5 * l1k + expl_1)
            rhs_th = thk + dt * (0.5 * l2k + expl_2)

        hk_new, thk_new = self.sp.solve_implicit(rhs_h, rhs_th)
        h = 1.0 + np.fft.ifft2(hk_new).real
        theta = 1.0 + np.fft.ifft2(thk_new).real
        _check_state(h, theta, cfg.h_floor)
        return SimState(state.t + dt, h, theta)


def step(state: SimState, config: SimConfig) -> SimState:
    """One IMEX step (convenience wrapper; reuse ``Stepper`` for long runs)."""
    return Stepper(config).step(state)


@dataclass
class Diagnostics:
    """Per-snapshot scalar diagnostics of a run."""

    columns: list[str]
    rows: list[list[float]] = field(default_factory=list)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.rows)

    def column(self, name: str) -> np.ndarray:
        return self.as_array()[:, self.columns.index(name)]


class _ModeProbe:
    """Projects grid Fourier coefficients onto the critical eigendirection."""

    def __init__(self, grid: GridSpec, p: FluidParams, kvec):
        self.mi = int(round(kvec[0] * grid.Lx / (2.0 * np.pi))) % grid.nx
        self.mj = int(round(kvec[1] * grid.Ly / (2.0 * np.pi))) % grid.ny
        knorm = float(np.hypot(*kvec))
        _, phi = eigpair_plus(knorm, p)
        adj = adjoint_eigpair_plus(knorm, p).vec
        self.adj = adj
        self.denom = np.vdot(adj, phi.vec)
        self.norm = 1.0

    def __call__(self, hk, thk, nfactor) -> complex:
        a = np.array([hk[self.mi, self.mj], thk[self.mi, self.mj]]) / nfactor
        return complex(np.vdot(self.adj, a) / self.denom)


def front_position(h: np.ndarray, grid: GridSpec, k_front: float) -> float:
    """Leftmost x where the demodulated roll amplitude crosses half its maximum.

    The raw demodulation carries a 2*k_front carrier ripple, removed by a
    boxcar average over one carrier period before the crossing search.
    """
    x = grid.x()
    prof = np.abs(np.mean((h - 1.0) * np.exp(-1j * k_front * x)[:, None], axis=1))
    period_pts = max(int(round(2.0 * np.pi / k_front / (grid.Lx / grid.nx))), 1)
    kernel = np.zeros(len(prof))
    kernel[:period_pts] = 1.0 / period_pts
    kernel = np.roll(kernel, -(period_pts // 2))  # centered periodic boxcar
    prof = np.real(np.fft.ifft(np.fft.fft(prof) * np.fft.fft(kernel)))
    half = 0.5 * prof.max()
    if half <= 0.0:
        return float("nan")
    rel = prof - half
    crossings = np.nonzero(rel[:-1] * rel[1:] < 0)[0]
    if crossings.size == 0:
        return float("nan")
    i = int(crossings[0])
    frac = rel[i] / (rel[i] - rel[i + 1])
    return float(x[i] + frac * (grid.Lx / grid.nx))


def run(config: SimConfig, initial: GridField | SimState,
        snapshots: list | None = None) -> tuple[Diagnostics, SimState]:
    """Integrate to t_end, sampling diagnostics every ``sample_every`` steps."""
    if isinstance(initial, SimState):
        state = initial.copy()
    else:
        if initial.grid != config.grid:
            raise UsageError("initial field grid does not match the configuration")
        state = SimState(0.0, initial.h.copy(), initial.theta.copy())

    probes = [_ModeProbe(config.grid, config.params, kv) for kv in config.monitor_modes]
    columns = ["t", "mean_h", "l2_h", "l2_theta"]
    for i in range(len(probes)):
        columns += [f"re_A{i + 1}", f"im_A{i + 1}"]
    if config.track_front:
        columns.append("front_x")
    diag = Diagnostics(columns)

    nfactor = config.grid.nx * config.grid.ny

    def sample(s: SimState):
        row = [s.t, float(s.h.mean()),
               float(np.sqrt(np.mean((s.h - 1.0) ** 2))),
               float(np.sqrt(np.mean((s.theta - 1.0) ** 2)))]
        if probes:
            hk = np.fft.fft2(s.h - 1.0)
            thk = np.fft.fft2(s.theta - 1.0)
            for probe in probes:
                a = probe(hk, thk, nfactor)
                row += [a.real, a.imag]
        if config.track_front:
            kf = config.front_k
            if kf is None:
                raise UsageError("track_front requires front_k")
            row.append(front_position(s.h, config.grid, kf))
        diag.rows.append(row)
        if snapshots is not None:
            snapshots.append(s.copy())

    stepper = Stepper(config)
    nsteps = int(round(config.t_end / config.dt))
    sample(state)
    for n in range(1, nsteps + 1):
        state = stepper.step(state)
        if n % config.sample_every == 0 or n == nsteps:
            sample(state)
    return diag, state
