import math

import numpy as np
import pytest

from marangoni.coeffs import beta_of_g, square_coefficients
from marangoni.errors import SimulationAbort
from marangoni.grids import GridSpec
from marangoni.linear import FluidParams, critical_monotonic, eigpair_plus, kappa
from marangoni.reconstruct import front_field_periodic, natural_grid, pattern_field
from marangoni.reduced import ReducedParams, heteroclinic
from marangoni.simulator import (
    SimConfig,
    SimState,
    Stepper,
    front_position,
    grid_rhs,
    run,
    step,
)

G, B = 12.0, beta_of_g(12.0)
CRIT = critical_monotonic(G, B)
KSTAR, MSTAR = CRIT.k_star, CRIT.M_star


def small_grid(cells=2, ppc=16):
    L = 2 * math.pi / KSTAR * cells
    n = ppc * cells
    return GridSpec(n, n, L, L)


class TestStep:
    def test_conduction_state_fixed_exactly(self):
        grid = small_grid()
        cfg = SimConfig(grid, FluidParams(G, B, MSTAR), dt=0.5, t_end=1.0)
        state = SimState(0.0, np.ones((grid.nx, grid.ny)),
                         np.ones((grid.nx, grid.ny)))
        new = step(state, cfg)
        assert np.all(new.h == 1.0) and np.all(new.theta == 1.0)

    def test_grid_rhs_matches_lattice_rhs(self):
        # cross-check the two independent evaluations of F on a lattice field
        from marangoni.lattice import LatticeField, LatticeSpec
        from marangoni.model import rhs_full

        spec = LatticeSpec("square", KSTAR, truncation=8)
        rng = np.random.default_rng(0)
        f = LatticeField(spec)
        for idx in [(1, 0), (0, 1), (1, 1)]:
            v = 0.02 * (rng.standard_normal(2) + 1j * rng.standard_normal(2))
            f[idx] = v
            f[(-idx[0], -idx[1])] = np.conj(v)
        p = FluidParams(G, B, MSTAR)
        import warnings

        from marangoni.model import TruncationOverflowWarning

        with warnings.catch_warnings():
            warnings.simplefilter("ignore", TruncationOverflowWarning)
            lat = rhs_full(f, p).field

        grid = small_grid(cells=1, ppc=32)
        x, y = grid.x(), grid.y()
        h = np.zeros((grid.nx, grid.ny))
        th = np.zeros((grid.nx, grid.ny))
        for (n1, n2), v in f.coeffs.items():
            kv = spec.wavevector((n1, n2))
            phase = np.exp(1j * (kv[0] * x[:, None] + kv[1] * y[None, :]))
            h += (v[0] * phase).real
            th += (v[1] * phase).real
        f1, f2 = grid_rhs(h, th, grid, p)
        spec1 = np.fft.fft2(f1) / (grid.nx * grid.ny)
        spec2 = np.fft.fft2(f2) / (grid.nx * grid.ny)
        for (n1, n2), v in lat.coeffs.items():
            if abs(n1) > 4 or abs(n2) > 4:
                continue
            i, j = n1 % grid.nx, n2 % grid.ny
            assert abs(spec1[i, j] - v[0]) < 1e-12
            assert abs(spec2[i, j] - v[1]) < 1e-12

    def test_mass_conserved_to_machine_precision(self):
        grid = small_grid()
        rng = np.random.default_rng(1)
        h = 1.0 + 0.02 * rng.standard_normal((grid.nx, grid.ny))
        theta = 1.0 + 0.02 * rng.standard_normal((grid.nx, grid.ny))
        cfg = SimConfig(grid, FluidParams(G, B, MSTAR), dt=0.05, t_end=5.0,
                        sample_every=10)
        diag, final = run(cfg, SimState(0.0, h, theta))
        mean_h = diag.column("mean_h")
        assert np.abs(mean_h - mean_h[0]).max() < 1e-13

    def test_degeneracy_abort(self):
        grid = small_grid(cells=1, ppc=16)
        h = np.full((grid.nx, grid.ny), 0.15)
        theta = np.ones((grid.nx, grid.ny))
        cfg = SimConfig(grid, FluidParams(G, B, MSTAR), dt=0.01, t_end=1.0)
        with pytest.raises(SimulationAbort):
            step(SimState(0.0, h, theta), cfg)

    def test_reflection_equivariance(self):
        grid = small_grid(cells=2, ppc=8)
        rng = np.random.default_rng(2)
        h = 1.0 + 0.02 * rng.standard_normal((grid.nx, grid.ny))
        theta = 1.0 + 0.02 * rng.standard_normal((grid.nx, grid.ny))

        def reflect(a):
            return np.roll(a[::-1, :], 1, axis=0)

        cfg = SimConfig(grid, FluidParams(G, B, MSTAR - 0.05), dt=0.02,
                        t_end=0.2)
        stepper = Stepper(cfg)
        s1 = SimState(0.0, h.copy(), theta.copy())
        s2 = SimState(0.0, reflect(h), reflect(theta))
        for _ in range(10):
            s1 = stepper.step(s1)
            s2 = stepper.step(s2)
        assert np.abs(reflect(s1.h) - s2.h).max() < 1e-8
        assert np.abs(reflect(s1.theta) - s2.theta).max() < 1e-8

    def test_dt_refinement_first_order(self):
        grid = small_grid(cells=1, ppc=16)
        x = grid.x()[:, None]
        h0 = 1.0 + 0.01 * np.cos(KSTAR * x) * np.ones((1, grid.ny))
        th0 = 1.0 + 0.005 * np.cos(KSTAR * x) * np.ones((1, grid.ny))
        p = FluidParams(G, B, MSTAR - 0.05)

        def solve(dt):
            cfg = SimConfig(grid, p, dt=dt, t_end=1.0)
            _, fin = run(cfg, SimState(0.0, h0.copy(), th0.copy()))
            return fin.h

        err_coarse = np.abs(solve(0.05) - solve(0.0125)).max()
        err_fine = np.abs(solve(0.025) - solve(0.0125)).max()
        # halving dt roughly halves the defect (first order)
        assert err_fine < 0.75 * err_coarse

    def test_cnab2_more_accurate(self):
        grid = small_grid(cells=1, ppc=16)
        x = grid.x()[:, None]
        h0 = 1.0 + 0.02 * np.cos(KSTAR * x) * np.ones((1, grid.ny))
        th0 = 1.0 + 0.01 * np.cos(KSTAR * x) * np.ones((1, grid.ny))
        p = FluidParams(G, B, MSTAR - 0.05)

        def solve(dt, scheme):
            cfg = SimConfig(grid, p, dt=dt, t_end=1.0, scheme=scheme)
            _, fin = run(cfg, SimState(0.0, h0.copy(), th0.copy()))
            return fin.h

        ref = solve(0.002, "cnab2")
        err1 = np.abs(solve(0.02, "imex1") - ref).max()
        err2 = np.abs(solve(0.02, "cnab2") - ref).max()
        assert err2 < 0.5 * err1


class TestLinearRates:
    def test_subcritical_decay(self):
        grid = small_grid()
        rng = np.random.default_rng(3)
        h = 1.0 + 0.01 * rng.standard_normal((grid.nx, grid.ny))
        h += 1.0 - h.mean()
        theta = 1.0 + 0.01 * rng.standard_normal((grid.nx, grid.ny))
        cfg = SimConfig(grid, FluidParams(G, B, MSTAR - 0.1), dt=0.05,
                        t_end=50.0, sample_every=100)
        diag, _ = run(cfg, SimState(0.0, h, theta))
        l2 = diag.column("l2_h")
        assert l2[-1] < 0.5 * l2[0]
        assert diag.column("l2_theta")[-1] < 0.5 * diag.column("l2_theta")[0]

    def test_supercritical_growth_rate(self):
        eps, M0 = 0.1, 1.0
        M = MSTAR + eps * eps * M0
        expected = eps * eps * M0 * kappa(G, B)
        grid = GridSpec(64, 8, 2 * math.pi / KSTAR * 4, 2 * math.pi / KSTAR)
        phi = eigpair_plus(KSTAR, FluidParams(G, B, M))[1].vec.real
        x = grid.x()[:, None]
        amp = 1e-4
        h = 1.0 + 2 * amp * np.cos(KSTAR * x) * phi[0] * np.ones((1, 8))
        th = 1.0 + 2 * amp * np.cos(KSTAR * x) * phi[1] * np.ones((1, 8))
        cfg = SimConfig(grid, FluidParams(G, B, M), dt=0.02, t_end=40.0,
                        sample_every=100, monitor_modes=((KSTAR, 0.0),))
        diag, _ = run(cfg, SimState(0.0, h, th))
        amps = np.hypot(diag.column("re_A1"), diag.column("im_A1"))
        slope = np.polyfit(diag.column("t"), np.log(amps), 1)[0]
        assert slope == pytest.approx(expected, rel=0.2)


@pytest.mark.slow
class TestNonlinearOracles:
    def test_roll_pattern_persists(self):
        # supercritical rolls initialized at the leading-order amplitude stay
        # within a fraction of it over a long run
        mu = 1e-3
        grid = natural_grid("square", KSTAR, cells=4, points_per_cell=8)
        fld = pattern_field("roll", G, B, mu, 1.0, grid)
        cfg = SimConfig(grid, FluidParams(G, B, MSTAR + mu), dt=0.1,
                        t_end=200.0, sample_every=200,
                        monitor_modes=((KSTAR, 0.0),))
        diag, _ = run(cfg, SimState(0.0, fld.h, fld.theta))
        amps = np.hypot(diag.column("re_A1"), diag.column("im_A1"))
        assert abs(amps[-1] - amps[0]) < 0.2 * amps[0]

    def test_front_speed_matches_imposed_c(self):
        # invasion of the conduction state by rolls, built from the R -> T
        # orbit; the measured interface speed tracks the imposed c
        eps, M0, c = 0.15, 2.0, 1.0
        sq, _ = square_coefficients(G, B)
        rp = ReducedParams("square", c, M0, sq.kappa, sq.K0, K1=sq.K1,
                           epsilon=eps)
        orbit = heteroclinic(rp, "R", "T", tol=1e-3)
        span = (orbit.xi[-1] - orbit.xi[0]) / eps**2
        cell = 2 * math.pi / KSTAR
        ncells = int(math.ceil(2.2 * span / cell))
        grid = GridSpec(8 * ncells, 4, ncells * cell, cell)
        fld = front_field_periodic("square", orbit, eps, c, G, B, grid)
        M = MSTAR + eps * eps * M0
        cfg = SimConfig(grid, FluidParams(G, B, M), dt=0.1, t_end=40.0,
                        sample_every=40, dealias_pad=2,
                        monitor_modes=((KSTAR, 0.0),), track_front=True,
                        front_k=KSTAR)
        diag, _ = run(cfg, SimState(0.0, fld.h, fld.theta))
        t = diag.column("t")
        fx = diag.column("front_x")
        sel = (t >= 10.0) & (t <= 40.0)
        slope = np.polyfit(t[sel], fx[sel], 1)[0]
        assert slope == pytest.approx(c, rel=0.25)
        mean_h = diag.column("mean_h")
        assert np.abs(mean_h - mean_h[0]).max() < 1e-12


class TestFrontPosition:
    def test_tracks_known_interface(self):
        # periodic plateau with interfaces at 123 and 323; the leftmost
        # half-maximum crossing is the first one
        grid = GridSpec(512, 4, 400.0, 4.0)
        x = grid.x()[:, None]
        k = 1.3
        envelope = 0.05 / (1.0 + np.exp(-(x - 123.0) / 5.0)) \
            - 0.05 / (1.0 + np.exp(-(x - 323.0) / 5.0))
        h = 1.0 + 2 * envelope * np.cos(k * x) * np.ones((1, 4))
        pos = front_position(h, grid, k)
        assert pos == pytest.approx(123.0, abs=3.0)
