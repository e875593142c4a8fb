"""Acceptance checks: each criterion returns a pass/fail record.

The CLI ``verify`` command runs every criterion and prints one line per
check; the pytest suite asserts them individually.  Tolerances are fixed
here, not configurable.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import coeffs as C
from . import reduced as R
from . import simulator as S
from .errors import ConnectionNotFoundError
from .grids import GridSpec
from .lattice import HEXAGONAL, SQUARE, LatticeSpec
from .linear import (
    FluidParams,
    Regime,
    classify_regime,
    critical_monotonic,
    critical_oscillatory,
    eigpair_plus,
)
from .reduced import Label, Stability

TURING_G, TURING_BETA = 12.0, 0.1865184573
TURING_MSTAR, TURING_KSTAR = 8.5144749311, 1.2843299054
OSC_G, OSC_BETA = 12.0, 40.0
OSC_MSTAR, OSC_KSTAR = 36.9089023002, 3.3097509196

OMEGA_M_SAMPLES = [(12.0, 0.1865184573), (10.0, 1.0), (4.0, 2.5)]


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def _check(name):
    def wrap(fn):
        def run() -> CheckResult:
            t0 = time.perf_counter()
            try:
                passed, detail = fn()
            except Exception as exc:  # a crash is a failure, not an abort
                passed, detail = False, f"raised {type(exc).__name__}: {exc}"
            return CheckResult(name, bool(passed), detail,
                               time.perf_counter() - t0)

        run._name = name
        return run

    return wrap


@_check("critical-monotonic-values")
def check_critical_monotonic():
    crit = critical_monotonic(TURING_G, TURING_BETA)
    err_m = abs(crit.M_star - TURING_MSTAR)
    err_k = abs(crit.k_star - TURING_KSTAR)
    return (err_m < 1e-8 and err_k < 1e-8,
            f"M*={crit.M_star:.10f} (err {err_m:.1e}), k*={crit.k_star:.10f} (err {err_k:.1e})")


@_check("critical-oscillatory-values")
def check_critical_oscillatory():
    crit = critical_oscillatory(OSC_G, OSC_BETA)
    err_m = abs(crit.M_star - OSC_MSTAR)
    err_k = abs(crit.k_star - OSC_KSTAR)
    return (err_m < 1e-8 and err_k < 1e-8,
            f"M*={crit.M_star:.10f} (err {err_m:.1e}), k*={crit.k_star:.10f} (err {err_k:.1e})")


@_check("beta-of-g-curve")
def check_beta_curve():
    err = abs(C.beta_of_g(12.0) - TURING_BETA)
    if err >= 1e-8:
        return False, f"beta_of_g(12) off by {err:.2e}"
    worst = 0.0
    for g in (2.0, 6.0, 12.0, 16.0):
        hx, _ = C.hex_coefficients(g, C.beta_of_g(g))
        scale = max(abs(hx.K0), abs(hx.K2), abs(hx.N), abs(hx.kappa))
        worst = max(worst, abs(hx.N) / scale)
    return worst < 1e-6, f"beta_of_g(12) err {err:.1e}; max |N|/scale on curve {worst:.2e}"


@_check("K0-sign-change-on-curve")
def check_k0_sign_change():
    g_root = C.K0_sign_change_on_curve(8.0, 12.0)
    if abs(g_root - 10.0) > 0.2:
        return False, f"K0 root at g={g_root:.3f}, expected 10 +/- 0.2"
    # sampled over the range where the hexagonal front analysis applies
    # (g in (10, 18)); for g below ~8 the full-PDE residual oracle puts
    # K2 > 0 on the curve, see the hexagonal-residual test
    k2_values = []
    for g in (10.0, 12.0, 14.0, 16.0):
        hx, _ = C.hex_coefficients(g, C.beta_of_g(g))
        k2_values.append(hx.K2)
    ok = all(k2 < 0 for k2 in k2_values)
    return ok, f"K0 root at g={g_root:.3f}; K2 on curve (g=10..16): " + \
        ", ".join(f"{v:.3f}" for v in k2_values)


@_check("coefficient-residual-oracle")
def check_residual_oracle():
    dM = 1e-5
    worst = 0.0
    lines = []
    for g, beta in OMEGA_M_SAMPLES:
        sq, _ = C.square_coefficients(g, beta)
        c1r, c3r = C.projected_residual_fit(g, beta, "roll", dM=dM)
        c1s, c3s = C.projected_residual_fit(g, beta, "square", dM=dM)
        errs = (abs(c1r / dM - sq.kappa) / abs(sq.kappa),
                abs(c3r - sq.K0) / abs(sq.K0),
                abs(c1s / dM - sq.kappa) / abs(sq.kappa),
                abs(c3s - (sq.K0 + sq.K1)) / abs(sq.K0 + sq.K1))
        worst = max(worst, *errs)
        lines.append(f"({g},{beta:.3g}): max rel {max(errs):.1e}")
    return worst < 1e-3, "; ".join(lines)


@_check("Mm-below-48")
def check_mm_below_48():
    gs = np.linspace(1.0, 20.0, 20)
    betas = np.linspace(0.1, 5.0, 20)
    worst = -math.inf
    for g in gs:
        for b in betas:
            if classify_regime(g, b) != Regime.MONOTONIC:
                return False, f"({g:.2f},{b:.2f}) not in the monotonic regime"
            worst = max(worst, critical_monotonic(g, b).M_star)
    return worst < 48.0, f"max M_m* over grid = {worst:.4f}"


_SQUARE_TABLE = {
    "a": {Label.T: Stability.STABLE, Label.R: Stability.SADDLE, Label.S: Stability.UNSTABLE},
    "b": {Label.T: Stability.UNSTABLE, Label.R: Stability.STABLE, Label.S: Stability.SADDLE},
    "c": {Label.T: Stability.STABLE, Label.R: Stability.UNSTABLE, Label.S: Stability.SADDLE},
    "d": {Label.T: Stability.UNSTABLE, Label.R: Stability.SADDLE, Label.S: Stability.STABLE},
}


@_check("reduced-stability-tables")
def check_stability_tables():
    for regime, expected in _SQUARE_TABLE.items():
        fps = R.fixed_point_map(R.SQUARE_REGIMES[regime])
        for label, stab in expected.items():
            got = fps[label].stability
            if got != stab:
                return False, f"square regime {regime}: {label.value} is {got.value}, expected {stab.value}"

    # hexagonal thresholds: lambda_2R flips at M0 kappa = -K0 N0^2/(K0-K2)^2,
    # lambda_2H1p flips where the mixed modes cross the diagonal
    base = R.HEX_REGIMES["b"]
    thr_r = -base.K0 * base.N0**2 / (base.K0 - base.K2) ** 2
    thr_h = -base.N0**2 * (2 * base.K0 + base.K2) / (base.K0 - base.K2) ** 2

    def lam2(label, m0):
        rp = R.ReducedParams(HEXAGONAL, base.c, m0, base.kappa, base.K0,
                             K2=base.K2, N0=base.N0)
        return R.fixed_point_map(rp)[label].eigenvalues[1]

    checks = [
        lam2(Label.R, 0.9 * thr_r) < 0, lam2(Label.R, 1.1 * thr_r) > 0,
        lam2(Label.H1p, 0.975 * thr_h) > 0, lam2(Label.H1p, 1.025 * thr_h) < 0,
    ]
    if not all(checks):
        return False, f"hexagonal threshold sign pattern {checks} at thresholds {thr_r}, {thr_h}"
    return True, "all 12 square table cells and both hexagonal sign flips reproduced"


@_check("heteroclinic-suite")
def check_heteroclinics():
    count = 0
    for regime, rp in R.SQUARE_REGIMES.items():
        for s, t in R.SQUARE_CONNECTIONS[regime]:
            orb = R.heteroclinic(rp, s, t)
            if orb.convergence_gap >= 1e-6:
                return False, f"square {regime} {s.value}->{t.value} gap {orb.convergence_gap:.2e}"
            E = np.array([R.lyapunov(a, rp) for a in orb.samples])
            if np.any(np.diff(E) > 1e-12):
                return False, f"square {regime} {s.value}->{t.value} Lyapunov not decreasing"
            count += 1
    for regime, rp in R.HEX_REGIMES.items():
        for s, t in R.HEX_CONNECTIONS[regime]:
            orb = R.heteroclinic(rp, s, t)
            if orb.convergence_gap >= 1e-6:
                return False, f"hex {regime} {s.value}->{t.value} gap {orb.convergence_gap:.2e}"
            E = np.array([R.lyapunov(a, rp) for a in orb.samples])
            if np.any(np.diff(E) > 1e-12):
                return False, f"hex {regime} {s.value}->{t.value} Lyapunov not decreasing"
            count += 1
    # the Appendix connections are part of the hex 'c' table; spot-assert them
    for s, t in ((Label.R, Label.MM_plus), (Label.H1p, Label.MM_plus)):
        if (s, t) not in R.HEX_CONNECTIONS["c"]:
            return False, "regime c table is missing an Appendix connection"
    return True, f"{count} connections found with gap < 1e-6 and monotone Lyapunov"


@_check("simulator-conservation-and-rates")
def check_simulator():
    g, beta = TURING_G, TURING_BETA
    crit = critical_monotonic(g, beta)
    kstar, mstar = crit.k_star, crit.M_star

    # exact steady state
    grid = GridSpec(64, 64, 2 * math.pi / kstar * 4, 2 * math.pi / kstar * 4)
    cfg = S.SimConfig(grid, FluidParams(g, beta, mstar), dt=0.1, t_end=2.0)
    state = S.SimState(0.0, np.ones((64, 64)), np.ones((64, 64)))
    _, final = S.run(cfg, state)
    if np.abs(final.h - 1.0).max() != 0.0 or np.abs(final.theta - 1.0).max() != 0.0:
        return False, "pure conduction state not preserved exactly"

    # mass conservation over t in [0, 100]
    rng = np.random.default_rng(42)
    h0 = 1.0 + 0.01 * rng.standard_normal((64, 64))
    h0 += 1.0 - h0.mean()
    th0 = 1.0 + 0.01 * rng.standard_normal((64, 64))
    cfg = S.SimConfig(grid, FluidParams(g, beta, mstar - 0.1), dt=0.1, t_end=100.0,
                      sample_every=100)
    diag, final = S.run(cfg, S.SimState(0.0, h0, th0))
    mean_h = diag.column("mean_h")
    drift = np.abs(mean_h - mean_h[0]).max()
    if drift >= 1e-10:
        return False, f"mean(h) drift {drift:.2e}"
    decay_ok = diag.column("l2_h")[-1] < 0.5 * diag.column("l2_h")[0]
    if not decay_ok:
        return False, "subcritical perturbation did not decay"

    # supercritical growth rate ~ eps^2 M0 kappa
    eps, M0 = 0.1, 1.0
    M = mstar + eps * eps * M0
    from .linear import kappa as kappa_of

    expected = eps * eps * M0 * kappa_of(g, beta)
    grid3 = GridSpec(64, 8, 2 * math.pi / kstar * 4, 2 * math.pi / kstar)
    phi = eigpair_plus(kstar, FluidParams(g, beta, M))[1].vec.real
    x = grid3.x()[:, None]
    amp0 = 1e-4
    h0 = 1.0 + 2 * amp0 * np.cos(kstar * x) * phi[0] * np.ones((1, 8))
    th0 = 1.0 + 2 * amp0 * np.cos(kstar * x) * phi[1] * np.ones((1, 8))
    cfg3 = S.SimConfig(grid3, FluidParams(g, beta, M), dt=0.02, t_end=40.0,
                       sample_every=50, monitor_modes=((kstar, 0.0),))
    diag3, _ = S.run(cfg3, S.SimState(0.0, h0, th0))
    arr = diag3.as_array()
    amps = np.hypot(diag3.column("re_A1"), diag3.column("im_A1"))
    slope = np.polyfit(arr[:, 0], np.log(amps), 1)[0]
    rel = abs(slope - expected) / expected
    if rel >= 0.2:
        return False, f"growth rate {slope:.3e} vs {expected:.3e} (rel {rel:.2f})"
    return True, f"drift {drift:.1e}; growth-rate rel err {rel:.3f}"


@_check("spatial-spectral-gap")
def check_spectral_gap():
    crit = critical_monotonic(TURING_G, TURING_BETA)
    p = FluidParams(TURING_G, TURING_BETA, crit.M_star)
    deltas = []
    for kind in (SQUARE, HEXAGONAL):
        spec = LatticeSpec(kind, crit.k_star, 8)
        rep = R.spectral_gap_scan(1.0, p, spec, max_distance=4)
        if not (rep.central_ok and rep.hyperbolic_ok and rep.delta > 1e-3):
            return False, f"{kind}: delta={rep.delta:.3e}, central={rep.central_ok}, " \
                          f"hyperbolic={rep.hyperbolic_ok}"
        deltas.append(rep.delta)
    return True, f"delta(square)={deltas[0]:.4f}, delta(hexagonal)={deltas[1]:.4f}"


ALL_CHECKS = [
    check_critical_monotonic,
    check_critical_oscillatory,
    check_beta_curve,
    check_k0_sign_change,
    check_residual_oracle,
    check_mm_below_48,
    check_stability_tables,
    check_heteroclinics,
    check_simulator,
    check_spectral_gap,
]


def run_all(checks=None) -> list[CheckResult]:
    results = []
    for check in checks or ALL_CHECKS:
        results.append(check())
    return results


def format_table(results: list[CheckResult]) -> str:
    width = max(len(r.name) for r in results)
    lines = []
    for r in results:
        mark = "PASS" if r.passed else "FAIL"
        lines.append(f"{r.name:<{width}}  {mark}  [{r.seconds:7.2f}s]  {r.detail}")
    n_pass = sum(r.passed for r in results)
    lines.append(f"{n_pass}/{len(results)} criteria passed")
    return "\n".join(lines)
