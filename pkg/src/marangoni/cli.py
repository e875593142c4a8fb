"""Command-line interface: deterministic runs with CSV/JSON outputs.

Every command resolves its parameters (config file < flags), writes its
outputs into ``--outdir`` and drops a ``manifest.json`` recording the resolved
parameters, tool version, seed and output files.  Repeated runs with the same
manifest produce byte-identical outputs.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import coeffs as C
from . import reduced as R
from .acceptance import ALL_CHECKS, format_table, run_all
from .errors import MarangoniError
from .grids import GridSpec
from .lattice import HEXAGONAL, SQUARE
from .linear import (
    FluidParams,
    classify_regime,
    critical_monotonic,
    critical_oscillatory,
    spectral_roots,
)
from .reconstruct import (
    PatternKind,
    front_field,
    front_field_periodic,
    natural_grid,
    pattern_field,
)
from .simulator import SimConfig, SimState, run as sim_run

EXIT_USAGE = 2
EXIT_IO = 3


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def write_manifest(outdir: Path, command: str, params: dict, outputs: list[str],
                   seed: int | None = None) -> None:
    manifest = {
        "command": command,
        "parameters": {k: v for k, v in sorted(params.items())},
        "version": __version__,
        "seed": seed,
        "outputs": outputs,
    }
    write_json(outdir / "manifest.json", manifest)


def _resolve_lattice(name: str) -> str:
    return {"square": SQUARE, "hex": HEXAGONAL, "hexagonal": HEXAGONAL}[name]


# -- subcommands ---------------------------------------------------------------


def cmd_dispersion(args, outdir: Path) -> list[str]:
    p = FluidParams(args.g, args.beta, args.M)
    ks = np.linspace(args.k_min, args.k_max, args.n_k)
    rows = []
    for k in ks:
        r = spectral_roots(float(k), p)
        rows.append([float(k), r.lambda_plus.real, r.lambda_plus.imag,
                     r.lambda_minus.real, r.lambda_minus.imag])
    write_csv(outdir / "dispersion.csv",
              ["k", "re_lambda_plus", "im_lambda_plus",
               "re_lambda_minus", "im_lambda_minus"], rows)
    return ["dispersion.csv"]


def cmd_critical(args, outdir: Path) -> list[str]:
    def record(g, beta):
        regime = classify_regime(g, beta)
        crit = (critical_monotonic if regime.value == "monotonic"
                else critical_oscillatory)(g, beta)
        return regime.value, crit.M_star, crit.k_star

    if args.grid is None:
        regime, m_star, k_star = record(args.g, args.beta)
        write_json(outdir / "critical.json",
                   {"g": args.g, "beta": args.beta, "regime": regime,
                    "M_star": m_star, "k_star": k_star})
        return ["critical.json"]
    g0, g1, ng, b0, b1, nb = args.grid
    rows = []
    for g in np.linspace(g0, g1, int(ng)):
        for b in np.linspace(b0, b1, int(nb)):
            regime, m_star, k_star = record(float(g), float(b))
            rows.append([float(g), float(b), regime, m_star, k_star])
    write_csv(outdir / "critical_grid.csv",
              ["g", "beta", "regime", "M_star", "k_star"], rows)
    return ["critical_grid.csv"]


def _coeff_record(lattice: str, g: float, beta: float) -> dict:
    if lattice == SQUARE:
        co, _ = C.square_coefficients(g, beta)
    else:
        co, _ = C.hex_coefficients(g, beta)
    return {
        "lattice": lattice, "g": g, "beta": beta,
        "M_star": co.M_star, "k_star": co.k_star,
        "kappa": co.kappa, "Kc": co.Kc, "N": co.N,
        "K0": co.K0, "K1": co.K1, "K2": co.K2,
        "nu0": co.nu0, "kappa0": co.kappa0, "kappa1": co.kappa1,
        "normalization": co.normalization.value,
    }


def cmd_coeffs(args, outdir: Path) -> list[str]:
    beta = C.beta_of_g(args.g) if args.beta_on_curve else args.beta
    if beta is None:
        raise MarangoniError("provide --beta or --beta-on-curve")
    lattice = _resolve_lattice(args.lattice)
    write_json(outdir / "coeffs.json", _coeff_record(lattice, args.g, beta))
    return ["coeffs.json"]


def _coeffmap_row(job) -> list[float]:
    # module-level so multiprocessing can pickle it
    lattice, g, b = job
    rec = _coeff_record(lattice, g, b)
    if lattice == SQUARE:
        return [g, b, rec["kappa"], rec["K0"], rec["K1"]]
    return [g, b, rec["kappa"], rec["N"], rec["K0"], rec["K2"]]


def cmd_coeffmap(args, outdir: Path) -> list[str]:
    lattice = _resolve_lattice(args.lattice)
    gs = np.linspace(args.g_min, args.g_max, args.n_g)
    betas = np.linspace(args.beta_min, args.beta_max, args.n_beta)
    jobs = [(lattice, float(g), float(b)) for g in gs for b in betas]

    if args.jobs is None:
        args.jobs = int(os.environ.get("MARANGONI_JOBS", "1"))
    if args.jobs > 1:
        from multiprocessing import Pool

        with Pool(args.jobs) as pool:
            rows = pool.map(_coeffmap_row, jobs)
    else:
        rows = [_coeffmap_row(job) for job in jobs]
    header = (["g", "beta", "kappa", "K0", "K1"] if lattice == SQUARE
              else ["g", "beta", "kappa", "N", "K0", "K2"])
    write_csv(outdir / "coeffmap.csv", header, rows)
    return ["coeffmap.csv"]


def cmd_patterns(args, outdir: Path) -> list[str]:
    kind = PatternKind(args.kind)
    lattice = SQUARE if kind in (PatternKind.ROLL, PatternKind.SQUARE) else HEXAGONAL
    crit = critical_monotonic(args.g, args.beta)
    grid = natural_grid(lattice, crit.k_star, cells=args.cells,
                        points_per_cell=args.resolution)
    fld = pattern_field(kind, args.g, args.beta, args.mu, args.M0, grid)
    fld.to_csv(outdir / "pattern.csv")
    write_json(outdir / "pattern_meta.json",
               {"kind": kind.value, "amplitude": fld.amplitude,
                "k_star": fld.k_star, "nx": grid.nx, "ny": grid.ny,
                "Lx": grid.Lx, "Ly": grid.Ly})
    return ["pattern.csv", "pattern_meta.json"]


def _regime_params(lattice: str, regime: str, c: float, eps: float) -> R.ReducedParams:
    table = R.SQUARE_REGIMES if lattice == SQUARE else R.HEX_REGIMES
    rp = table[regime]
    return R.ReducedParams(rp.kind, c, rp.M0, rp.kappa, rp.K0, K1=rp.K1,
                           K2=rp.K2, N0=rp.N0, epsilon=eps)


def cmd_phaseplane(args, outdir: Path) -> list[str]:
    lattice = _resolve_lattice(args.lattice)
    rp = _regime_params(lattice, args.regime, args.c, args.eps)
    outputs = []

    fps = R.fixed_points(rp)
    write_json(outdir / "fixed_points.json", [
        {"label": fp.label.value, "position": list(fp.position),
         "eigenvalues": list(fp.eigenvalues),
         "eigenvectors": [list(v) for v in fp.eigenvectors.T],
         "stability": fp.stability.value}
        for fp in fps
    ])
    outputs.append("fixed_points.json")

    portrait = R.phase_portrait(rp, n_seeds=args.seeds)
    rows = []
    for tid, traj in enumerate(portrait.trajectories):
        for xi, (a1, a2) in zip(traj.xi, traj.samples):
            rows.append([tid, xi, a1, a2])
    write_csv(outdir / "phaseplane.csv", ["trajectory", "xi", "A1", "A2"], rows)
    outputs.append("phaseplane.csv")
    write_json(outdir / "omega_limits.json",
               [{"trajectory": tid, "seed": list(t.seed), "omega": t.omega_label}
                for tid, t in enumerate(portrait.trajectories)])
    outputs.append("omega_limits.json")

    connections = (R.SQUARE_CONNECTIONS if lattice == SQUARE
                   else R.HEX_CONNECTIONS)[args.regime]
    rows = []
    for cid, (s, t) in enumerate(connections):
        orbit = R.heteroclinic(rp, s, t)
        for xi, (a1, a2) in zip(orbit.xi, orbit.samples):
            rows.append([cid, s.value, t.value, xi, a1, a2])
    write_csv(outdir / "connections.csv",
              ["connection", "source", "target", "xi", "A1", "A2"], rows)
    outputs.append("connections.csv")

    if args.bifurcation:
        rows = []
        base = rp
        for m0k in np.linspace(args.bif_min, args.bif_max, args.bif_n):
            if abs(m0k) < 1e-12:
                continue
            rp_b = R.ReducedParams(base.kind, base.c, float(m0k), 1.0, base.K0,
                                   K1=base.K1, K2=base.K2, N0=base.N0)
            for fp in R.fixed_points(rp_b):
                rows.append([float(m0k), fp.label.value, fp.position[0],
                             fp.position[1], fp.eigenvalues[0], fp.eigenvalues[1],
                             fp.stability.value])
        write_csv(outdir / "bifurcation.csv",
                  ["m0_kappa", "label", "A1", "A2", "lambda1", "lambda2",
                   "stability"], rows)
        outputs.append("bifurcation.csv")
    return outputs


def cmd_front(args, outdir: Path) -> list[str]:
    lattice = _resolve_lattice(args.lattice)
    rp = _regime_params(lattice, args.regime, args.c, args.eps)
    orbit = R.heteroclinic(rp, args.source, args.target)
    rows = [[xi, a1, a2] for xi, (a1, a2) in zip(orbit.xi, orbit.samples)]
    write_csv(outdir / "front_orbit.csv", ["xi", "A1", "A2"], rows)
    write_json(outdir / "front_meta.json", {
        "source": orbit.source.label.value, "target": orbit.target.label.value,
        "convergence_gap": orbit.convergence_gap,
        "regime": args.regime, "lattice": args.lattice,
        "c": args.c, "eps": args.eps,
    })
    outputs = ["front_orbit.csv", "front_meta.json"]
    if not args.reduced:
        beta = C.beta_of_g(args.g) if args.beta is None else args.beta
        crit = critical_monotonic(args.g, beta)
        span = (orbit.xi[-1] - orbit.xi[0]) / args.eps**2
        lx = 1.5 * span
        cell = 2 * math.pi / crit.k_star if lattice == SQUARE \
            else 4 * math.pi / crit.k_star
        nx_cells = max(int(math.ceil(lx / cell)), 2)
        ly = cell if lattice == SQUARE else 4 * math.pi / (math.sqrt(3) * crit.k_star)
        grid = GridSpec(nx_cells * args.resolution,
                        max(args.resolution, 8),
                        nx_cells * cell, ly)
        fld = front_field(lattice, orbit, args.eps, args.c, args.g, beta, grid)
        fld.to_csv(outdir / "front_field.csv")
        outputs.append("front_field.csv")
    return outputs


def cmd_simulate(args, outdir: Path) -> list[str]:
    g = args.g
    beta = C.beta_of_g(g) if args.beta is None else args.beta
    crit = critical_monotonic(g, beta)
    kstar, mstar = crit.k_star, crit.M_star
    rng = np.random.default_rng(args.seed)

    if args.preset == "decay":
        grid = GridSpec(64, 64, 2 * math.pi / kstar * 4, 2 * math.pi / kstar * 4)
        M = mstar - 0.1
        h = 1.0 + 0.01 * rng.standard_normal((64, 64))
        h += 1.0 - h.mean()
        theta = 1.0 + 0.01 * rng.standard_normal((64, 64))
        cfg = SimConfig(grid, FluidParams(g, beta, M), dt=args.dt,
                        t_end=args.t_end, sample_every=args.sample_every,
                        monitor_modes=((kstar, 0.0),))
        state = SimState(0.0, h, theta)
    elif args.preset == "growth":
        eps = args.eps
        M = mstar + eps * eps * args.M0
        grid = GridSpec(64, 8, 2 * math.pi / kstar * 4, 2 * math.pi / kstar)
        from .linear import eigpair_plus

        phi = eigpair_plus(kstar, FluidParams(g, beta, M))[1].vec.real
        x = grid.x()[:, None]
        h = 1.0 + 2e-4 * np.cos(kstar * x) * phi[0] * np.ones((1, grid.ny))
        theta = 1.0 + 2e-4 * np.cos(kstar * x) * phi[1] * np.ones((1, grid.ny))
        cfg = SimConfig(grid, FluidParams(g, beta, M), dt=args.dt,
                        t_end=args.t_end, sample_every=args.sample_every,
                        monitor_modes=((kstar, 0.0),))
        state = SimState(0.0, h, theta)
    elif args.preset == "pattern":
        mu = args.mu
        M = mstar + mu * args.M0
        grid = natural_grid(SQUARE, kstar, cells=4, points_per_cell=12)
        fld = pattern_field(PatternKind.ROLL, g, beta, mu, args.M0, grid)
        cfg = SimConfig(grid, FluidParams(g, beta, M), dt=args.dt,
                        t_end=args.t_end, sample_every=args.sample_every,
                        monitor_modes=((kstar, 0.0),))
        state = SimState(0.0, fld.h, fld.theta)
    elif args.preset == "front":
        eps = args.eps
        M = mstar + eps * eps * args.M0
        # the orbit is computed from the coefficients of this (g, beta), so
        # the reconstructed interface is an actual leading-order solution
        sq = C.square_coefficients(g, beta)[0]
        rp = R.ReducedParams.from_coefficients(sq, args.c, args.M0, eps)
        orbit = R.heteroclinic(rp, args.source, args.target, tol=1e-3)
        span = (orbit.xi[-1] - orbit.xi[0]) / eps**2
        cell = 2 * math.pi / kstar
        n_cells = int(math.ceil(2.2 * span / cell))
        grid = GridSpec(8 * n_cells, 4, n_cells * cell, cell)
        fld = front_field_periodic(SQUARE, orbit, eps, args.c, g, beta, grid)
        cfg = SimConfig(grid, FluidParams(g, beta, M), dt=args.dt,
                        t_end=args.t_end, sample_every=args.sample_every,
                        dealias_pad=2, monitor_modes=((kstar, 0.0),),
                        track_front=True, front_k=kstar)
        state = SimState(0.0, fld.h, fld.theta)
    else:
        raise MarangoniError(f"unknown preset {args.preset!r}")

    snapshots = [] if args.snapshots > 0 else None
    diag, final = sim_run(cfg, state, snapshots=snapshots)
    write_csv(outdir / "diagnostics.csv", diag.columns, diag.rows)
    from .grids import GridField

    outputs = ["diagnostics.csv", "final_field.csv"]
    GridField(cfg.grid, final.h, final.theta).to_csv(outdir / "final_field.csv")
    if snapshots:
        picks = np.linspace(0, len(snapshots) - 1, args.snapshots).astype(int)
        for i, j in enumerate(picks):
            name = f"snapshot_{i:03d}.csv"
            GridField(cfg.grid, snapshots[j].h, snapshots[j].theta).to_csv(
                outdir / name)
            outputs.append(name)
    return outputs


def cmd_verify(args, outdir: Path) -> list[str]:
    checks = ALL_CHECKS
    if args.only:
        names = set(args.only.split(","))
        checks = [c for c in ALL_CHECKS if c._name in names]
    results = run_all(checks)
    table = format_table(results)
    print(table)
    write_json(outdir / "verify.json", [
        {"name": r.name, "passed": r.passed, "detail": r.detail,
         "seconds": round(r.seconds, 3)} for r in results
    ])
    if not all(r.passed for r in results):
        raise SystemExit(1)
    return ["verify.json"]


# -- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="marangoni",
        description="Analysis toolkit for the long-wave Benard-Marangoni "
                    "thin-film model")
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("--config", type=Path, default=None,
                    help="JSON file with parameter defaults; flags override")
    ap.add_argument("--outdir", type=Path, default=Path("."),
                    help="directory for outputs and manifest")
    sub = ap.add_subparsers(dest="command", required=True)

    d = sub.add_parser("dispersion", help="lambda_+/- (k) curves as CSV")
    d.add_argument("--g", type=float, required=True)
    d.add_argument("--beta", type=float, required=True)
    d.add_argument("--M", type=float, required=True)
    d.add_argument("--k-min", type=float, default=0.0)
    d.add_argument("--k-max", type=float, default=4.0)
    d.add_argument("--n-k", type=int, default=400)
    d.set_defaults(fn=cmd_dispersion)

    c = sub.add_parser("critical", help="critical Marangoni number and regime")
    c.add_argument("--g", type=float, required=True)
    c.add_argument("--beta", type=float, required=True)
    c.add_argument("--grid", nargs=6, type=float, default=None,
                   metavar=("G0", "G1", "NG", "B0", "B1", "NB"),
                   help="emit a CSV over a (g, beta) grid instead")
    c.set_defaults(fn=cmd_critical)

    co = sub.add_parser("coeffs", help="amplitude-equation coefficients as JSON")
    co.add_argument("--g", type=float, required=True)
    co.add_argument("--beta", type=float, default=None)
    co.add_argument("--beta-on-curve", action="store_true",
                    help="use beta = beta_of_g(g), where N vanishes")
    co.add_argument("--lattice", choices=("square", "hex"), default="hex")
    co.set_defaults(fn=cmd_coeffs)

    cm = sub.add_parser("coeffmap", help="coefficient sweep over a (g, beta) grid")
    cm.add_argument("--lattice", choices=("square", "hex"), default="square")
    cm.add_argument("--g-min", type=float, default=1.0)
    cm.add_argument("--g-max", type=float, default=20.0)
    cm.add_argument("--n-g", type=int, default=10)
    cm.add_argument("--beta-min", type=float, default=0.1)
    cm.add_argument("--beta-max", type=float, default=5.0)
    cm.add_argument("--n-beta", type=int, default=10)
    cm.add_argument("--jobs", type=int, default=None,
                    help="worker processes (default: MARANGONI_JOBS or 1)")
    cm.set_defaults(fn=cmd_coeffmap)

    pt = sub.add_parser("patterns", help="reconstructed pattern field as CSV")
    pt.add_argument("--kind", choices=[k.value for k in PatternKind],
                    required=True)
    pt.add_argument("--g", type=float, default=12.0)
    pt.add_argument("--beta", type=float, default=C.beta_of_g(12.0))
    pt.add_argument("--mu", type=float, default=1e-3)
    pt.add_argument("--M0", type=float, default=-1.0)
    pt.add_argument("--cells", type=int, default=2)
    pt.add_argument("--resolution", type=int, default=16,
                    help="grid points per pattern cell")
    pt.set_defaults(fn=cmd_patterns)

    pp = sub.add_parser("phaseplane", help="reduced-system phase portrait data")
    pp.add_argument("--lattice", choices=("square", "hex"), required=True)
    pp.add_argument("--regime", choices=("a", "b", "c", "d"), required=True)
    pp.add_argument("--c", type=float, default=1.0)
    pp.add_argument("--eps", type=float, default=0.1)
    pp.add_argument("--seeds", type=int, default=7)
    pp.add_argument("--bifurcation", action="store_true",
                    help="also sweep M0*kappa and emit branch data")
    pp.add_argument("--bif-min", type=float, default=-0.5)
    pp.add_argument("--bif-max", type=float, default=6.0)
    pp.add_argument("--bif-n", type=int, default=66)
    pp.set_defaults(fn=cmd_phaseplane)

    f = sub.add_parser("front", help="heteroclinic orbit and reconstructed front")
    f.add_argument("--lattice", choices=("square", "hex"), required=True)
    f.add_argument("--regime", choices=("a", "b", "c", "d"), required=True)
    f.add_argument("--source", required=True)
    f.add_argument("--target", required=True)
    f.add_argument("--reduced", action="store_true",
                   help="emit the orbit only, skip the field reconstruction")
    f.add_argument("--c", type=float, default=1.0)
    f.add_argument("--eps", type=float, default=0.1)
    f.add_argument("--g", type=float, default=12.0)
    f.add_argument("--beta", type=float, default=None,
                   help="defaults to beta_of_g(g)")
    f.add_argument("--resolution", type=int, default=8)
    f.set_defaults(fn=cmd_front)

    s = sub.add_parser("simulate", help="pseudo-spectral run of the full system")
    s.add_argument("--preset", choices=("decay", "growth", "pattern", "front"),
                   required=True)
    s.add_argument("--g", type=float, default=12.0)
    s.add_argument("--beta", type=float, default=None)
    s.add_argument("--M0", type=float, default=1.0)
    s.add_argument("--mu", type=float, default=1e-3)
    s.add_argument("--eps", type=float, default=0.1)
    s.add_argument("--c", type=float, default=1.0)
    s.add_argument("--regime", choices=("a", "b", "c", "d"), default="b")
    s.add_argument("--source", default="T")
    s.add_argument("--target", default="R")
    s.add_argument("--dt", type=float, default=0.05)
    s.add_argument("--t-end", type=float, default=50.0)
    s.add_argument("--sample-every", type=int, default=20)
    s.add_argument("--snapshots", type=int, default=0,
                   help="also write this many evenly spaced field snapshots")
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(fn=cmd_simulate)

    v = sub.add_parser("verify", help="run the acceptance suite")
    v.add_argument("--only", default=None,
                   help="comma-separated subset of criterion names")
    v.set_defaults(fn=cmd_verify)

    ap.command_parsers = {name: parser for name, parser in sub.choices.items()}
    return ap


def _apply_config(ap: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    if "--config" in argv:
        path = argv[argv.index("--config") + 1]
        try:
            defaults = {k.replace("-", "_"): v
                        for k, v in json.loads(Path(path).read_text()).items()}
        except OSError as exc:
            print(f"error reading config: {exc}", file=sys.stderr)
            raise SystemExit(EXIT_IO)
        # config entries become defaults (explicit flags still win) and
        # satisfy otherwise-required arguments
        for parser in ap.command_parsers.values():
            parser.set_defaults(**defaults)
            for action in parser._actions:
                if action.dest in defaults:
                    action.required = False
    return ap.parse_args(argv)


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = _apply_config(ap, sys.argv[1:] if argv is None else argv)
    outdir = args.outdir
    try:
        outdir.mkdir(parents=True, exist_ok=True)
        outputs = args.fn(args, outdir)
        params = {k: (str(v) if isinstance(v, Path) else v)
                  for k, v in vars(args).items()
                  if k not in ("fn", "config", "outdir") and not callable(v)}
        write_manifest(outdir, args.command, params, outputs,
                       seed=getattr(args, "seed", None))
    except MarangoniError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    return 0


if __name__ == "__main__":
    sys.exit(main())
