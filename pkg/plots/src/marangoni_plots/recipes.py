"""Render publication-style figures from the analysis CLI's CSV/JSON outputs.

Each recipe consumes only the documented file schemas (no model quantities
are recomputed here) and writes a deterministic PNG: fixed styles, no
timestamps, and the producing run's manifest hash stamped in a corner.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

DPI = 150
PNG_METADATA = {"Software": "marangoni-plots"}

THETA_CMAP = "RdBu_r"  # red = warmer, blue = cooler


class RecipeError(ValueError):
    """Input file does not match the documented schema."""


@dataclass
class FigureRecipe:
    figure_id: str
    inputs: dict[str, Path]
    styling: dict = field(default_factory=dict)


def _read_csv(path: Path, required: list[str]) -> dict[str, np.ndarray]:
    with open(path) as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    for col in required:
        if col not in header:
            raise RecipeError(f"{path.name}: missing column {col!r} "
                              f"(found {header})")
    out = {}
    for col in header:
        i = header.index(col)
        values = [r[i] for r in rows]
        try:
            out[col] = np.array([float(v) for v in values])
        except ValueError:
            out[col] = np.array(values)
    return out


def _manifest_stamp(input_path: Path) -> str:
    manifest = input_path.parent / "manifest.json"
    if not manifest.exists():
        return "no-manifest"
    digest = hashlib.sha256(manifest.read_bytes()).hexdigest()
    return digest[:12]


def _finish(fig, ax_for_stamp, recipe: FigureRecipe, out_path: Path) -> Path:
    stamp = _manifest_stamp(next(iter(recipe.inputs.values())))
    fig.text(0.995, 0.005, stamp, ha="right", va="bottom", fontsize=5,
             color="0.6", family="monospace")
    fig.savefig(out_path, dpi=DPI, metadata=PNG_METADATA)
    plt.close(fig)
    return out_path


def render_dispersion(recipe: FigureRecipe, out_path: Path) -> Path:
    data = _read_csv(recipe.inputs["dispersion"],
                     ["k", "re_lambda_plus", "im_lambda_plus",
                      "re_lambda_minus", "im_lambda_minus"])
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.axhline(0.0, color="0.8", lw=0.8)
    ax.plot(data["k"], data["re_lambda_plus"], color="tab:blue",
            label=r"$\mathrm{Re}\,\lambda_+$")
    ax.plot(data["k"], data["re_lambda_minus"], color="tab:orange",
            label=r"$\mathrm{Re}\,\lambda_-$")
    if np.any(data["im_lambda_plus"] != 0.0):
        ax.plot(data["k"], data["im_lambda_plus"], color="tab:blue", ls="--",
                lw=0.8, label=r"$\mathrm{Im}\,\lambda_+$")
    ax.set_xlabel(r"$k$")
    ax.set_ylabel(r"$\lambda_\pm(k)$")
    ymin = recipe.styling.get("ymin", -2.0)
    ax.set_ylim(ymin, recipe.styling.get("ymax", 0.4))
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    return _finish(fig, ax, recipe, out_path)


def render_regimemap(recipe: FigureRecipe, out_path: Path) -> Path:
    data = _read_csv(recipe.inputs["critical_grid"],
                     ["g", "beta", "regime", "M_star", "k_star"])
    fig, ax = plt.subplots(figsize=(4.2, 3.4))
    colors = {"monotonic": "tab:red", "oscillatory": "tab:blue",
              "degenerate": "0.3"}
    for regime, color in colors.items():
        mask = data["regime"] == regime
        if np.any(mask):
            ax.scatter(data["beta"][mask], data["g"][mask], s=9, marker="s",
                       color=color, label=regime)
    ax.set_xlabel(r"$\beta$")
    ax.set_ylabel(r"$g$")
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    return _finish(fig, ax, recipe, out_path)


def render_coeffmap(recipe: FigureRecipe, out_path: Path) -> Path:
    which = recipe.styling.get("coefficient", "K0")
    data = _read_csv(recipe.inputs["coeffmap"], ["g", "beta", which])
    gs = np.unique(data["g"])
    betas = np.unique(data["beta"])
    if len(gs) * len(betas) != len(data["g"]):
        raise RecipeError("coeffmap.csv is not a full tensor grid")
    values = data[which].reshape(len(gs), len(betas))
    fig, ax = plt.subplots(figsize=(4.6, 3.4))
    vmax = np.abs(values).max()
    pcm = ax.pcolormesh(betas, gs, values, cmap="PuOr_r", vmin=-vmax,
                        vmax=vmax, shading="nearest")
    fig.colorbar(pcm, ax=ax, label=which)
    if values.min() < 0 < values.max():
        ax.contour(betas, gs, values, levels=[0.0], colors="w",
                   linestyles="--", linewidths=1.2)
    ax.set_xlabel(r"$\beta$")
    ax.set_ylabel(r"$g$")
    fig.tight_layout()
    return _finish(fig, ax, recipe, out_path)


def render_bifurcation(recipe: FigureRecipe, out_path: Path) -> Path:
    data = _read_csv(recipe.inputs["bifurcation"],
                     ["m0_kappa", "label", "A1", "A2", "stability"])
    fig, ax = plt.subplots(figsize=(5, 3.4))
    styles = {"stable": dict(ls="-", lw=1.6), "saddle": dict(ls="--", lw=1.1),
              "unstable": dict(ls=":", lw=1.1)}
    colors = {"T": "0.4", "R": "tab:blue", "H1p": "tab:red", "H1m": "tab:red",
              "MM_plus": "tab:green"}
    seen = set()
    for label, color in colors.items():
        for stability, style in styles.items():
            mask = (data["label"] == label) & (data["stability"] == stability)
            if not np.any(mask):
                continue
            amp = np.hypot(data["A1"][mask], data["A2"][mask])
            order = np.argsort(data["m0_kappa"][mask])
            name = label if label not in seen else None
            seen.add(label)
            ax.plot(data["m0_kappa"][mask][order], amp[order], color=color,
                    label=name, **style)
    ax.set_xlabel(r"$M_0\,\kappa$")
    ax.set_ylabel(r"$|A|$")
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    return _finish(fig, ax, recipe, out_path)


def render_phaseplane(recipe: FigureRecipe, out_path: Path) -> Path:
    traj = _read_csv(recipe.inputs["phaseplane"],
                     ["trajectory", "xi", "A1", "A2"])
    fig, ax = plt.subplots(figsize=(4.2, 4.2))
    for tid in np.unique(traj["trajectory"]):
        mask = traj["trajectory"] == tid
        ax.plot(traj["A1"][mask], traj["A2"][mask], color="0.75", lw=0.6)
    if "connections" in recipe.inputs:
        conn = _read_csv(recipe.inputs["connections"],
                         ["connection", "source", "target", "xi", "A1", "A2"])
        for cid in np.unique(conn["connection"]):
            mask = conn["connection"] == cid
            ax.plot(conn["A1"][mask], conn["A2"][mask], color="tab:red",
                    lw=1.6)
    fps = json.loads(Path(recipe.inputs["fixed_points"]).read_text())
    markers = {"stable": ("o", "k"), "unstable": ("o", "w"),
               "saddle": ("s", "0.5")}
    for fp in fps:
        m, c = markers[fp["stability"]]
        ax.plot(*fp["position"], marker=m, color=c, mec="k", ms=7, zorder=5)
        ax.annotate(fp["label"], fp["position"], textcoords="offset points",
                    xytext=(5, 5), fontsize=8)
    ax.set_xlabel(r"$A_1$")
    ax.set_ylabel(r"$A_2$")
    ax.set_aspect("equal", adjustable="datalim")
    fig.tight_layout()
    return _finish(fig, ax, recipe, out_path)


def render_heatmap(recipe: FigureRecipe, out_path: Path) -> Path:
    data = _read_csv(recipe.inputs["field"], ["x", "y", "h", "theta"])
    xs = np.unique(data["x"])
    ys = np.unique(data["y"])
    if len(xs) * len(ys) != len(data["x"]):
        raise RecipeError("field CSV is not a full tensor grid")
    h = data["h"].reshape(len(xs), len(ys))
    theta = data["theta"].reshape(len(xs), len(ys))
    aspect = len(ys) / len(xs)
    fig, ax = plt.subplots(figsize=(7, max(7 * aspect, 1.2)))
    pcm = ax.pcolormesh(xs, ys, theta.T, cmap=THETA_CMAP, shading="nearest")
    fig.colorbar(pcm, ax=ax, label=r"$\theta$", fraction=0.046)
    # surface-height level sets drawn as black lines over the temperature map
    span = h.max() - h.min()
    if span > 1e-12:
        levels = np.linspace(h.min() + 0.2 * span, h.max() - 0.2 * span,
                             recipe.styling.get("n_levels", 5))
        ax.contour(xs, ys, h.T, levels=levels, colors="k", linewidths=0.7)
    ax.set_xlabel(r"$x$")
    ax.set_ylabel(r"$y$")
    fig.tight_layout()
    return _finish(fig, ax, recipe, out_path)


RECIPES = {
    "dispersion": (render_dispersion, ("dispersion",)),
    "regimemap": (render_regimemap, ("critical_grid",)),
    "coeffmap": (render_coeffmap, ("coeffmap",)),
    "bifurcation": (render_bifurcation, ("bifurcation",)),
    "phaseplane": (render_phaseplane, ("phaseplane", "fixed_points",
                                       "connections")),
    "heatmap": (render_heatmap, ("field",)),
}


def render(recipe: FigureRecipe, out_path: Path | str) -> Path:
    """Dispatch a recipe by its figure id."""
    if recipe.figure_id not in RECIPES:
        raise RecipeError(f"unknown figure id {recipe.figure_id!r}")
    fn, required = RECIPES[recipe.figure_id]
    for key in required:
        if key not in recipe.inputs:
            raise RecipeError(f"{recipe.figure_id}: missing input {key!r}")
        if not Path(recipe.inputs[key]).exists():
            raise RecipeError(f"{recipe.figure_id}: input file "
                              f"{recipe.inputs[key]} does not exist")
    return fn(recipe, Path(out_path))
