"""Command line for the figure recipes: marangoni-plots <figure> ..."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .recipes import RECIPES, FigureRecipe, RecipeError, render


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="marangoni-plots",
        description="Render figures from marangoni CSV/JSON outputs")
    ap.add_argument("figure", choices=sorted(RECIPES))
    ap.add_argument("--indir", type=Path, default=Path("."),
                    help="directory holding the CLI outputs")
    ap.add_argument("--out", type=Path, default=None,
                    help="output PNG path (default <figure>.png in --indir)")
    ap.add_argument("--coefficient", default="K0",
                    help="column to map in the coeffmap recipe")
    ap.add_argument("--n-levels", type=int, default=5,
                    help="number of h level sets in the heatmap recipe")
    ap.add_argument("--field-file", default="pattern.csv",
                    help="grid-field CSV for the heatmap recipe")
    return ap


DEFAULT_FILES = {
    "dispersion": {"dispersion": "dispersion.csv"},
    "regimemap": {"critical_grid": "critical_grid.csv"},
    "coeffmap": {"coeffmap": "coeffmap.csv"},
    "bifurcation": {"bifurcation": "bifurcation.csv"},
    "phaseplane": {"phaseplane": "phaseplane.csv",
                   "fixed_points": "fixed_points.json",
                   "connections": "connections.csv"},
    "heatmap": {"field": "pattern.csv"},
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    files = dict(DEFAULT_FILES[args.figure])
    if args.figure == "heatmap":
        files["field"] = args.field_file
    inputs = {key: args.indir / name for key, name in files.items()}
    styling = {"coefficient": args.coefficient, "n_levels": args.n_levels}
    recipe = FigureRecipe(args.figure, inputs, styling)
    out = args.out or args.indir / f"{args.figure}.png"
    try:
        render(recipe, out)
    except RecipeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
