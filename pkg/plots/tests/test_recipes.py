"""Renders every recipe from fixtures produced by the analysis CLI.

Fixtures are generated once per session by shelling out to the ``marangoni``
executable, so this package touches the primary component only through its
documented file formats.
"""

import shutil
import subprocess
import sys

import numpy as np
import pytest

from marangoni_plots.cli import main as plots_main
from marangoni_plots.recipes import FigureRecipe, RecipeError, render

K_STAR_REF = 1.2843299054

pytestmark = pytest.mark.skipif(shutil.which("marangoni") is None,
                                reason="analysis CLI not installed")


def cli(args, outdir):
    proc = subprocess.run(["marangoni", "--outdir", str(outdir)] + args,
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    return outdir


@pytest.fixture(scope="session")
def fixtures(tmp_path_factory):
    root = tmp_path_factory.mktemp("fixtures")
    dirs = {}
    # slightly supercritical so the curve maximum is uniquely at k_m^*
    # (at M = M* exactly, lambda_+ = 0 at both k = 0 and k = k_m^*)
    dirs["dispersion"] = cli(["dispersion", "--g", "12",
                              "--beta", "0.1865184573", "--M", "8.52",
                              "--k-min", "0", "--k-max", "3", "--n-k", "600"],
                             root / "dispersion")
    dirs["critical_grid"] = cli(["critical", "--g", "1", "--beta", "1",
                                 "--grid", "2", "20", "6", "0.5", "60", "6"],
                                root / "critical_grid")
    dirs["coeffmap"] = cli(["coeffmap", "--lattice", "square",
                            "--g-min", "6", "--g-max", "14", "--n-g", "3",
                            "--beta-min", "0.1", "--beta-max", "1.5",
                            "--n-beta", "3"], root / "coeffmap")
    dirs["phaseplane"] = cli(["phaseplane", "--lattice", "hex",
                              "--regime", "c", "--seeds", "3",
                              "--bifurcation", "--bif-n", "25"],
                             root / "phaseplane")
    dirs["pattern"] = cli(["patterns", "--kind", "hex_pm", "--mu", "1e-3",
                           "--M0", "1", "--cells", "1", "--resolution", "10"],
                          root / "pattern")
    return dirs


def _render_cli(figure, indir, out, extra=()):
    code = plots_main([figure, "--indir", str(indir), "--out", str(out),
                       *extra])
    assert code == 0
    assert out.exists() and out.stat().st_size > 0
    return out


class TestRecipesRender:
    def test_dispersion(self, fixtures, tmp_path):
        _render_cli("dispersion", fixtures["dispersion"], tmp_path / "f.png")

    def test_regimemap(self, fixtures, tmp_path):
        _render_cli("regimemap", fixtures["critical_grid"], tmp_path / "f.png")

    def test_coeffmap(self, fixtures, tmp_path):
        _render_cli("coeffmap", fixtures["coeffmap"], tmp_path / "f.png",
                    ("--coefficient", "K0"))

    def test_bifurcation(self, fixtures, tmp_path):
        _render_cli("bifurcation", fixtures["phaseplane"], tmp_path / "f.png")

    def test_phaseplane(self, fixtures, tmp_path):
        _render_cli("phaseplane", fixtures["phaseplane"], tmp_path / "f.png")

    def test_heatmap(self, fixtures, tmp_path):
        _render_cli("heatmap", fixtures["pattern"], tmp_path / "f.png")


class TestDeterminism:
    def test_pixel_identical_rerenders(self, fixtures, tmp_path):
        a = _render_cli("dispersion", fixtures["dispersion"], tmp_path / "a.png")
        b = _render_cli("dispersion", fixtures["dispersion"], tmp_path / "b.png")
        assert a.read_bytes() == b.read_bytes()

    def test_heatmap_deterministic(self, fixtures, tmp_path):
        a = _render_cli("heatmap", fixtures["pattern"], tmp_path / "a.png")
        b = _render_cli("heatmap", fixtures["pattern"], tmp_path / "b.png")
        assert a.read_bytes() == b.read_bytes()


class TestDispersionCurveMaximum:
    def test_max_at_critical_wavenumber(self, fixtures):
        data = np.loadtxt(fixtures["dispersion"] / "dispersion.csv",
                          delimiter=",", skiprows=1)
        k, re_plus = data[:, 0], data[:, 1]
        dk = k[1] - k[0]
        assert abs(k[np.argmax(re_plus)] - K_STAR_REF) <= dk


class TestSchemaValidation:
    def test_missing_column_named(self, fixtures, tmp_path):
        bad = tmp_path / "dispersion.csv"
        bad.write_text("k,re_lambda_plus\n0,0\n1,-1\n")
        recipe = FigureRecipe("dispersion", {"dispersion": bad})
        with pytest.raises(RecipeError, match="im_lambda_plus"):
            render(recipe, tmp_path / "f.png")

    def test_missing_file_rejected(self, tmp_path):
        recipe = FigureRecipe("heatmap", {"field": tmp_path / "absent.csv"})
        with pytest.raises(RecipeError, match="does not exist"):
            render(recipe, tmp_path / "f.png")

    def test_manifest_stamp_present(self, fixtures, tmp_path):
        # rendering with and without a manifest must both work; the stamp
        # changes the pixels, so renders from different run dirs differ
        out = tmp_path / "f.png"
        _render_cli("dispersion", fixtures["dispersion"], out)
        assert out.stat().st_size > 0
