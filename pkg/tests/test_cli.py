import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from marangoni.cli import main


def run_cli(args, outdir):
    code = main(["--outdir", str(outdir)] + args)
    return code


class TestCritical:
    def test_reference_point_values(self, tmp_path):
        assert run_cli(["critical", "--g", "12", "--beta", "0.1865184573"],
                       tmp_path) == 0
        data = json.loads((tmp_path / "critical.json").read_text())
        assert data["M_star"] == pytest.approx(8.5144749311, abs=1e-8)
        assert data["regime"] == "monotonic"
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["command"] == "critical"
        assert "critical.json" in manifest["outputs"]

    def test_grid_mode(self, tmp_path):
        assert run_cli(["critical", "--g", "10", "--beta", "1",
                        "--grid", "8", "12", "3", "0.5", "2", "3"],
                       tmp_path) == 0
        rows = (tmp_path / "critical_grid.csv").read_text().strip().split("\n")
        assert rows[0] == "g,beta,regime,M_star,k_star"
        assert len(rows) == 10


class TestCoeffs:
    def test_on_curve_has_small_N(self, tmp_path):
        assert run_cli(["coeffs", "--g", "12", "--beta-on-curve"],
                       tmp_path) == 0
        data = json.loads((tmp_path / "coeffs.json").read_text())
        scale = max(abs(data["K0"]), abs(data["K2"]), abs(data["kappa"]))
        assert abs(data["N"]) < 1e-6 * scale

    def test_missing_beta_is_usage_error(self, tmp_path):
        assert run_cli(["coeffs", "--g", "12"], tmp_path) == 2


class TestDeterminism:
    def test_byte_identical_reruns(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert run_cli(["dispersion", "--g", "12", "--beta", "0.19",
                            "--M", "8.5", "--n-k", "64"], out) == 0
        assert (a / "dispersion.csv").read_bytes() == (b / "dispersion.csv").read_bytes()
        assert (a / "manifest.json").read_bytes() == (b / "manifest.json").read_bytes()

    def test_phaseplane_deterministic(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert run_cli(["phaseplane", "--lattice", "square",
                            "--regime", "b", "--seeds", "3"], out) == 0
        assert (a / "phaseplane.csv").read_bytes() == (b / "phaseplane.csv").read_bytes()
        assert (a / "connections.csv").read_bytes() == (b / "connections.csv").read_bytes()


class TestFront:
    def test_reduced_orbit_spec_example(self, tmp_path):
        assert run_cli(["front", "--lattice", "square", "--regime", "b",
                        "--source", "S", "--target", "R", "--reduced"],
                       tmp_path) == 0
        meta = json.loads((tmp_path / "front_meta.json").read_text())
        assert meta["convergence_gap"] < 1e-6
        rows = np.loadtxt(tmp_path / "front_orbit.csv", delimiter=",",
                          skiprows=1)
        assert np.allclose(rows[0, 1:], [0.5, 0.5], atol=1e-3)
        assert np.allclose(rows[-1, 1:], [1.0, 0.0], atol=1e-3)

    def test_field_output(self, tmp_path):
        assert run_cli(["front", "--lattice", "square", "--regime", "b",
                        "--source", "T", "--target", "R", "--eps", "0.2",
                        "--resolution", "6"], tmp_path) == 0
        header = (tmp_path / "front_field.csv").read_text().split("\n")[0]
        assert header == "x,y,h,theta"


class TestPatterns:
    def test_roll_csv(self, tmp_path):
        assert run_cli(["patterns", "--kind", "roll", "--mu", "1e-3",
                        "--M0", "1", "--cells", "1", "--resolution", "8"],
                       tmp_path) == 0
        meta = json.loads((tmp_path / "pattern_meta.json").read_text())
        assert meta["amplitude"] > 0
        data = np.loadtxt(tmp_path / "pattern.csv", delimiter=",", skiprows=1)
        assert abs(data[:, 2].mean() - 1.0) < 1e-12

    def test_nonexistent_branch_exit_code(self, tmp_path):
        # K0 < 0 at g = 12 on-curve: rolls need M0 > 0
        assert run_cli(["patterns", "--kind", "roll", "--mu", "1e-3",
                        "--M0", "-1"], tmp_path) == 2


class TestBifurcation:
    def test_branch_data(self, tmp_path):
        assert run_cli(["phaseplane", "--lattice", "hex", "--regime", "c",
                        "--seeds", "2", "--bifurcation", "--bif-n", "20"],
                       tmp_path) == 0
        rows = (tmp_path / "bifurcation.csv").read_text().strip().split("\n")
        assert rows[0] == "m0_kappa,label,A1,A2,lambda1,lambda2,stability"
        labels = {r.split(",")[1] for r in rows[1:]}
        assert {"T", "R", "H1p", "MM_plus"} <= labels


class TestConfigFile:
    def test_config_provides_defaults_flags_override(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"g": 10.0, "beta": 1.0}))
        out = tmp_path / "out"
        code = main(["--config", str(cfg), "--outdir", str(out),
                     "critical", "--g", "12", "--beta", "0.1865184573"])
        assert code == 0
        data = json.loads((out / "critical.json").read_text())
        assert data["g"] == 12.0  # flag wins over config

    def test_config_fills_missing(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"beta": 0.1865184573}))
        out = tmp_path / "out"
        code = main(["--config", str(cfg), "--outdir", str(out),
                     "critical", "--g", "12"])
        assert code == 0


class TestCoeffmap:
    def test_parallel_matches_serial(self, tmp_path):
        a, b = tmp_path / "serial", tmp_path / "par"
        base = ["coeffmap", "--lattice", "hex", "--g-min", "10",
                "--g-max", "14", "--n-g", "2", "--beta-min", "0.2",
                "--beta-max", "1.0", "--n-beta", "2"]
        assert run_cli(base, a) == 0
        assert run_cli(base + ["--jobs", "2"], b) == 0
        assert (a / "coeffmap.csv").read_bytes() == (b / "coeffmap.csv").read_bytes()
        header = (a / "coeffmap.csv").read_text().split("\n")[0]
        assert header == "g,beta,kappa,N,K0,K2"


class TestVerifyCommand:
    def test_failing_criterion_exits_nonzero(self, tmp_path, capsys):
        from marangoni import acceptance
        from marangoni.cli import cmd_verify

        @acceptance._check("always-fails")
        def bad():
            return False, "synthetic failure"

        class Args:
            only = None

        old = acceptance.ALL_CHECKS
        try:
            acceptance.ALL_CHECKS = [bad]
            import marangoni.cli as cli_mod

            cli_mod.ALL_CHECKS = [bad]
            with pytest.raises(SystemExit) as exc:
                cmd_verify(Args(), tmp_path)
            assert exc.value.code == 1
        finally:
            acceptance.ALL_CHECKS = old
            cli_mod.ALL_CHECKS = old
        capsys.readouterr()


class TestHexFront:
    def test_mixed_mode_orbit(self, tmp_path):
        assert run_cli(["front", "--lattice", "hex", "--regime", "c",
                        "--source", "R", "--target", "MM_plus", "--reduced"],
                       tmp_path) == 0
        meta = json.loads((tmp_path / "front_meta.json").read_text())
        assert meta["convergence_gap"] < 1e-6
        assert meta["target"] == "MM_plus"


class TestSimulatePreset:
    def test_growth_preset_short_run(self, tmp_path):
        assert run_cli(["simulate", "--preset", "growth", "--dt", "0.05",
                        "--t-end", "1", "--sample-every", "10",
                        "--snapshots", "2"], tmp_path) == 0
        assert (tmp_path / "snapshot_000.csv").exists()
        assert (tmp_path / "snapshot_001.csv").exists()

    def test_decay_preset_short_run(self, tmp_path):
        assert run_cli(["simulate", "--preset", "decay", "--dt", "0.1",
                        "--t-end", "2", "--sample-every", "5"], tmp_path) == 0
        rows = (tmp_path / "diagnostics.csv").read_text().strip().split("\n")
        assert rows[0].startswith("t,mean_h,l2_h,l2_theta,re_A1,im_A1")
        data = np.loadtxt(tmp_path / "diagnostics.csv", delimiter=",",
                          skiprows=1)
        assert np.abs(data[:, 1] - data[0, 1]).max() < 1e-13
        assert (tmp_path / "final_field.csv").exists()


class TestEntryPoint:
    def test_module_invocation(self, tmp_path):
        proc = subprocess.run(
            [sys.executable, "-m", "marangoni.cli", "--outdir", str(tmp_path),
             "critical", "--g", "12", "--beta", "40"],
            capture_output=True, text=True)
        assert proc.returncode == 0
        data = json.loads((tmp_path / "critical.json").read_text())
        assert data["regime"] == "oscillatory"
        assert data["M_star"] == pytest.approx(36.9089023002, abs=1e-8)
