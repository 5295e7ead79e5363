"""CLI contract: configs, overrides, report formats, determinism, exit codes."""

import json

import numpy as np
import pytest

from twistband import cli
from twistband.errors import SolverConvergenceError

RECT = {"kind": "rectangle", "a": 1.0, "b": 0.7, "offset": [0.0, 0.0]}
SIN_TWIST = {"kind": "periodic", "L": 1.0, "trig": [{"freq": 1, "sin": 1.0, "cos": 0.0}]}
LIN_TWIST = {"kind": "interval", "a": 0.0, "b": 1.0, "poly": [0.0, 0.5]}


def _write_config(path, **fields):
    path.write_text(json.dumps(fields), encoding="utf-8")
    return str(path)


def _read_csv(path):
    lines = path.read_text().strip().split("\n")
    header = lines[0].split(",")
    rows = [line.split(",") for line in lines[1:]]
    return header, rows


class TestModesTask:
    def test_modes_csv_and_figure(self, tmp_path):
        cfg = _write_config(tmp_path / "c.json", geometry=RECT, h=0.03, count=3)
        rc = cli.main(["modes", "--config", cfg, "--outdir", str(tmp_path / "out")])
        assert rc == 0
        header, rows = _read_csv(tmp_path / "out" / "modes.csv")
        assert header == ["n", "lambda", "degenerate"]
        lam2 = float(rows[1][1])
        assert lam2 == pytest.approx(np.pi**2, rel=0.01)
        assert (tmp_path / "out" / "modes.png").exists()
        assert (tmp_path / "out" / "manifest.json").exists()

    def test_no_plot_flag(self, tmp_path):
        cfg = _write_config(tmp_path / "c.json", geometry=RECT, h=0.03, count=3)
        rc = cli.main(["modes", "--config", cfg, "--outdir", str(tmp_path / "out"),
                       "--no-plot"])
        assert rc == 0
        assert not (tmp_path / "out" / "modes.png").exists()

    def test_modes_h001_closed_form(self, tmp_path):
        cfg = _write_config(tmp_path / "c.json", geometry=RECT, h=0.01, count=3)
        rc = cli.main(["modes", "--config", cfg, "--outdir", str(tmp_path / "out"),
                       "--no-plot"])
        assert rc == 0
        _, rows = _read_csv(tmp_path / "out" / "modes.csv")
        assert float(rows[1][1]) == pytest.approx(9.8696, abs=5e-3)

    def test_json_format(self, tmp_path):
        cfg = _write_config(tmp_path / "c.json", geometry=RECT, h=0.03, count=3)
        rc = cli.main(["modes", "--config", cfg, "--outdir", str(tmp_path / "out"),
                       "--format", "json", "--no-plot"])
        assert rc == 0
        data = json.loads((tmp_path / "out" / "modes.json").read_text())
        assert data[0]["n"] == 1
        assert abs(data[0]["lambda"]) < 1e-8


class TestBandsTask:
    def test_zero_potential_lists_zero_gaps(self, tmp_path):
        cfg = _write_config(tmp_path / "c.json", twist=SIN_TWIST, c1=0.0, c2=0.0,
                            jmax=4, theta_count=9, nodes=512)
        rc = cli.main(["bands", "--config", cfg, "--outdir", str(tmp_path / "out"),
                       "--no-plot"])
        assert rc == 0
        header, rows = _read_csv(tmp_path / "out" / "gaps.csv")
        assert header == ["j", "lower", "upper", "width"]
        assert rows == [] or rows == [[""]]
        header_b, rows_b = _read_csv(tmp_path / "out" / "bands.csv")
        assert header_b == ["theta", "j", "k"]
        assert len(rows_b) == 9 * 4

    def test_explicit_constants_bypass_geometry(self, tmp_path):
        cfg = _write_config(tmp_path / "c.json", twist=SIN_TWIST, c1=0.4, c2=0.0,
                            jmax=3, theta_count=9, nodes=512)
        rc = cli.main(["bands", "--config", cfg, "--outdir", str(tmp_path / "out"),
                       "--no-plot"])
        assert rc == 0
        manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
        assert manifest["inputs"]["coupling_source"] == "explicit"


class TestDeterminism:
    def test_byte_identical_reports(self, tmp_path):
        cfg = _write_config(tmp_path / "c.json", geometry=RECT, twist=SIN_TWIST,
                            n=2, h=0.04, jmax=3, theta_count=9, nodes=512)
        for name in ("r1", "r2"):
            rc = cli.main(["bands", "--config", cfg, "--outdir", str(tmp_path / name)])
            assert rc == 0
        for fname in ("bands.csv", "gaps.csv", "bands.png"):
            b1 = (tmp_path / "r1" / fname).read_bytes()
            b2 = (tmp_path / "r2" / fname).read_bytes()
            assert b1 == b2, fname
        m1 = json.loads((tmp_path / "r1" / "manifest.json").read_text())
        m2 = json.loads((tmp_path / "r2" / "manifest.json").read_text())
        for m in (m1, m2):
            m.pop("wall_time_s")            # the one run-dependent field
            m["inputs"].pop("outdir")       # differs by test construction
        assert m1 == m2

    def test_manifest_echoes_defaults(self, tmp_path):
        cfg = _write_config(tmp_path / "c.json", geometry=RECT, twist=SIN_TWIST,
                            n=2, h=0.04, jmax=3, theta_count=9, nodes=512)
        cli.main(["bands", "--config", cfg, "--outdir", str(tmp_path / "out"), "--no-plot"])
        manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
        inputs = manifest["inputs"]
        for key in ("band_tol", "gap_tol", "tol", "degeneracy_tol", "theta_count",
                    "jmax", "h", "n", "M"):
            assert key in inputs
        assert "versions" in manifest and "wall_time_s" in manifest


class TestExitCodes:
    def test_missing_required_spec_is_2(self, tmp_path):
        cfg = _write_config(tmp_path / "c.json", geometry=RECT)  # no twist
        assert cli.main(["bands", "--config", cfg, "--outdir", str(tmp_path / "out")]) == 2

    def test_unknown_field_is_2(self, tmp_path):
        cfg = _write_config(tmp_path / "c.json", geometry=RECT, twiist=SIN_TWIST)
        assert cli.main(["bands", "--config", cfg, "--outdir", str(tmp_path / "out")]) == 2

    def test_bad_geometry_is_2(self, tmp_path):
        cfg = _write_config(tmp_path / "c.json", twist=SIN_TWIST,
                            geometry={"kind": "rectangle", "a": -1.0, "b": 0.7})
        assert cli.main(["bands", "--config", cfg, "--outdir", str(tmp_path / "out")]) == 2

    def test_degenerate_abort_is_3_and_override(self, tmp_path):
        disk = {"kind": "disk", "r": 1.0}
        cfg = _write_config(tmp_path / "c.json", geometry=disk, twist=SIN_TWIST,
                            n=2, h=0.05, jmax=3, theta_count=9, nodes=512)
        rc = cli.main(["potential", "--config", cfg, "--outdir", str(tmp_path / "out")])
        assert rc == 3
        with pytest.warns(UserWarning):
            rc = cli.main(["potential", "--config", cfg,
                           "--outdir", str(tmp_path / "out2"), "--allow-degenerate"])
        assert rc == 0

    def test_solver_failure_is_4(self, tmp_path, monkeypatch):
        def boom(cfg, pipe, outdir, manifest):
            raise SolverConvergenceError("synthetic non-convergence")

        monkeypatch.setitem(cli._TASK_IMPL, "validate", boom)
        cfg = _write_config(tmp_path / "c.json", twist=SIN_TWIST)
        assert cli.main(["validate", "--config", cfg, "--outdir", str(tmp_path / "out")]) == 4


class TestOtherTasks:
    def test_validate_task(self, tmp_path):
        cfg = _write_config(tmp_path / "c.json", twist=SIN_TWIST, eps=0.1)
        rc = cli.main(["validate", "--config", cfg, "--outdir", str(tmp_path / "out")])
        assert rc == 0
        payload = json.loads((tmp_path / "out" / "validate.json").read_text())
        assert payload["det_residual"] < 1e-12
        assert payload["inverse_residual"] < 1e-12

    def test_scalar_flag_overrides(self, tmp_path):
        cfg = _write_config(tmp_path / "c.json", geometry=RECT, h=0.05, count=3)
        rc = cli.main(["modes", "--config", cfg, "--outdir", str(tmp_path / "out"),
                       "--count", "4", "--no-plot"])
        assert rc == 0
        _, rows = _read_csv(tmp_path / "out" / "modes.csv")
        assert len(rows) == 4

    def test_spectrum_1d_task(self, tmp_path):
        cfg = _write_config(tmp_path / "c.json", geometry=RECT, twist=LIN_TWIST,
                            n=2, h=0.04, jmax=3, nodes=512)
        rc = cli.main(["spectrum-1d", "--config", cfg,
                       "--outdir", str(tmp_path / "out"), "--no-plot"])
        assert rc == 0
        _, rows = _read_csv(tmp_path / "out" / "spectrum.csv")
        mu = [float(r[1]) for r in rows]
        assert mu[0] == pytest.approx(0.1008, abs=2e-3)
        assert mu[1] == pytest.approx(np.pi**2 + 0.1008, rel=1e-2)

    def test_gap_asymptotics_task(self, tmp_path):
        cfg = _write_config(tmp_path / "c.json", twist=SIN_TWIST, c1=1.0, c2=0.0,
                            j=2, nodes=1024)
        rc = cli.main(["gap-asymptotics", "--config", cfg,
                       "--outdir", str(tmp_path / "out"), "--no-plot"])
        assert rc == 0
        header, rows = _read_csv(tmp_path / "out" / "asymptotics.csv")
        assert header == ["beta", "delta", "predicted"]
        assert len(rows) == 4
        manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
        fitted = manifest["diagnostics"]["fitted_slope"]
        predicted = manifest["diagnostics"]["predicted_slope"]
        # W = c1 alpha'^2 = 4 pi^2 (1 + cos(4 pi s))/2: the j=2 coefficient
        # is 2 pi^2 * sqrt(L)/2... predicted slope = 2 pi^2
        assert predicted == pytest.approx(2 * np.pi**2, rel=1e-6)
        assert fitted == pytest.approx(predicted, rel=0.1)

    @pytest.mark.parametrize("task,periodic", [
        ("potential", True), ("gap-asymptotics", True), ("fiber-converge", True),
        ("persistence", True), ("spectrum-1d", False), ("converge", False),
    ])
    def test_figures_rendered_on_report_path(self, tmp_path, task, periodic):
        twist = SIN_TWIST if periodic else LIN_TWIST
        cfg = _write_config(tmp_path / "c.json", geometry=RECT, twist=twist,
                            n=2, h=0.05, jmax=3, theta_count=9,
                            nodes=512 if periodic else 256, s_nodes=128, M=4,
                            epsilons=[0.2, 0.1, 0.05], j=2)
        rc = cli.main([task, "--config", cfg, "--outdir", str(tmp_path / "out")])
        assert rc == 0
        assert list((tmp_path / "out").glob("*.png")), f"{task} wrote no figure"

    def test_thread_env_var_preserves_results(self, tmp_path, monkeypatch):
        import twistband as tb

        grid = tb.periodic_grid(1.0, 512)
        V = tb.SampledPotential(grid=grid, values=np.cos(2 * np.pi * grid), kind="V",
                                c1=0.0, c2=0.0, profile_description="cos", period=1.0)
        serial = tb.band_structure(V, 1.0, theta_count=9, jmax=3)
        monkeypatch.setenv("TWISTBAND_THREADS", "4")
        threaded = tb.band_structure(V, 1.0, theta_count=9, jmax=3)
        assert np.array_equal(serial.k, threaded.k)

    def test_persistence_task(self, tmp_path):
        cfg = _write_config(tmp_path / "c.json", geometry=RECT, twist=SIN_TWIST,
                            n=2, h=0.04, jmax=3, theta_count=9, nodes=512,
                            s_nodes=128, epsilons=[0.1, 0.05], M=4)
        rc = cli.main(["persistence", "--config", cfg,
                       "--outdir", str(tmp_path / "out"), "--no-plot"])
        assert rc == 0
        header, rows = _read_csv(tmp_path / "out" / "persistence.csv")
        assert header == ["epsilon", "j", "margin", "half_gap"]
        assert len(rows) == 2
        for r in rows:
            assert float(r[2]) >= 0.0
