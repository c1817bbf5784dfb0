import json
import math

import numpy as np
import pytest

from seqweak.cli import main
from seqweak.detector import DetectorConfig, read_frame
from seqweak.errors import ConfigurationError, InvalidArgumentError
from seqweak.harness import (
    COLUMNS,
    SweepResult,
    emit,
    load_spec,
    preset_spec,
    read_plotdata,
    read_table,
    run_point,
    run_sweep,
    spec_from_dict,
    split_photons,
)
from seqweak.polarization import H, V, linear_state


@pytest.fixture
def spec_a():
    return preset_spec("hpost")


@pytest.fixture
def spec_b():
    return preset_spec("anomalous")


def test_spec_defaults(spec_a):
    assert len(spec_a.theta_grid) == 33
    assert spec_a.theta_grid[0] == 0 and spec_a.theta_grid[-1] == pytest.approx(math.pi)
    assert spec_a.g_x == spec_a.g_y == 0.15
    assert spec_a.mode == "exact" and spec_a.n_frames == 50


def test_spec_parsing_forms(tmp_path):
    doc = {
        "pre": {"theta": 0.3},
        "post": {"h": [0.0, 1.0], "v": [0.0, 0.0]},
        "theta_grid": {"start": 0.1, "stop": 0.5, "num": 5},
        "g_x": 0.1, "g_y": 0.2, "sigma": 2.0,
        "mode": "sampled",
        "detector": {"n_pixels": 16, "pixel_pitch": 0.5, "seed": 3},
        "n_signal_photons": 1000, "n_frames": 4,
    }
    path = tmp_path / "s.json"
    path.write_text(json.dumps(doc))
    spec = load_spec(path)
    assert spec.pre == linear_state(0.3)
    assert abs(spec.post.amp_h) == pytest.approx(1)
    assert spec.theta_grid == pytest.approx((0.1, 0.2, 0.3, 0.4, 0.5))
    assert (spec.g_x, spec.g_y) == (0.2, 0.4)  # sigma units
    assert spec.detector.pixel_pitch == 1.0
    assert spec.detector.n_pixels == 16


@pytest.mark.parametrize("doc", [
    {"preset": "nope"},
    {"pre": [1, 0]},
    {"preset": "hpost", "theta_grid": []},
    {"preset": "hpost", "mode": "fast"},
    {"preset": "hpost", "colour": 1},
])
def test_spec_errors(doc):
    with pytest.raises(ConfigurationError):
        spec_from_dict(doc)


def test_split_photons():
    assert split_photons(10, 3) == [4, 3, 3]
    assert sum(split_photons(1_000_000, 50)) == 1_000_000


def test_run_point_hpost_analytic(spec_a):
    spec = spec_from_dict({"preset": "hpost", "mode": "analytic"})
    for theta in (0.0, 0.4, 2.0):
        assert run_point(spec, theta).pi_v_w == 0


def test_run_point_anomalous_pi2(spec_b):
    spec = spec_from_dict({"preset": "anomalous", "mode": "analytic"})
    row = run_point(spec, math.pi / 2)
    expected = 0.918 * 0.861 / (-0.397 * 0.509 + 0.918 * 0.861)
    assert row.seq_w == pytest.approx(row.pi_v_w, abs=1e-12)
    assert row.pi_v_w == pytest.approx(expected, abs=1e-12)


def test_run_point_weak_limit(spec_b):
    exact = spec_from_dict({"preset": "anomalous", "g_x": 1e-4, "g_y": 1e-4})
    row = run_point(exact, 1.1)
    got = np.array([row.pi_psi_w, row.pi_v_w, row.seq_w])
    ref = np.array([row.analytic_pi_psi_w, row.analytic_pi_v_w, row.analytic_seq_w])
    np.testing.assert_allclose(got, ref, atol=1e-6)


def test_degenerate_row_flagged():
    spec = spec_from_dict({"pre": [1, 0], "post": [0, 1], "theta_grid": [0.2]})
    row = run_point(spec, 0.2)
    assert row.degenerate and math.isnan(row.pi_psi_w)
    # <post|pre> does not depend on theta, so the whole sweep is degenerate
    with pytest.raises(ConfigurationError):
        run_sweep(spec)


def test_isolated_flagged_row_not_fatal(monkeypatch):
    import seqweak.harness as hs

    real = hs.run_point

    def flaky(spec, theta, index=0):
        return hs._flagged_row(theta) if index == 1 else real(spec, theta, index)

    monkeypatch.setattr(hs, "run_point", flaky)
    res = hs.run_sweep(spec_from_dict({"preset": "hpost", "theta_grid": [0.1, 0.2, 0.3]}))
    assert [r.degenerate for r in res.rows] == [False, True, False]
    assert np.isfinite(res.summary()["seq_w"])


def test_sweep_theta_zero_seq_vanishes():
    for p in ("hpost", "anomalous"):
        res = run_sweep(spec_from_dict({"preset": p, "theta_grid": [0.0], "mode": "analytic"}))
        assert res.rows[0].analytic_seq_w == 0


def test_sweep_hpost_closed_form(spec_a):
    res = run_sweep(spec_a)
    th = res.column("theta")
    closed = np.cos(th) * np.sin(th) * 0.809 / 0.588
    np.testing.assert_allclose(res.column("analytic_seq_w"), closed, atol=1e-12)
    assert np.max(np.abs(res.column("seq_w") - closed)) < 0.01
    assert res.summary()["seq_w"] < 0.01


def test_sampled_sweep_deterministic():
    doc = {"preset": "anomalous", "mode": "sampled", "theta_grid": [0.5, 1.5],
           "n_signal_photons": 100_000, "n_frames": 10, "detector": {"seed": 5}}
    a = run_sweep(spec_from_dict(doc))
    b = run_sweep(spec_from_dict(doc), workers=2)
    assert a.rows == b.rows
    c = run_sweep(spec_from_dict({**doc, "detector": {"seed": 6}}))
    assert a.rows != c.rows


def test_sampled_within_bands_of_exact():
    doc = {"preset": "hpost", "theta_grid": list(np.linspace(0.2, 2.9, 6)),
           "n_signal_photons": 1_000_000, "n_frames": 50, "detector": {"seed": 1}}
    exact = run_sweep(spec_from_dict(doc))
    sampled = run_sweep(spec_from_dict({**doc, "mode": "sampled"}))
    for q in ("pi_psi_w", "pi_v_w", "seq_w"):
        z = (sampled.column(q) - exact.column(q)) / sampled.column(q + "_se")
        assert np.all(np.abs(z) < 3.5), q


def test_emit_table_round_trip(tmp_path, spec_b):
    res = run_sweep(spec_b)
    path = emit(res, "table", tmp_path)
    lines = path.read_text().splitlines()
    assert lines[0].split(",") == list(COLUMNS)
    assert len(lines) == 34
    back = read_table(path)
    for r, b in zip(res.rows, back.rows):
        for v, w in zip(r, b):
            assert float(f"{float(v):.9g}") == w


def test_emit_single_row(tmp_path):
    res = run_sweep(spec_from_dict({"preset": "hpost", "theta_grid": [0.3]}))
    lines = emit(res, "table", tmp_path).read_text().splitlines()
    assert len(lines) == 2


def test_emit_empty_and_bad(tmp_path):
    with pytest.raises(InvalidArgumentError):
        emit(SweepResult([]), "table", tmp_path)
    res = run_sweep(spec_from_dict({"preset": "hpost", "theta_grid": [0.3]}))
    with pytest.raises(InvalidArgumentError):
        emit(res, "xml", tmp_path)


def test_emit_unwritable(tmp_path):
    res = run_sweep(spec_from_dict({"preset": "hpost", "theta_grid": [0.3]}))
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(OSError):
        emit(res, "table", blocker / "sub")


def test_plotdata_series(tmp_path, spec_b):
    res = run_sweep(spec_b)
    series = read_plotdata(emit(res, "plotdata", tmp_path))
    assert set(series) == {(s, q) for s in ("exact", "analytic") for q in ("pi_psi_w", "pi_v_w", "seq_w")}
    th, val, _ = series[("analytic", "pi_v_w")]
    assert len(th) == 33
    np.testing.assert_allclose(val, res.column("analytic_pi_v_w"), rtol=1e-8)


# -- CLI --------------------------------------------------------------------

def test_cli_sweep(tmp_path, capsys):
    assert main(["sweep", "--preset", "anomalous", "--out", str(tmp_path), "--format", "both"]) == 0
    assert (tmp_path / "sweep.csv").exists()
    assert (tmp_path / "sweep_plotdata.csv").exists()
    assert (tmp_path / "sweep.png").stat().st_size > 0


def test_cli_sweep_spec_file(tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"preset": "hpost", "theta_grid": [0.1, 0.2], "n_signal_photons": 20000,
                                "n_frames": 4}))
    out = tmp_path / "o"
    assert main(["sweep", "--spec", str(spec), "--mode", "sampled", "--seed", "3",
                 "--out", str(out), "--no-figure"]) == 0
    res = read_table(out / "sweep.csv")
    assert len(res.rows) == 2 and res.rows[0].pi_psi_w_se > 0


def test_cli_point(capsys):
    assert main(["point", "--preset", "anomalous", "--theta", str(math.pi / 2), "--mode", "analytic"]) == 0
    row = json.loads(capsys.readouterr().out)
    assert row["pi_v_w"] == pytest.approx(1.3435, abs=1e-4)


def test_cli_frames_and_analyze(tmp_path, capsys):
    fdir = tmp_path / "frames"
    assert main(["frames", "--preset", "anomalous", "--theta", "0.8", "--seed", "2",
                 "--out", str(fdir)]) == 0
    files = sorted(fdir.glob("frame_*.json"))
    assert len(files) == 50
    assert read_frame(files[0]).config.seed == 2
    capsys.readouterr()
    out = tmp_path / "rep"
    assert main(["analyze", str(fdir), "--preset", "anomalous", "--theta", "0.8", "--out", str(out)]) == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["n_frames"] == 50
    assert abs(rep["pi_v_w"] - rep["analytic_refs"]["pi_v_w"]) < 4 * rep["pi_v_w_se"] + 0.01


def test_cli_analyze_with_calibration(tmp_path):
    cal = tmp_path / "cal"
    data = tmp_path / "data"
    spec = tmp_path / "s.json"
    spec.write_text(json.dumps({"preset": "anomalous", "g_x": 0.0, "g_y": 0.0, "n_frames": 5}))
    assert main(["frames", "--spec", str(spec), "--theta", "0.8", "--out", str(cal), "--no-figure"]) == 0
    assert main(["frames", "--preset", "anomalous", "--theta", "0.8", "--out", str(data), "--no-figure"]) == 0
    assert main(["analyze", str(data), "--preset", "anomalous", "--calibration", str(cal),
                 "--method", "bootstrap", "--out", str(tmp_path / "r")]) == 0


def test_cli_scan(tmp_path, capsys):
    assert main(["scan", "--preset", "hpost", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "slope=" in out
    assert (tmp_path / "scan.csv").exists() and (tmp_path / "scan.png").exists()


def test_cli_error_exit(tmp_path, capsys):
    assert main(["analyze", str(tmp_path), "--preset", "hpost"]) == 2
    assert "error" in capsys.readouterr().err
