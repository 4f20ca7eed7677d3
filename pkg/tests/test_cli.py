import csv
import io
import math

import numpy as np
import pytest

from ha_lab import counterexamples as cx
from ha_lab.cli import main
from ha_lab.grid import indicator, make_grid_function, read_grid_csv, write_grid_csv


def _rows(text):
    return list(csv.reader(io.StringIO("\n".join(l for l in text.splitlines() if not l.startswith("#")))))


@pytest.fixture
def unit(tmp_path):
    path = tmp_path / "f.csv"
    write_grid_csv(indicator([(0, 1)]), path)
    return str(path)


def test_norms(unit, capsys):
    assert main(["norms", "--in", unit, "--lp", "2", "--lorentz", "2", "2", "--weighted", "0", "3", "--net", "2", "2"]) == 0
    rows = _rows(capsys.readouterr().out)
    assert rows[0] == ["norm", "params", "value"]
    vals = {r[0]: float(r[2]) for r in rows[1:]}
    assert vals["lp"] == pytest.approx(1.0)
    assert vals["lorentz"] == pytest.approx(1.0)
    assert vals["weighted"] == pytest.approx(1.0)
    assert vals["net"] > 0


def test_norms_needs_a_norm(unit, capsys):
    assert main(["norms", "--in", unit]) == 2
    assert "at least one norm" in capsys.readouterr().err


def test_fourier_output_is_grid_csv(unit, tmp_path):
    out = tmp_path / "F.csv"
    assert main(["fourier", "--in", unit, "--extent", "8", "--cells", "16", "--out", str(out)]) == 0
    F = read_grid_csv(out)
    assert F.shape == (16,)
    # the cell next to 0 averages the transform of chi_(0,1), close to 1 there
    assert abs(F.values[8]) == pytest.approx(1.0, abs=0.1)


def test_hardy_plain_and_schedule(unit, tmp_path, capsys):
    out = tmp_path / "H.csv"
    assert main(["hardy", "--in", unit, "--eps", "1", "--out", str(out)]) == 0
    H = read_grid_csv(out)
    assert H.integral().real == pytest.approx(1.0, rel=1e-6)  # int B chi = int chi
    rep = tmp_path / "rep.csv"
    code = main(["hardy", "--in", unit, "--schedule", "2,4,8", "--cells", "32", "--tol", "1e-12", "--report", str(rep), "--out", str(out)])
    assert code in (0, 3)
    text = rep.read_text()
    assert text.startswith("N,gap\n")
    assert ("converged=True" in text) == (code == 0)


def test_hardy_schedule_converges(unit, tmp_path):
    # schedules past the support reach a zero gap
    rep = tmp_path / "rep.csv"
    code = main(["hardy", "--in", unit, "--schedule", "4,8", "--cells", "16", "--report", str(rep), "--out", str(tmp_path / "T.csv")])
    assert code == 0
    assert "converged=True" in rep.read_text()


def test_verify(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("kind = hardy_lp\nfamily = gaussian\np = 2\nlevels = 2\n")
    assert main(["verify", "--config", str(cfg)]) == 0
    rows = _rows(capsys.readouterr().out)
    assert rows[0][:3] == ["kind", "level", "N"]
    assert [r[1] for r in rows[1:]] == ["0", "1"]
    ratios = [float(r[5]) for r in rows[1:]]
    assert all(1.0 < x < 2.0 for x in ratios)


def test_verify_rejects_invalid_pitt(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("family = gaussian\nr = 4\nq = 2\nbeta = 5/4\n")
    assert main(["verify", "--config", str(cfg), "--kind", "pitt"]) == 2
    assert "r <= q" in capsys.readouterr().err


def test_verify_needs_kind(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("family = gaussian\n")
    assert main(["verify", "--config", str(cfg)]) == 2


def test_atoms(tmp_path, capsys):
    atom = tmp_path / "a.csv"
    assert main(["atoms", "--p", "2/3", "--interval", "0.5,1", "--seed", "3", "--atom-out", str(atom)]) == 0
    rows = _rows(capsys.readouterr().out)
    assert rows[0] == ["p", "N", "r", "J", "slope", "predicted"]
    assert len(rows) == 1 + 7
    slope, predicted = float(rows[1][4]), float(rows[1][5])
    assert slope <= predicted + 0.15
    a = read_grid_csv(atom)
    assert a.integral().real == pytest.approx(0.0, abs=1e-12)


def test_atoms_rejects_non_dyadic(capsys):
    assert main(["atoms", "--p", "1", "--interval", "0,0.3"]) == 2
    assert "dyadic" in capsys.readouterr().err


def test_counterexample_modes(capsys):
    assert main(["counterexample", "--mode", "reverse_hardy", "--p", "1/2", "--n-max", "4"]) == 0
    rows = _rows(capsys.readouterr().out)
    assert rows[0] == ["index", "I1", "log_I2"]
    assert [float(r[1]) for r in rows[1:]] == [1.0] * 4
    assert main(["counterexample", "--mode", "signed", "--p", "0.5", "--N", "16"]) == 0
    rows = _rows(capsys.readouterr().out)
    assert rows[0] == ["N", "I1", "I2"] and rows[1][0] == "16"
    assert main(["counterexample", "--mode", "signed", "--p", "0.5"]) == 2
    assert main(["counterexample", "--mode", "reverse_hardy", "--p", "2"]) == 2


def test_carleman(capsys):
    assert main(["carleman", "--what", "g", "--n", "8"]) == 0
    g = read_grid_csv(io.StringIO(capsys.readouterr().out))
    # one unit cell per coefficient; the cell around 0 is split there
    assert g.integral().real == pytest.approx(float(cx.CarlemanState(8).coeffs.sum()), rel=1e-12)
    assert main(["carleman", "--what", "f", "--n", "32", "--samples", "9"]) == 0
    out = capsys.readouterr().out
    assert len(_rows(out)) == 10
    gap = float(out.split("abel_gap=")[1].split()[0])
    assert gap < 1e-10


def test_bad_arguments_exit_2(capsys):
    assert main([]) == 2
    assert main(["norms"]) == 2
    assert main(["norms", "--in", "/nonexistent.csv", "--lp", "2"]) == 2


def test_round_trip_csv_through_cli(tmp_path, capsys):
    f = make_grid_function([np.array([-1.0, 0.0, 0.5, 2.0])], [0.25, -1.0, 3.0])
    path = tmp_path / "g.csv"
    write_grid_csv(f, path)
    assert main(["norms", "--in", str(path), "--lp", "inf"]) == 0
    rows = _rows(capsys.readouterr().out)
    assert float(rows[1][2]) == 3.0
    assert math.isfinite(float(rows[1][2]))
