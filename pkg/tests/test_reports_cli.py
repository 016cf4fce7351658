from __future__ import annotations

import math
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from solgraph.cli import run
from solgraph.reports import (
    Marker,
    Polyline,
    csv_text,
    densify,
    emit_csv,
    emit_field,
    emit_manifest,
    emit_svg,
    format_cell,
    format_real,
    read_csv,
    read_field,
    sha256_file,
)

# --- reports -----------------------------------------------------------------


@settings(max_examples=200, deadline=None)
@given(st.floats(allow_nan=False, allow_infinity=False))
def test_format_real_round_trips(x):
    assert float(format_real(x)) == x


def test_format_cells():
    assert format_real(math.nan) == "nan"
    assert format_real(-math.inf) == "-inf"
    assert format_cell(True) == "true" and format_cell(np.bool_(False)) == "false"
    assert format_cell(np.int64(3)) == "3"
    assert format_cell(None) == ""
    assert format_cell(0.1) == "0.10000000000000001"


def test_csv_round_trip(tmp_path):
    rows = [{"a": 1, "b": 0.1, "c": "x", "d": True}, {"a": 2, "b": -1e-300, "c": None, "d": False}]
    path = emit_csv(rows, tmp_path / "t.csv")
    header, back = read_csv(path)
    assert header == ["a", "b", "c", "d"]
    assert back == rows
    assert "\r" not in path.read_text()


def test_header_only_csv(tmp_path):
    path = emit_csv([], tmp_path / "empty.csv", ["n", "mu"])
    assert path.read_text() == "n,mu\n"
    assert read_csv(path) == (["n", "mu"], [])


def test_csv_text_column_order():
    assert csv_text([{"b": 1}, {"a": 2}]) == "b,a\n1,\n,2\n"


def test_svg_output(tmp_path):
    pts = np.array([[0.0, 1.0], [1.0, 2.0]])
    path = emit_svg([Polyline(pts, "arc-A", label="A")], tmp_path / "f.svg", [Marker(0.5, 1.5, "P<1>")], title="t")
    text = path.read_text()
    assert text.startswith("<?xml")
    assert 'class="arc-A"' in text and "viewBox=" in text and "P&lt;1&gt;" in text
    poly = text.split('points="')[1].split('"')[0].split()
    assert len(poly) == 512
    first, last = (tuple(map(float, p.split(","))) for p in (poly[0], poly[-1]))
    assert first[1] > last[1]  # larger y drawn higher (smaller SVG coordinate)


def test_densify():
    pts = np.array([[0.0, 0.0], [3.0, 4.0]])
    d = densify(pts, 11)
    assert len(d) == 11
    assert np.allclose(np.linalg.norm(np.diff(d, axis=0), axis=1), 0.5)
    assert len(densify(np.zeros((600, 2)))) == 600


def test_field_and_manifest(tmp_path):
    nodes = np.array([[0.0, 1.0], [1.0, 1.5]])
    vals = np.array([0.25, -1.0 / 3.0])
    emit_field(nodes, vals, tmp_path / "field.csv")
    n2, v2 = read_field(tmp_path / "field.csv")
    assert np.array_equal(n2, nodes) and np.array_equal(v2, vals)
    emit_manifest(tmp_path, "0.1.0", {"z": 1, "a": 0.5}, ["field.csv"])
    _, rows = read_csv(tmp_path / "manifest.csv")
    assert [r["section"] for r in rows] == ["version", "config", "config", "checksum"]
    assert [r["key"] for r in rows][1:3] == ["a", "z"]
    assert rows[-1]["value"] == sha256_file(tmp_path / "field.csv")


# --- CLI ---------------------------------------------------------------------


def _run(tmp_path, name, *argv):
    out = tmp_path / name
    code = run(list(argv) + ["--out", str(out)])
    return code, out


def test_cli_constants(tmp_path):
    code, out = _run(tmp_path, "c", "constants", "--H", "0.5", "1")
    assert code == 0
    _, rows = read_csv(out / "constants.csv")
    assert [r["H"] for r in rows] == [0.5, 1.0]
    for r in rows:
        assert abs(r["T_residual"]) <= 1e-9 and abs(r["lbar_1_check"]) <= 1e-9
    assert (out / "manifest.csv").exists()


def test_cli_curve_points(tmp_path):
    code, out = _run(tmp_path, "k", "curve", "--H", "1", "--z", "2", "--samples", "100")
    assert code == 0
    _, pts = read_csv(out / "points.csv")
    assert [p["label"] for p in pts] == ["P1", "P2+", "P2-", "P3", "P4+", "P4-"]
    assert pts[0]["x"] == 0.0 and pts[0]["y"] == 2.0
    assert abs(pts[3]["x"]) < 1e-9
    _, curve = read_csv(out / "curve.csv")
    assert len(curve) == 100
    assert (out / "curve.svg").read_text().count("<circle") == 6


def test_cli_domain_pipeline(tmp_path):
    code, dom = _run(tmp_path, "d", "domain-build", "--kind", "b-empty", "--d", "0.3", "--eps", "0.1")
    assert code == 0
    dfile = str(dom / "domain.json")
    _, arcs = read_csv(dom / "arcs.csv")
    assert [a["kind"] for a in arcs] == ["A", "C", "A", "C"]
    code, chk = _run(tmp_path, "chk", "domain-check", "--domain", dfile, "--mode", "b-empty")
    assert code == 0
    _, summary = read_csv(chk / "summary.csv")
    assert {r["key"]: r["value"] for r in summary}["verdict"] == "pass"
    code, sol = _run(tmp_path, "s", "solve", "--domain", dfile, "--h", "0.03")
    assert code == 0
    for f in ("mesh.txt", "field.csv", "residuals.csv", "flux.csv"):
        assert (sol / f).exists()
    _, fl = read_csv(sol / "flux.csv")
    assert any(r["row"] == "balance" for r in fl)
    code, ex = _run(tmp_path, "e", "exhaust", "--domain", dfile, "--mode", "b-empty", "--n", "1,2,4", "--h", "0.03")
    assert code == 0
    _, rows = read_csv(ex / "exhaustion.csv")
    assert [r["n"] for r in rows] == [1, 2, 4]
    assert rows[0]["probe_gap"] is None and rows[1]["probe_gap"] > 0
    header, _ = read_csv(ex / "mask.csv")
    assert header == ["node_index", "x", "y"]


def test_cli_omega(tmp_path):
    code, out = _run(tmp_path, "o", "omega-s", "--H", "0.5", "--samples", "4")
    assert code == 0
    _, rows = read_csv(out / "omega_s.csv")
    assert [r["row"] for r in rows][-2:] == ["s0", "s_star"]
    star = rows[-1]
    assert abs(star["F"]) <= 1e-6 * star["alpha"]
    code, dom = _run(tmp_path, "od", "domain-build", "--kind", "omega-s", "--H", "0.5")
    assert code == 0
    code, chk = _run(tmp_path, "oc", "domain-check", "--domain", str(dom / "domain.json"), "--mode", "c-empty")
    _, summary = read_csv(chk / "summary.csv")
    assert {r["key"]: r["value"] for r in summary}["verdict"] == "pass"


def test_cli_usage_errors(tmp_path, capsys):
    assert run(["nonsense"]) == 2
    assert _run(tmp_path, "u1", "constants", "--H", "-1")[0] == 2
    assert _run(tmp_path, "u2", "solve", "--domain", str(tmp_path / "missing.json"))[0] == 2
    assert _run(tmp_path, "u3", "domain-build", "--kind", "b-empty", "--d", "5")[0] == 2
    assert _run(tmp_path, "u4", "curve", "--samples", "1")[0] == 2
    assert "error" in capsys.readouterr().err


def test_cli_numerical_failure(tmp_path):
    code, dom = _run(tmp_path, "d", "domain-build", "--kind", "b-empty")
    code, out = _run(
        tmp_path, "f", "solve", "--domain", str(dom / "domain.json"), "--bc", "3", "--max-newton", "1", "--tol-newton", "1e-30"
    )
    assert code == 1
    _, rows = read_csv(out / "diagnostic.csv")
    assert rows[0] == {"key": "error", "value": "SolveError"}
    assert (out / "manifest.csv").exists()


def test_cli_env_override(tmp_path, monkeypatch):
    target = tmp_path / "from_env"
    monkeypatch.setenv("SOLGRAPH_OUT", str(target))
    assert run(["constants", "--out", str(tmp_path / "ignored")]) == 0
    assert (target / "constants.csv").exists()
    assert not (tmp_path / "ignored").exists()


def test_cli_deterministic_manifest(tmp_path):
    a = _run(tmp_path, "r1", "omega-s", "--H", "1", "--samples", "3")[1]
    b = _run(tmp_path, "r2", "omega-s", "--H", "1", "--samples", "3")[1]
    assert (a / "manifest.csv").read_bytes() == (b / "manifest.csv").read_bytes()


def test_console_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "solgraph.cli", "constants", "--out", str(tmp_path / "m")],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "m" / "constants.csv").exists()
