"""Deterministic file emission: CSV tables, SVG figures, field files and run manifests.

CSV is the source of truth: reals are written at 17 significant digits so
every value re-parses to the same double.  SVG output is presentation only.
All writes go through a temporary file in the target directory followed by
an atomic rename.
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

MIN_SVG_POINTS = 512
SVG_MARGIN = 0.05
SVG_WIDTH = 800


def format_real(x: float) -> str:
    """Locale-free decimal text at 17 significant digits (round-trips exactly)."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def format_cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_real(float(value))
    return str(value)


def atomic_write_bytes(path: str | os.PathLike, data: bytes) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def atomic_write_text(path: str | os.PathLike, text: str) -> Path:
    return atomic_write_bytes(path, text.encode("utf-8"))


def csv_text(rows: Iterable[Mapping[str, Any]], columns: Sequence[str] | None = None) -> str:
    rows = list(rows)
    if columns is None:
        columns = []
        for row in rows:
            for key in row:
                if key not in columns:
                    columns.append(key)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_cell(row.get(c)) for c in columns])
    return buf.getvalue()


def emit_csv(rows: Iterable[Mapping[str, Any]], path: str | os.PathLike, columns: Sequence[str] | None = None) -> Path:
    """Write ``rows`` with a header row; an empty row set gives a header-only file."""
    return atomic_write_text(path, csv_text(rows, columns))


def parse_cell(text: str) -> Any:
    if text == "":
        return None
    if text in ("true", "false"):
        return text == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def read_csv(path: str | os.PathLike) -> tuple[list[str], list[dict]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, [])
        rows = [{k: parse_cell(v) for k, v in zip(header, r)} for r in reader]
    return header, rows


# ---------------------------------------------------------------------------
# SVG


@dataclass(frozen=True)
class Polyline:
    points: np.ndarray
    style: str = "curve"
    closed: bool = False
    label: str | None = None


@dataclass(frozen=True)
class Marker:
    x: float
    y: float
    label: str
    style: str = "point"


SVG_STYLE = """
.curve { fill: none; stroke: #1f4e79; stroke-width: 1.5; }
.arc-A { fill: none; stroke: #c0392b; stroke-width: 2; }
.arc-B { fill: none; stroke: #2471a3; stroke-width: 2; }
.arc-B-star { fill: none; stroke: #2471a3; stroke-width: 1; stroke-dasharray: 4 3; }
.arc-C { fill: none; stroke: #1e8449; stroke-width: 2; }
.mesh { fill: none; stroke: #aaaaaa; stroke-width: 0.3; }
.mask { fill: #f5b041; stroke: #af601a; stroke-width: 0.5; }
.point { fill: #000000; }
text { font-family: sans-serif; font-size: 12px; }
"""


def densify(points: np.ndarray, n_min: int = MIN_SVG_POINTS) -> np.ndarray:
    """Linear resampling by arc length so the polyline has at least ``n_min`` points."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(pts) >= n_min or len(pts) < 2:
        return pts
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    if s[-1] == 0.0:
        return np.repeat(pts[:1], n_min, axis=0)
    target = np.linspace(0.0, s[-1], n_min)
    return np.stack([np.interp(target, s, pts[:, 0]), np.interp(target, s, pts[:, 1])], axis=1)


def svg_text(polylines: Sequence[Polyline], markers: Sequence[Marker] = (), title: str | None = None) -> str:
    """SVG with the y axis pointing up and a viewBox fitted to the data with a 5% margin."""
    chunks = [np.asarray(p.points, dtype=float).reshape(-1, 2) for p in polylines]
    chunks += [np.array([[m.x, m.y]]) for m in markers]
    allpts = np.vstack(chunks) if chunks else np.zeros((1, 2))
    lo, hi = allpts.min(axis=0), allpts.max(axis=0)
    span = np.maximum(hi - lo, 1e-12 * max(1.0, float(np.abs(allpts).max())))
    span = np.where(span > 0, span, 1.0)
    pad = SVG_MARGIN * span
    x0, x1 = lo[0] - pad[0], hi[0] + pad[0]
    y0, y1 = lo[1] - pad[1], hi[1] + pad[1]
    w, h = x1 - x0, y1 - y0
    height = SVG_WIDTH * h / w

    def tx(p: np.ndarray) -> np.ndarray:
        # flip y so that larger y is drawn higher
        return np.stack([p[:, 0] - x0, y1 - p[:, 1]], axis=1)

    def f(v: float) -> str:
        return format(float(v), ".9g")

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_WIDTH}" height="{f(height)}" '
        f'viewBox="0 0 {f(w)} {f(h)}">',
        f"<style>{SVG_STYLE}</style>",
    ]
    if title:
        out.append(f"<title>{_escape(title)}</title>")
    out.append("<g>")
    for p in polylines:
        pts = tx(densify(p.points))
        body = " ".join(f"{f(a)},{f(b)}" for a, b in pts)
        tag = "polygon" if p.closed else "polyline"
        out.append(f'<{tag} class="{p.style}" points="{body}" vector-effect="non-scaling-stroke"/>')
        if p.label:
            mid = pts[len(pts) // 2]
            out.append(
                f'<text x="{f(mid[0])}" y="{f(mid[1])}" font-size="{f(0.03 * h)}">{_escape(p.label)}</text>'
            )
    for m in markers:
        (px, py), = tx(np.array([[m.x, m.y]]))
        out.append(f'<circle class="{m.style}" cx="{f(px)}" cy="{f(py)}" r="{f(0.006 * max(w, h))}"/>')
        out.append(
            f'<text x="{f(px + 0.01 * w)}" y="{f(py - 0.01 * h)}" font-size="{f(0.03 * h)}">{_escape(m.label)}</text>'
        )
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _escape(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;").replace('"', "&quot;")


def emit_svg(
    polylines: Sequence[Polyline], path: str | os.PathLike, markers: Sequence[Marker] = (), title: str | None = None
) -> Path:
    return atomic_write_text(path, svg_text(polylines, markers, title))


# ---------------------------------------------------------------------------
# fields and manifests


def field_rows(nodes: np.ndarray, values: np.ndarray) -> list[dict]:
    return [{"node_index": i, "x": float(x), "y": float(y), "u": float(u)} for i, ((x, y), u) in enumerate(zip(nodes, values))]


def emit_field(nodes: np.ndarray, values: np.ndarray, path: str | os.PathLike) -> Path:
    """Field file: CSV with columns node_index,x,y,u."""
    return emit_csv(field_rows(nodes, values), path, ["node_index", "x", "y", "u"])


def read_field(path: str | os.PathLike) -> tuple[np.ndarray, np.ndarray]:
    _, rows = read_csv(path)
    nodes = np.array([[r["x"], r["y"]] for r in rows], dtype=float).reshape(-1, 2)
    vals = np.array([r["u"] for r in rows], dtype=float)
    return nodes, vals


def sha256_file(path: str | os.PathLike) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def emit_manifest(
    out_dir: str | os.PathLike, version: str, config: Mapping[str, Any], files: Sequence[str | os.PathLike]
) -> Path:
    """manifest.csv: version, the config echo (sorted keys) and a sha256 per written file."""
    out_dir = Path(out_dir)
    rows = [{"section": "version", "key": "solgraph", "value": version}]
    for key in sorted(config):
        rows.append({"section": "config", "key": key, "value": format_cell(config[key])})
    for f in sorted({Path(p).name for p in files}):
        rows.append({"section": "checksum", "key": f, "value": sha256_file(out_dir / f)})
    return emit_csv(rows, out_dir / "manifest.csv", ["section", "key", "value"])
