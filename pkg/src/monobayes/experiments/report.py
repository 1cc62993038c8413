"""Serialisation of experiment reports: JSON, CSV and an SVG rate plot."""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

RADII_COLUMNS = ("scenario", "n", "replication", "radius", "seed")
BOUNDARY_COLUMNS = ("scenario", "n", "replication", "estimator", "abs_error", "seed")


def _as_dict(report) -> dict:
    return report.to_dict() if hasattr(report, "to_dict") else dict(report)


def report_json(report) -> str:
    return json.dumps(_as_dict(report), indent=2, sort_keys=True, allow_nan=False) + "\n"


def radii_csv(report) -> str:
    d = _as_dict(report)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RADII_COLUMNS)
    for r in d.get("replications", []):
        if "error" in r:
            continue
        w.writerow([d["scenario"], r["n"], r["replication"], repr(float(r["radius"])), r["seed"]])
    return buf.getvalue()


def boundary_csv(report) -> str:
    d = _as_dict(report)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BOUNDARY_COLUMNS)
    for r in d.get("replications", []):
        if "error" in r:
            continue
        for est in ("grenander_raw", "grenander_modified", "posterior_median"):
            w.writerow([d["scenario"], r["n"], r["replication"], est, repr(float(r[est])), r["seed"]])
    return buf.getvalue()


def read_radii_csv(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    return [
        {
            "scenario": row["scenario"],
            "n": int(row["n"]),
            "replication": int(row["replication"]),
            "radius": float(row["radius"]),
            "seed": int(row["seed"]),
        }
        for row in rows
    ]


def _rate_points(d):
    power = d.get("log_correction", 0.0) or 0.0
    pts = []
    for row in d["per_n"]:
        if row.get("mean_radius") is None:
            continue
        n = row["n"]
        pts.append((math.log(n / math.log(n)), math.log(row["mean_radius"]) - power * math.log(math.log(n))))
    return pts


def rate_svg(reports, width: int = 640, height: int = 420) -> str:
    """Log mean radius against log(n / log n): markers, the fitted line and a
    reference line of slope -1/3 through the centroid. Exactly two <line>
    elements are emitted per scenario."""
    reports = [_as_dict(r) for r in (reports if isinstance(reports, (list, tuple)) else [reports])]
    series = [(d, _rate_points(d)) for d in reports]
    xs = [p[0] for _, pts in series for p in pts] or [0.0, 1.0]
    ys = [p[1] for _, pts in series for p in pts] or [0.0, 1.0]
    x0, x1 = min(xs) - 0.2, max(xs) + 0.2
    y0, y1 = min(ys) - 0.3, max(ys) + 0.3
    m = 50

    def sx(v):
        return m + (v - x0) / (x1 - x0) * (width - 2 * m)

    def sy(v):
        return height - m - (v - y0) / (y1 - y0) * (height - 2 * m)

    palette = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<path d="M{m},{m} V{height - m} H{width - m}" stroke="black" fill="none"/>',
        f'<text x="{width / 2:.0f}" y="{height - 12}" text-anchor="middle" '
        f'font-size="13">log(n / log n)</text>',
        f'<text x="14" y="{height / 2:.0f}" font-size="13" '
        f'transform="rotate(-90 14 {height / 2:.0f})" text-anchor="middle">log radius</text>',
    ]
    for i, (d, pts) in enumerate(series):
        colour = palette[i % len(palette)]
        out.append(f'<g id="{d["scenario"]}">')
        for px, py in pts:
            out.append(f'<circle cx="{sx(px):.2f}" cy="{sy(py):.2f}" r="3.5" fill="{colour}"/>')
        if len(pts) >= 1:
            cx = sum(p[0] for p in pts) / len(pts)
            cy = sum(p[1] for p in pts) / len(pts)
            slope = d.get("slope")
            slope = 0.0 if slope is None else slope
            ref = d.get("target_exponent", -1.0 / 3.0)
            for s, dash in ((slope, ""), (ref, ' stroke-dasharray="6,4"')):
                ya, yb = cy + s * (x0 - cx), cy + s * (x1 - cx)
                out.append(
                    f'<line x1="{sx(x0):.2f}" y1="{sy(ya):.2f}" x2="{sx(x1):.2f}" '
                    f'y2="{sy(yb):.2f}" stroke="{colour}"{dash}/>'
                )
        label = f'{d["scenario"]}: slope {d.get("slope") if d.get("slope") is None else round(d["slope"], 3)}'
        out.append(f'<text x="{m + 10}" y="{m + 16 * (i + 1)}" font-size="12" fill="{colour}">{label}</text>')
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_report(report, fmt: str, out_dir) -> Path:
    """Write ``report`` as ``json`` (report.json), ``csv`` (radii.csv, plus
    boundary.csv for boundary reports) or ``svg`` (plot.svg)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    d = _as_dict(report)
    if fmt == "json":
        path = out / "report.json"
        _write(path, report_json(d))
    elif fmt == "csv":
        path = out / "radii.csv"
        _write(path, radii_csv(d))
        if d.get("kind") == "boundary":
            _write(out / "boundary.csv", boundary_csv(d))
    elif fmt == "svg":
        path = out / "plot.svg"
        _write(path, rate_svg([d]))
    else:
        raise ValueError(f"unknown format {fmt!r}")
    return path


def write_draws(report, out_dir) -> list[Path]:
    """One JSONL file per replication with draws, if they were kept."""
    paths = []
    root = Path(out_dir) / "draws"
    for r in getattr(report, "replications", []):
        if "draws" not in r:
            continue
        root.mkdir(parents=True, exist_ok=True)
        path = root / f"n{r['n']}_r{r['replication']}.jsonl"
        _write(path, "".join(json.dumps(P, separators=(",", ":")) + "\n" for P in r["draws"]))
        paths.append(path)
    return paths


def _write(path: Path, text: str):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
