"""Artifact writers: CSV tables, schema-versioned JSON reports, polyline SVG plots.

Everything written here is a pure function of its input, so identical runs
produce byte-identical files.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

SCHEMA_VERSION = "1.0"
_COLORS = ("#1f4e9c", "#000000", "#c0392b", "#27ae60", "#8e44ad", "#d35400", "#7f8c8d")
_DASHES = ("", "", "6,4", "8,3,2,3", "2,3", "10,4", "4,2")


@dataclass
class RunReport:
    command: str
    scenario: dict
    derived: dict = field(default_factory=dict)
    metrics: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    manifest: list = field(default_factory=list)

    def as_dict(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "command": self.command,
            "scenario": self.scenario,
            "derived": self.derived,
            "metrics": self.metrics,
            "warnings": list(self.warnings),
            "manifest": list(self.manifest),
        }


def load_schema():
    return json.loads(resources.files(__package__).joinpath("report_schema.json").read_text())


def _clean(obj):
    # JSON has no NaN/inf and no numpy scalars
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        return value if math.isfinite(value) else None
    return obj


def write_csv(path, columns: dict):
    """Header row, then one row per sample, values at 17 significant digits."""
    names = list(columns)
    data = np.column_stack([np.asarray(columns[n], dtype=float) for n in names])
    lines = [",".join(names)]
    lines.extend(",".join(format(v, ".17g") for v in row) for row in data)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    return Path(path)


def read_csv(path):
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    names = lines[0].split(",")
    data = np.array([[float(v) for v in line.split(",")] for line in lines[1:]], dtype=float)
    data = data.reshape(len(lines) - 1, len(names))
    return {n: data[:, i] for i, n in enumerate(names)}


def write_json(path, report: RunReport):
    text = json.dumps(_clean(report.as_dict()), indent=2, sort_keys=True, allow_nan=False)
    Path(path).write_text(text + "\n", encoding="utf-8", newline="\n")
    return Path(path)


def write_svg(path, curves, title="", xlabel="", ylabel="", width=640, height=440):
    """One polyline per curve; ``curves`` is a sequence of (label, x, y)."""
    left, right, top, bottom = 70, 150, 40, 50
    pw, ph = width - left - right, height - top - bottom
    finite = [(lab, np.asarray(x, float), np.asarray(y, float)) for lab, x, y in curves]
    xs = np.concatenate([x[np.isfinite(x) & np.isfinite(y)] for _, x, y in finite])
    ys = np.concatenate([y[np.isfinite(x) & np.isfinite(y)] for _, x, y in finite])
    x0, x1 = (float(xs.min()), float(xs.max())) if xs.size else (0.0, 1.0)
    y0, y1 = (float(ys.min()), float(ys.max())) if ys.size else (0.0, 1.0)
    x1 = x1 if x1 > x0 else x0 + 1.0
    y1 = y1 if y1 > y0 else y0 + 1.0

    def px(x):
        return left + (x - x0) / (x1 - x0) * pw

    def py(y):
        return top + ph - (y - y0) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}">',
           f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
           f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>',
           f'<text x="{left + pw / 2:.1f}" y="24" text-anchor="middle" font-size="14">{_esc(title)}</text>',
           f'<text x="{left + pw / 2:.1f}" y="{height - 12}" text-anchor="middle" '
           f'font-size="12">{_esc(xlabel)}</text>',
           f'<text x="16" y="{top + ph / 2:.1f}" text-anchor="middle" font-size="12" '
           f'transform="rotate(-90 16 {top + ph / 2:.1f})">{_esc(ylabel)}</text>']
    for frac in (0.0, 0.5, 1.0):
        xv, yv = x0 + frac * (x1 - x0), y0 + frac * (y1 - y0)
        out.append(f'<text x="{px(xv):.1f}" y="{top + ph + 16}" text-anchor="middle" '
                   f'font-size="10">{xv:.4g}</text>')
        out.append(f'<text x="{left - 6}" y="{py(yv) + 4:.1f}" text-anchor="end" '
                   f'font-size="10">{yv:.4g}</text>')
    for i, (label, x, y) in enumerate(finite):
        ok = np.isfinite(x) & np.isfinite(y)
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x[ok], y[ok]))
        color, dash = _COLORS[i % len(_COLORS)], _DASHES[i % len(_DASHES)]
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        out.append(f'<polyline data-label="{_esc(label)}" fill="none" stroke="{color}" '
                   f'stroke-width="1.5"{dash_attr} points="{pts}"/>')
        ly = top + 14 + 18 * i
        out.append(f'<line x1="{left + pw + 10}" y1="{ly}" x2="{left + pw + 34}" y2="{ly}" '
                   f'stroke="{color}" stroke-width="1.5"{dash_attr}/>')
        out.append(f'<text x="{left + pw + 40}" y="{ly + 4}" font-size="11">{_esc(label)}</text>')
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8", newline="\n")
    return Path(path)


def _esc(text):
    return str(text).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;").replace('"', "&quot;")


@dataclass(frozen=True)
class Artifact:
    """What a command wants written: tables, plots, and the report itself."""

    stem: str
    tables: dict = field(default_factory=dict)   # suffix -> columns
    plots: dict = field(default_factory=dict)    # suffix -> (curves, title, xlabel, ylabel)


def emit_outputs(report: RunReport, artifact: Artifact, out_dir, formats=("csv", "json")):
    """Write the requested formats and return the manifest (file names, sorted as written)."""
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as err:
        raise OSError(f"cannot create output directory {out_dir}: {err.strerror}") from None
    manifest = []
    if "csv" in formats:
        for suffix, columns in artifact.tables.items():
            name = f"{artifact.stem}{suffix}.csv"
            write_csv(out_dir / name, columns)
            manifest.append(name)
    if "svg" in formats:
        for suffix, (curves, title, xlabel, ylabel) in artifact.plots.items():
            name = f"{artifact.stem}{suffix}.svg"
            write_svg(out_dir / name, curves, title, xlabel, ylabel)
            manifest.append(name)
    if "json" in formats:
        name = f"{artifact.stem}.json"
        manifest.append(name)
        report.manifest = list(manifest)
        write_json(out_dir / name, report)
    else:
        report.manifest = list(manifest)
    return manifest
