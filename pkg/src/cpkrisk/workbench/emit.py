"""Report and pass-curve emission: CSV, JSON and standalone SVG."""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from xml.sax.saxutils import escape

from .. import __version__
from ..capability import format_ppm
from ..samplesize import PassCurve
from .report import COLUMNS, CONVENTIONS, PPM_FIELDS, DimensionReport

__all__ = [
    "emit_reports",
    "emit_curves",
    "read_reports_json",
    "read_reports_csv",
    "reports_to_json",
    "reports_to_csv",
    "render_reports",
    "render_curves",
    "curves_to_svg",
    "sidecar_path",
    "write_sidecar",
]

# log10(PPM) below which the linear value is not written
_LOG10_LINEAR_FLOOR = -300.0
_INT_FIELDS = {"n", "B"}
_STR_FIELDS = {"dim", "dist", "decision", "rule", "error"}
_STRUCT_FIELDS = {"seed", "model_params"}

CSV_COLUMNS = tuple(
    col
    for name in COLUMNS
    for col in ((name, name + "_log10", name + "_disp") if name in PPM_FIELDS else (name,))
)


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".conventions.json")


def write_sidecar(path) -> None:
    payload = {"cpkrisk_version": __version__, "columns": list(COLUMNS), "conventions": CONVENTIONS}
    sidecar_path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# scalar encoding shared by JSON and CSV


def _enc(x):
    if isinstance(x, float):
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
    return x


def _dec(x) -> float:
    if x is None or x == "":
        return math.nan
    return float(x)


def _ppm_obj(lg: float) -> dict | None:
    if math.isnan(lg):
        return None
    lg_enc = _enc(lg)
    if lg < _LOG10_LINEAR_FLOOR:
        return {"log10_ppm": lg_enc}
    lin = 10.0**lg if lg > -math.inf else 0.0
    return {"ppm": lin, "log10_ppm": lg_enc, "display": format_ppm(lin, lg)}


def _report_obj(r: DimensionReport) -> dict:
    d = r.as_dict()
    out = {}
    for k in COLUMNS:
        v = d[k]
        if k in PPM_FIELDS:
            out[k] = _ppm_obj(v)
        elif k == "model_params":
            out[k] = [_enc(float(p)) for p in v]
        else:
            out[k] = _enc(v)
    return out


def reports_to_json(reports) -> str:
    body = {r.dim: _report_obj(r) for r in reports}
    return json.dumps(body, indent=2, allow_nan=False) + "\n"


def _from_fields(raw: dict) -> DimensionReport:
    kw = {}
    for k in COLUMNS:
        v = raw.get(k)
        if k in _STR_FIELDS:
            kw[k] = v or ""
        elif k in _INT_FIELDS:
            kw[k] = int(v)
        elif k == "seed":
            kw[k] = dict(v or {})
        elif k == "model_params":
            kw[k] = tuple(_dec(p) for p in (v or ()))
        else:
            kw[k] = _dec(v)
    return DimensionReport(**kw)


def read_reports_json(path) -> list[DimensionReport]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    out = []
    for dim, obj in data.items():
        raw = dict(obj)
        raw["dim"] = dim
        for k in PPM_FIELDS:
            raw[k] = None if raw.get(k) is None else raw[k]["log10_ppm"]
        out.append(_from_fields(raw))
    return out


def _csv_rows(reports):
    for r in reports:
        d = r.as_dict()
        row = []
        for name in COLUMNS:
            v = d[name]
            if name in PPM_FIELDS:
                if math.isnan(v):
                    row += ["", "", ""]
                else:
                    lin = r.ppm(name)
                    row += [repr(lin), repr(v) if math.isfinite(v) else _enc(v), format_ppm(lin, v)]
            elif name in _STRUCT_FIELDS:
                row.append(json.dumps([_enc(float(p)) for p in v] if name == "model_params" else v))
            elif isinstance(v, float):
                row.append("" if math.isnan(v) else repr(v))
            else:
                row.append(v)
        yield row


def read_reports_csv(path) -> list[DimensionReport]:
    out = []
    with Path(path).open(newline="", encoding="utf-8") as fh:
        for rec in csv.DictReader(fh):
            raw = {k: rec.get(k) for k in COLUMNS}
            for k in PPM_FIELDS:
                raw[k] = rec.get(k + "_log10")
            for k in _STRUCT_FIELDS:
                raw[k] = json.loads(rec[k]) if rec.get(k) else None
            out.append(_from_fields(raw))
    return out


def emit_reports(reports, fmt: str, path) -> Path:
    """Write reports as ``csv`` or ``json`` plus a conventions sidecar."""
    path = Path(path)
    reports = list(reports)
    path.write_text(render_reports(reports, fmt), encoding="utf-8")
    write_sidecar(path)
    return path


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    w.writerows(_csv_rows(reports))
    return buf.getvalue()


def render_reports(reports, fmt: str) -> str:
    if fmt == "json":
        return reports_to_json(reports)
    if fmt == "csv":
        return reports_to_csv(reports)
    raise ValueError(f"reports can be written as csv or json, not {fmt!r}")


# ---------------------------------------------------------------------------
# pass curves

_CURVE_COLUMNS = ("cpk_true", "c0", "n", "p_acc", "mc_std_err", "replications", "source")
_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _curve_records(curves):
    for c in curves:
        for p in c.points:
            yield (c.cpk_true, c.c0, p.n, p.p_acc, p.mc_std_err, c.replications, c.source)


def curves_to_svg(curves, gamma: float | None = None, width: int = 640, height: int = 420) -> str:
    """Pass probability against n (log axis) with an optional dashed gamma line."""
    curves = list(curves)
    left, right, top, bottom = 70, 150, 30, 60
    pw, ph = width - left - right, height - top - bottom
    ns = [p.n for c in curves for p in c.points]
    lo, hi = (min(ns), max(ns)) if ns else (1, 10)
    if hi <= lo:
        hi = lo * 2
    llo, lhi = math.log10(lo), math.log10(hi)

    def sx(n):
        return left + pw * (math.log10(n) - llo) / (lhi - llo)

    def sy(p):
        return top + ph * (1.0 - p)

    out = [
        '<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
        '<!DOCTYPE svg PUBLIC "-//W3C//DTD SVG 1.0//EN" "http://www.w3.org/TR/2001/REC-SVG-20010904/DTD/svg10.dtd">',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.0" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for k in range(6):
        p = k / 5
        y = sy(p)
        out.append(f'<line x1="{left - 4}" y1="{y:.2f}" x2="{left}" y2="{y:.2f}" stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{y + 4:.2f}" text-anchor="end">{p:.1f}</text>')
    ticks = sorted(set(ns)) if len(set(ns)) <= 12 else [lo, hi]
    for n in ticks:
        x = sx(n)
        out.append(f'<line x1="{x:.2f}" y1="{top + ph}" x2="{x:.2f}" y2="{top + ph + 4}" stroke="black"/>')
        out.append(f'<text x="{x:.2f}" y="{top + ph + 18}" text-anchor="middle">{n}</text>')
    out.append(f'<text x="{left + pw / 2:.2f}" y="{height - 15}" text-anchor="middle">n</text>')
    out.append(
        f'<text x="18" y="{top + ph / 2:.2f}" text-anchor="middle" '
        f'transform="rotate(-90 18 {top + ph / 2:.2f})">p_acc</text>'
    )
    if gamma is not None:
        y = sy(gamma)
        out.append(
            f'<line class="gamma" x1="{left}" y1="{y:.2f}" x2="{left + pw}" y2="{y:.2f}" '
            'stroke="gray" stroke-dasharray="6,4"/>'
        )
        out.append(f'<text x="{left + pw + 6}" y="{y + 4:.2f}">gamma = {gamma:g}</text>')
    for i, c in enumerate(curves):
        color = _PALETTE[i % len(_PALETTE)]
        pts = " ".join(f"{sx(p.n):.2f},{sy(p.p_acc):.2f}" for p in c.points)
        label = escape(f"Cpk_true = {c.cpk_true:.2f}" if math.isfinite(c.cpk_true) else f"curve {i + 1} ({c.source})")
        out.append(f'<g class="curve"><title>{label}</title>')
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="2"/>')
        for p in c.points:
            out.append(f'<circle cx="{sx(p.n):.2f}" cy="{sy(p.p_acc):.2f}" r="3" fill="{color}"/>')
        out.append("</g>")
        ly = top + 16 + 18 * i
        out.append(f'<line x1="{left + pw + 6}" y1="{ly}" x2="{left + pw + 26}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text class="label" x="{left + pw + 30}" y="{ly + 4}">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_curves(curves, fmt: str, path, gamma: float | None = None) -> Path:
    """Write pass curves as ``csv``, ``json`` or ``svg``."""
    path = Path(path)
    path.write_text(render_curves(curves, fmt, gamma), encoding="utf-8")
    return path


def render_curves(curves, fmt: str, gamma: float | None = None) -> str:
    curves = list(curves)
    if any(not isinstance(c, PassCurve) for c in curves):
        raise TypeError("expected PassCurve objects")
    if fmt == "svg":
        return curves_to_svg(curves, gamma)
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(_CURVE_COLUMNS)
        w.writerows([repr(v) if isinstance(v, float) else v for v in rec] for rec in _curve_records(curves))
        return buf.getvalue()
    if fmt == "json":
        body = [
            {
                "cpk_true": _enc(c.cpk_true),
                "c0": c.c0,
                "replications": c.replications,
                "source": c.source,
                "seed": c.seed.as_dict(),
                "points": [{"n": p.n, "p_acc": p.p_acc, "mc_std_err": p.mc_std_err} for p in c.points],
            }
            for c in curves
        ]
        return json.dumps({"gamma": gamma, "curves": body}, indent=2) + "\n"
    raise ValueError(f"curves can be written as csv, json or svg, not {fmt!r}")
