"""Dependency-free SVG plots of sweep tables.

Output is plain text with fixed-precision coordinates, so identical tables
give byte-identical files.
"""
from __future__ import annotations

import math
from typing import Iterable, Mapping, Sequence

from .cycle import IDEAL, CycleReport
from .errors import NothingToPlot, QmeError
from .tables import report_row

PLOT_KINDS = {
    "entropy-vs-p": (("dSa_nats", "entropy change, heating stroke (nats)"), ("dSb_nats", "entropy change, work stroke (nats)")),
    "heat-work-vs-p": (("heat_pev", "absorbed heat (peV)"), ("work_pev", "extracted work (peV)")),
    "eta-power-vs-p": (("eta", "efficiency"), ("power_pev_per_s", "extracted power (peV/s)")),
}
COLORS = ("#c0392b", "#1f5fa8", "#2e8b57", "#8e44ad", "#d35400")

PANEL_W, PANEL_H = 360, 260
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 64, 16, 28, 48


def _num(row: Mapping, key: str) -> float:
    try:
        return float(row[key])
    except (TypeError, ValueError, KeyError):
        return math.nan


def _as_rows(table) -> list:
    return [report_row(r) if isinstance(r, CycleReport) else dict(r) for r in table]


def _ticks(lo: float, hi: float, n: int = 5) -> list:
    if hi == lo:
        return [lo]
    return [lo + (hi - lo) * k / (n - 1) for k in range(n)]


def _limits(values: Sequence[float], include_zero: bool) -> tuple:
    lo, hi = min(values), max(values)
    if include_zero:
        lo, hi = min(lo, 0.0), max(hi, 0.0)
    if hi - lo < 1e-12:
        pad = max(abs(hi), 1.0) * 0.05
        return lo - pad, hi + pad
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def _label(x: float) -> str:
    s = f"{x:.3g}"
    return "0" if s in ("-0", "0") else s


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _panel(rows: list, key: str, title: str, x0: float, series: list, tag: str) -> list:
    pts_all = [(_num(r, "p"), _num(r, key)) for r in rows]
    pts_all = [(x, y) for x, y in pts_all if math.isfinite(x) and math.isfinite(y)]
    if not pts_all:
        return [f'<text x="{x0 + PANEL_W / 2:.2f}" y="{PANEL_H / 2:.2f}" text-anchor="middle">no finite data</text>']
    xlo, xhi = _limits([x for x, _ in pts_all], include_zero=False)
    ylo, yhi = _limits([y for _, y in pts_all], include_zero=True)
    iw = PANEL_W - MARGIN_L - MARGIN_R
    ih = PANEL_H - MARGIN_T - MARGIN_B

    def sx(x):
        return x0 + MARGIN_L + (x - xlo) / (xhi - xlo) * iw

    def sy(y):
        return MARGIN_T + (yhi - y) / (yhi - ylo) * ih

    out = [
        f'<g id="panel-{tag}">',
        f'<rect x="{x0 + MARGIN_L:.2f}" y="{MARGIN_T:.2f}" width="{iw:.2f}" height="{ih:.2f}" fill="none" stroke="#000"/>',
        f'<text x="{x0 + MARGIN_L + iw / 2:.2f}" y="{MARGIN_T - 10:.2f}" text-anchor="middle">{_esc(title)}</text>',
        f'<text x="{x0 + MARGIN_L + iw / 2:.2f}" y="{PANEL_H - 8:.2f}" text-anchor="middle">measurement strength p</text>',
    ]
    for t in _ticks(xlo, xhi):
        out.append(f'<line x1="{sx(t):.2f}" y1="{MARGIN_T + ih:.2f}" x2="{sx(t):.2f}" y2="{MARGIN_T + ih + 4:.2f}" stroke="#000"/>')
        out.append(f'<text x="{sx(t):.2f}" y="{MARGIN_T + ih + 16:.2f}" text-anchor="middle">{_label(t)}</text>')
    for t in _ticks(ylo, yhi):
        out.append(f'<line x1="{x0 + MARGIN_L - 4:.2f}" y1="{sy(t):.2f}" x2="{x0 + MARGIN_L:.2f}" y2="{sy(t):.2f}" stroke="#000"/>')
        out.append(f'<text x="{x0 + MARGIN_L - 6:.2f}" y="{sy(t) + 4:.2f}" text-anchor="end">{_label(t)}</text>')
    if ylo < 0 < yhi:
        out.append(
            f'<line x1="{x0 + MARGIN_L:.2f}" y1="{sy(0):.2f}" x2="{x0 + MARGIN_L + iw:.2f}" y2="{sy(0):.2f}" stroke="#999" stroke-width="0.5"/>'
        )
    for (backend, kbt), color, marker in series:
        pts = [
            (_num(r, "p"), _num(r, key))
            for r in rows
            if r["backend"] == backend and _num(r, "kBT_pev") == kbt
        ]
        pts = sorted((x, y) for x, y in pts if math.isfinite(x) and math.isfinite(y))
        if not pts:
            continue
        coords = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in pts)
        if len(pts) > 1:
            dash = ' stroke-dasharray="6,4"' if backend == IDEAL else ""
            out.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>')
        if backend != IDEAL or len(pts) == 1:
            for x, y in pts:
                if marker == "square":
                    out.append(f'<rect x="{sx(x) - 3:.2f}" y="{sy(y) - 3:.2f}" width="6" height="6" fill="{color}"/>')
                else:
                    out.append(f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="3" fill="{color}"/>')
    out.append("</g>")
    return out


def emit_plot(table: Iterable, kind: str = "eta-power-vs-p") -> str:
    """Render a two-panel SVG of a sweep table.

    One curve per (backend, temperature); ideal-backend curves are dashed,
    pulse-backend curves are solid with markers.
    """
    if kind not in PLOT_KINDS:
        raise QmeError(f"unknown plot kind {kind!r}; expected one of {sorted(PLOT_KINDS)}")
    rows = _as_rows(table)
    if not rows:
        raise NothingToPlot("the table is empty")
    temps = sorted({_num(r, "kBT_pev") for r in rows if math.isfinite(_num(r, "kBT_pev"))})
    backends = sorted({r["backend"] for r in rows})
    series = []
    for b in backends:
        for i, t in enumerate(temps):
            series.append(((b, t), COLORS[i % len(COLORS)], "square" if i % 2 == 0 else "circle"))

    width = 2 * PANEL_W
    legend_h = 18 * len(series) + 8
    height = PANEL_H + legend_h
    body = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect width="{width}" height="{height}" fill="#fff"/>',
    ]
    for k, (key, title) in enumerate(PLOT_KINDS[kind]):
        body += _panel(rows, key, title, k * PANEL_W, series, "ab"[k])
    y = PANEL_H + 12
    for (b, t), color, _ in series:
        dash = ' stroke-dasharray="6,4"' if b == IDEAL else ""
        body.append(f'<line x1="{MARGIN_L:.2f}" y1="{y:.2f}" x2="{MARGIN_L + 30:.2f}" y2="{y:.2f}" stroke="{color}" stroke-width="1.5"{dash}/>')
        body.append(f'<text x="{MARGIN_L + 36:.2f}" y="{y + 4:.2f}">{_esc(b)}, kBT = {_label(t)} peV</text>')
        y += 18
    body.append("</svg>")
    return "\n".join(body) + "\n"
