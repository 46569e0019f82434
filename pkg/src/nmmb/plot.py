"""Minimal SVG line plots of scenario reports."""
import math
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .errors import DomainError

WIDTH, HEIGHT = 720, 440
MARGIN = dict(left=80, right=150, top=30, bottom=60)
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
          "#e377c2", "#17becf")
LOG_FLOOR = 1e-12


def _nice_ticks(lo, hi, n=5):
    span = hi - lo
    if span <= 0:
        return [lo]
    raw = span / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=raw)
    start = math.ceil(lo / step) * step
    ticks = []
    x = start
    while x <= hi + 1e-9 * step:
        ticks.append(round(x, 12))
        x += step
    return ticks


def _fmt_tick(v):
    return f"{v:g}"


def _svg_panel(times, series, title, ylabel, log_y=False):
    """One panel. ``series`` is a list of ``(label, values)``."""
    x0, x1 = float(times[0]), float(times[-1])
    if x1 <= x0:
        x1 = x0 + 1.0
    if log_y:
        vals = np.concatenate([np.maximum(v, LOG_FLOOR) for _, v in series])
        y0 = math.floor(math.log10(max(float(vals.min()), LOG_FLOOR)))
        y1 = math.ceil(math.log10(float(vals.max())))
        if y1 <= y0:
            y1 = y0 + 1
    else:
        vals = np.concatenate([v for _, v in series])
        y0 = min(0.0, float(vals.min()))
        y1 = max(1.0, float(vals.max()))
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def sx(x):
        return MARGIN["left"] + (x - x0) / (x1 - x0) * pw

    def sy(y):
        if log_y:
            y = math.log10(max(y, LOG_FLOOR))
        return MARGIN["top"] + (1.0 - (y - y0) / (y1 - y0)) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
           f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
           f'<text x="{MARGIN["left"]}" y="18" font-size="14">{escape(title)}</text>',
           f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" '
           f'fill="none" stroke="black"/>']
    for xt in _nice_ticks(x0, x1):
        X = sx(xt)
        out.append(f'<line x1="{X:.2f}" y1="{MARGIN["top"] + ph}" x2="{X:.2f}" '
                   f'y2="{MARGIN["top"] + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{X:.2f}" y="{MARGIN["top"] + ph + 18}" '
                   f'text-anchor="middle">{_fmt_tick(xt)}</text>')
    if log_y:
        yticks = [(10.0 ** e, f"1e{e}") for e in range(y0, y1 + 1)]
    else:
        yticks = [(v, _fmt_tick(v)) for v in _nice_ticks(y0, y1)]
    for yv, lab in yticks:
        Y = sy(yv)
        out.append(f'<line x1="{MARGIN["left"] - 5}" y1="{Y:.2f}" x2="{MARGIN["left"]}" '
                   f'y2="{Y:.2f}" stroke="black"/>')
        out.append(f'<text x="{MARGIN["left"] - 8}" y="{Y + 4:.2f}" '
                   f'text-anchor="end">{lab}</text>')
    out.append(f'<text x="{MARGIN["left"] + pw / 2:.1f}" y="{HEIGHT - 15}" '
               f'text-anchor="middle">t [&#8466;&#178;]</text>')
    out.append(f'<text x="18" y="{MARGIN["top"] + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 18 {MARGIN["top"] + ph / 2:.1f})">{escape(ylabel)}</text>')
    for j, (label, v) in enumerate(series):
        color = COLORS[j % len(COLORS)]
        pts = " ".join(f"{sx(float(t)):.2f},{sy(float(y)):.2f}" for t, y in zip(times, v))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{pts}"/>')
        ly = MARGIN["top"] + 15 + 18 * j
        lx = MARGIN["left"] + pw + 10
        out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 20}" y2="{ly - 4}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 25}" y="{ly}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_plot(report, prefix, panels=("p1", "metrics"),
              metrics=("d_full", "p_lower", "p_upper", "d_1p")):
    """Write one SVG per panel and return their paths.

    ``p1`` is a semilogarithmic plot of the survival probabilities; ``metrics``
    compares the selected distances on a linear scale.
    """
    if not panels:
        raise DomainError("no plot panel selected")
    if "metrics" in panels and not metrics:
        raise DomainError("metric panel requested with an empty metric selection")
    times = np.asarray(report.times)
    if times.size == 0:
        raise DomainError("empty report")
    prefix = Path(prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    paths = []
    if "p1" in panels:
        p1 = report.extra.get("p1", {})
        if not p1:
            raise DomainError("report carries no survival probabilities")
        series = [(f"P1 |{n}>", np.asarray(v)) for n, v in p1.items()]
        path = prefix.with_name(prefix.name + "_p1.svg")
        path.write_text(_svg_panel(times, series, "Survival probability in the system",
                                   "P1", log_y=True))
        paths.append(path)
    if "metrics" in panels:
        series = [(m, np.asarray(getattr(report, m))) for m in metrics]
        for kp, v in sorted(report.d_kp.items()):
            series.append((f"d_{kp}p", np.asarray(v)))
        path = prefix.with_name(prefix.name + "_metrics.svg")
        path.write_text(_svg_panel(times, series, "Trace distance and estimators", "distance"))
        paths.append(path)
    return paths
