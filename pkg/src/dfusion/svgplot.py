"""Static SVG rendering of CROC tables.

Hand-rolled SVG (no plotting library) so identical inputs always produce
byte-identical documents: log-log axes, one polyline per analytic series,
point markers for Monte Carlo series, diamond markers for the observation
bound, and a text legend.  Points that cannot live on a log axis
(q_f or q_m <= 0) are dropped and counted in the legend.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .sweep import ResultTable

PALETTE = ["#c0392b", "#2a63b0", "#b0309f", "#1ba2a6",
           "#7f8c1b", "#8e5d2f", "#34495e", "#d35400"]

WIDTH, HEIGHT = 720, 540
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 200, 40, 55
FLOOR = 1e-6  # smallest representable probability on the axes


@dataclass
class _Series:
    label: str
    points: list        # (q_f, q_m) kept
    dropped: int
    style: str          # "line" | "markers" | "bound"
    color: str


def _collect_series(table: ResultTable) -> list[_Series]:
    groups: dict[tuple, list] = {}
    for r in table.rows:
        groups.setdefault((r.scenario_id, r.engine), []).append(r)
    series = []
    for i, ((sid, engine), rows) in enumerate(groups.items()):
        rows = sorted(rows, key=lambda r: r.gamma)
        pts = [(r.q_f, r.q_m) for r in rows]
        kept = [(qf, qm) for qf, qm in pts if qf > 0 and qm > 0]
        series.append(_Series(
            label=f"{sid} [{engine}]", points=kept,
            dropped=len(pts) - len(kept),
            style="line" if engine == "analytic" else "markers",
            color=PALETTE[i % len(PALETTE)]))
    bound_groups: dict[str, list] = {}
    for b in table.bounds:
        bound_groups.setdefault(b.scenario_id, []).append(b)
    for sid, bs in bound_groups.items():
        pts = [(b.q_f, b.q_m) for b in sorted(bs, key=lambda b: b.g)]
        kept = [(qf, qm) for qf, qm in pts if qf > 0 and qm > 0]
        series.append(_Series(label=f"{sid} [bound]", points=kept,
                              dropped=len(pts) - len(kept), style="bound",
                              color="#000000"))
    return series


def _axis_range(values) -> tuple[float, float]:
    lo = min(values)
    hi = max(values)
    lo_dec = math.floor(math.log10(max(lo, FLOOR)))
    hi_dec = math.ceil(math.log10(min(max(hi, FLOOR), 1.0)))
    if hi_dec <= lo_dec:
        hi_dec = lo_dec + 1
    return 10.0 ** lo_dec, 10.0 ** hi_dec


def render_plot(table: ResultTable, title: str = "CROC") -> str:
    """Render a ResultTable as a deterministic standalone SVG document."""
    series = _collect_series(table)
    if not any(s.points for s in series):
        raise ValueError("nothing to plot: no strictly positive points")
    xs = [p[0] for s in series for p in s.points]
    ys = [p[1] for s in series for p in s.points]
    x0, x1 = _axis_range(xs)
    y0, y1 = _axis_range(ys)

    px0, px1 = MARGIN_L, WIDTH - MARGIN_R
    py0, py1 = HEIGHT - MARGIN_B, MARGIN_T

    def sx(v):
        t = (math.log10(v) - math.log10(x0)) / (math.log10(x1) - math.log10(x0))
        return px0 + t * (px1 - px0)

    def sy(v):
        t = (math.log10(v) - math.log10(y0)) / (math.log10(y1) - math.log10(y0))
        return py0 + t * (py1 - py0)

    def fmt(v):
        return f"{v:.2f}"

    out = []
    out.append(f'<svg xmlns="http://www.w3.org/2000/svg" '
               f'width="{WIDTH}" height="{HEIGHT}" '
               f'viewBox="0 0 {WIDTH} {HEIGHT}">')
    out.append(f'<rect width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>')
    out.append(f'<text x="{(px0 + px1) / 2:.0f}" y="20" '
               f'text-anchor="middle" font-size="15">{title}</text>')

    # decade grid and tick labels
    for dec in range(int(math.log10(x0)), int(math.log10(x1)) + 1):
        v = 10.0 ** dec
        x = sx(v)
        out.append(f'<line x1="{fmt(x)}" y1="{py0}" x2="{fmt(x)}" '
                   f'y2="{py1}" stroke="#dddddd"/>')
        out.append(f'<text x="{fmt(x)}" y="{py0 + 18}" text-anchor="middle" '
                   f'font-size="11">1e{dec}</text>')
    for dec in range(int(math.log10(y0)), int(math.log10(y1)) + 1):
        v = 10.0 ** dec
        y = sy(v)
        out.append(f'<line x1="{px0}" y1="{fmt(y)}" x2="{px1}" '
                   f'y2="{fmt(y)}" stroke="#dddddd"/>')
        out.append(f'<text x="{px0 - 6}" y="{fmt(y)}" text-anchor="end" '
                   f'font-size="11">1e{dec}</text>')
    out.append(f'<rect x="{px0}" y="{py1}" width="{px1 - px0}" '
               f'height="{py0 - py1}" fill="none" stroke="#000000"/>')
    out.append(f'<text x="{(px0 + px1) / 2:.0f}" y="{HEIGHT - 12}" '
               f'text-anchor="middle" font-size="13">'
               f'false-alarm probability q_f</text>')
    out.append(f'<text x="18" y="{(py0 + py1) / 2:.0f}" font-size="13" '
               f'text-anchor="middle" transform="rotate(-90 18 '
               f'{(py0 + py1) / 2:.0f})">missed-detection probability '
               f'q_m</text>')

    clip = lambda v, lo, hi: min(max(v, lo), hi)
    for s in series:
        pts = [(sx(clip(qf, x0, x1)), sy(clip(qm, y0, y1)))
               for qf, qm in s.points]
        if s.style == "line" and len(pts) >= 2:
            path = " ".join(f"{fmt(x)},{fmt(y)}" for x, y in pts)
            out.append(f'<polyline points="{path}" fill="none" '
                       f'stroke="{s.color}" stroke-width="1.5"/>')
        elif s.style == "markers":
            for x, y in pts:
                out.append(f'<rect x="{fmt(x - 3)}" y="{fmt(y - 3)}" '
                           f'width="6" height="6" fill="none" '
                           f'stroke="{s.color}"/>')
        else:  # bound
            for x, y in pts:
                out.append(f'<path d="M {fmt(x)} {fmt(y - 4)} L {fmt(x + 4)} '
                           f'{fmt(y)} L {fmt(x)} {fmt(y + 4)} L {fmt(x - 4)} '
                           f'{fmt(y)} Z" fill="none" stroke="{s.color}"/>')

    # legend
    lx = px1 + 12
    for i, s in enumerate(series):
        ly = py1 + 14 + 16 * i
        out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 18}" '
                   f'y2="{ly - 4}" stroke="{s.color}" stroke-width="2"/>')
        note = f" ({s.dropped} dropped)" if s.dropped else ""
        out.append(f'<text x="{lx + 24}" y="{ly}" font-size="10">'
                   f'{s.label}{note}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
