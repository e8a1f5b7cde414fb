"""Minimal SVG writers for sweep plots and coalition snapshots.

Output is plain text built by hand, so identical inputs give identical bytes.
Every file carries its provenance (config hash, seeds) as XML comments.
"""
from __future__ import annotations

import math
from html import escape

COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
          "#bcbd22", "#17becf")
W, H = 640, 420
ML, MR, MT, MB = 70, 150, 40, 55


def _f(x: float) -> str:
    return f"{x:.2f}"


def _comments(provenance: dict | None) -> list[str]:
    out = []
    for k, v in sorted((provenance or {}).items()):
        text = ",".join(str(x) for x in v) if isinstance(v, (list, tuple)) else str(v)
        out.append(f"<!-- {k}: {escape(text).replace('--', '- -')} -->")
    return out


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((s * mag for s in (1, 2, 2.5, 5, 10) if s * mag >= raw), default=raw)
    first = math.ceil(lo / step) * step
    return [first + i * step for i in range(int((hi - first) / step + 1e-9) + 1)]


def _label(x: float) -> str:
    return f"{x:g}" if abs(x) >= 1e-3 or x == 0 else f"{x:.1e}"


def line_plot(series: dict, title: str, xlabel: str, ylabel: str,
              provenance: dict | None = None, step: bool = False) -> str:
    """``series`` maps a label to (xs, ys) or (xs, ys, yerr); errors draw as bars."""
    pts = [(x, y) for s in series.values() for x, y in zip(s[0], s[1])]
    errs = [(y - e, y + e) for s in series.values() if len(s) > 2 for y, e in zip(s[1], s[2])]
    xs = [p[0] for p in pts] or [0.0, 1.0]
    ys = [p[1] for p in pts] + [v for e in errs for v in e] or [0.0, 1.0]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x0, x1 = x0 - 1, x1 + 1
    pad = (y1 - y0) * 0.05 or 1.0
    y0, y1 = y0 - pad, y1 + pad
    pw, ph = W - ML - MR, H - MT - MB

    def sx(x):
        return ML + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return MT + ph - (y - y0) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">']
    out += _comments(provenance)
    out.append(f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>')
    out.append(f'<text x="{W / 2 - MR / 2}" y="22" text-anchor="middle" font-size="15">{escape(title)}</text>')
    out.append(f'<rect x="{ML}" y="{MT}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    for t in _ticks(x0, x1):
        out.append(f'<line x1="{_f(sx(t))}" y1="{MT + ph}" x2="{_f(sx(t))}" y2="{MT + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{_f(sx(t))}" y="{MT + ph + 18}" text-anchor="middle" font-size="11">{_label(t)}</text>')
    for t in _ticks(y0, y1):
        out.append(f'<line x1="{ML - 5}" y1="{_f(sy(t))}" x2="{ML}" y2="{_f(sy(t))}" stroke="black"/>')
        out.append(f'<text x="{ML - 8}" y="{_f(sy(t) + 4)}" text-anchor="end" font-size="11">{_label(t)}</text>')
    out.append(f'<text x="{ML + pw / 2}" y="{H - 12}" text-anchor="middle" font-size="13">{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{MT + ph / 2}" text-anchor="middle" font-size="13" '
               f'transform="rotate(-90 16 {MT + ph / 2})">{escape(ylabel)}</text>')
    for n, (label, s) in enumerate(series.items()):
        color = COLORS[n % len(COLORS)]
        coords = list(zip(s[0], s[1]))
        if step:
            path = []
            for a, (x, y) in enumerate(coords):
                if a:
                    path.append((x, coords[a - 1][1]))
                path.append((x, y))
            coords = path
        poly = " ".join(f"{_f(sx(x))},{_f(sy(y))}" for x, y in coords)
        out.append(f'<polyline points="{poly}" fill="none" stroke="{color}" stroke-width="1.8"/>')
        if not step:
            for x, y in zip(s[0], s[1]):
                out.append(f'<circle cx="{_f(sx(x))}" cy="{_f(sy(y))}" r="3" fill="{color}"/>')
        if len(s) > 2:
            for x, y, e in zip(*s[:3]):
                out.append(f'<line x1="{_f(sx(x))}" y1="{_f(sy(y - e))}" x2="{_f(sx(x))}" y2="{_f(sy(y + e))}" '
                           f'stroke="{color}"/>')
        ly = MT + 12 + 18 * n
        out.append(f'<line x1="{W - MR + 12}" y1="{ly}" x2="{W - MR + 36}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{W - MR + 42}" y="{ly + 4}" font-size="12">{escape(str(label))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def convex_hull(points):
    """Monotone-chain hull, counter-clockwise, without collinear points."""
    pts = sorted(set(map(tuple, points)))
    if len(pts) <= 2:
        return pts

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def snapshot(net, structure, provenance: dict | None = None, title: str = "Coalition structure") -> str:
    """SBS positions with each multi-member coalition drawn as a hull over its members."""
    topo = net.topology
    size = 560
    pts = topo.sbs.tolist() + [topo.mbs.tolist()]
    xs, ys = [p[0] for p in pts], [p[1] for p in pts]
    span = max(max(xs) - min(xs), max(ys) - min(ys), 1.0)
    cx, cy = (max(xs) + min(xs)) / 2, (max(ys) + min(ys)) / 2
    scale = (size - 120) / span

    def sp(p):
        return size / 2 + (p[0] - cx) * scale, size / 2 - (p[1] - cy) * scale

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">']
    out += _comments(provenance)
    out.append(f'<rect x="0" y="0" width="{size}" height="{size}" fill="white"/>')
    out.append(f'<text x="{size / 2}" y="22" text-anchor="middle" font-size="15">{escape(title)}</text>')
    multi = [c for c in structure if len(c.support) > 1]
    for n, c in enumerate(multi):
        color = COLORS[n % len(COLORS)]
        hull = [sp(p) for p in convex_hull([tuple(topo.sbs[i]) for i in c.support])]
        if len(hull) == 2:
            (a, b), (p, q) = hull
            out.append(f'<line x1="{_f(a)}" y1="{_f(b)}" x2="{_f(p)}" y2="{_f(q)}" stroke="{color}" '
                       f'stroke-width="10" stroke-linecap="round" stroke-opacity="0.35"/>')
        else:
            poly = " ".join(f"{_f(x)},{_f(y)}" for x, y in hull)
            out.append(f'<polygon points="{poly}" fill="{color}" fill-opacity="0.15" stroke="{color}" '
                       f'stroke-width="2" stroke-linejoin="round"/>')
        lx, ly = sp(topo.sbs[c.support[0]])
        out.append(f'<text x="{_f(lx + 8)}" y="{_f(ly - 8 - 12 * (n % 3))}" font-size="11" fill="{color}">'
                   f'coalition {c.id}</text>')
    mx, my = sp(topo.mbs)
    out.append(f'<rect x="{_f(mx - 6)}" y="{_f(my - 6)}" width="12" height="12" fill="black"/>')
    out.append(f'<text x="{_f(mx + 9)}" y="{_f(my + 4)}" font-size="11">MBS</text>')
    for i in range(topo.n_sbs):
        x, y = sp(topo.sbs[i])
        out.append(f'<circle cx="{_f(x)}" cy="{_f(y)}" r="5" fill="#333"/>')
        out.append(f'<text x="{_f(x + 7)}" y="{_f(y + 14)}" font-size="11">SBS {i}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
