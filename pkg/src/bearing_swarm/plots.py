"""Self-contained static SVG figures: scenario overlay, RMSE and MSCE traces.

Output is plain text built from fixed-precision numbers, so identical inputs
give byte-identical files.
"""
from __future__ import annotations

import math
from pathlib import Path

import numpy as np

W, H = 640, 420
MARGIN = dict(left=70, right=20, top=30, bottom=50)
MAX_POINTS = 2000
PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
           "#8c564b", "#e377c2", "#17becf", "#7f7f7f", "#bcbd22"]


def _num(v: float) -> str:
    return f"{v:.2f}"


def _thin(*arrays):
    k = len(arrays[0])
    if k <= MAX_POINTS:
        return arrays
    idx = np.unique(np.linspace(0, k - 1, MAX_POINTS).round().astype(int))
    return tuple(a[idx] for a in arrays)


class _Frame:
    def __init__(self, xlim, ylim, logy=False, equal=False):
        self.logy = logy
        x0, x1 = xlim
        y0, y1 = ylim
        if logy:
            y0, y1 = math.log10(y0), math.log10(y1)
        self.pw = W - MARGIN["left"] - MARGIN["right"]
        self.ph = H - MARGIN["top"] - MARGIN["bottom"]
        if equal:
            span = max(x1 - x0, (y1 - y0) * self.pw / self.ph)
            cx, cy = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
            x0, x1 = cx - span / 2, cx + span / 2
            yspan = span * self.ph / self.pw
            y0, y1 = cy - yspan / 2, cy + yspan / 2
        self.x0, self.x1, self.y0, self.y1 = x0, x1, y0, y1

    def X(self, x):
        return MARGIN["left"] + (np.asarray(x, dtype=float) - self.x0) / (self.x1 - self.x0) * self.pw

    def Y(self, y):
        y = np.asarray(y, dtype=float)
        if self.logy:
            y = np.log10(y)
        return MARGIN["top"] + (self.y1 - y) / (self.y1 - self.y0) * self.ph


def _header(title):
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
        f'viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">',
        '<defs><clipPath id="plot"><rect x="{}" y="{}" width="{}" height="{}"/></clipPath></defs>'.format(
            MARGIN["left"], MARGIN["top"], W - MARGIN["left"] - MARGIN["right"],
            H - MARGIN["top"] - MARGIN["bottom"]),
        f'<rect width="{W}" height="{H}" fill="white"/>',
        f'<text x="{W / 2:.1f}" y="18" text-anchor="middle" font-size="13">{title}</text>',
    ]


def _axes(fr: _Frame, xlabel, ylabel):
    out = [f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{fr.pw}" height="{fr.ph}" '
           'fill="none" stroke="black"/>']
    for v in _ticks(fr.x0, fr.x1):
        x = fr.X(v)
        out.append(f'<line x1="{_num(x)}" y1="{MARGIN["top"] + fr.ph}" x2="{_num(x)}" '
                   f'y2="{MARGIN["top"] + fr.ph + 4}" stroke="black"/>')
        out.append(f'<text x="{_num(x)}" y="{MARGIN["top"] + fr.ph + 16}" '
                   f'text-anchor="middle">{v:g}</text>')
    if fr.logy:
        for e in range(math.ceil(fr.y0), math.floor(fr.y1) + 1):
            y = MARGIN["top"] + (fr.y1 - e) / (fr.y1 - fr.y0) * fr.ph
            out.append(f'<line x1="{MARGIN["left"] - 4}" y1="{_num(y)}" x2="{MARGIN["left"] + fr.pw}" '
                       f'y2="{_num(y)}" stroke="#dddddd"/>')
            out.append(f'<text x="{MARGIN["left"] - 6}" y="{_num(y + 4)}" '
                       f'text-anchor="end">1e{e}</text>')
    else:
        for v in _ticks(fr.y0, fr.y1):
            y = fr.Y(v)
            out.append(f'<line x1="{MARGIN["left"] - 4}" y1="{_num(y)}" x2="{MARGIN["left"]}" '
                       f'y2="{_num(y)}" stroke="black"/>')
            out.append(f'<text x="{MARGIN["left"] - 6}" y="{_num(y + 4)}" '
                       f'text-anchor="end">{v:g}</text>')
    out.append(f'<text x="{MARGIN["left"] + fr.pw / 2:.1f}" y="{H - 12}" '
               f'text-anchor="middle">{xlabel}</text>')
    out.append(f'<text x="16" y="{MARGIN["top"] + fr.ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {MARGIN["top"] + fr.ph / 2:.1f})">{ylabel}</text>')
    return out


def _ticks(lo, hi, target=6):
    span = hi - lo
    if span <= 0:
        return [lo]
    raw = span / target
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step) * step
    vals = []
    v = start
    while v <= hi + 1e-9 * step:
        vals.append(round(v, 12) + 0.0)
        v += step
    return vals


def _polyline(xs, ys, color, width=1.0, dash=None, clip=True):
    pts = " ".join(f"{_num(x)},{_num(y)}" for x, y in zip(xs, ys))
    extra = f' stroke-dasharray="{dash}"' if dash else ""
    cp = ' clip-path="url(#plot)"' if clip else ""
    return (f'<polyline points="{pts}" fill="none" stroke="{color}" '
            f'stroke-width="{width}"{extra}{cp}/>')


def _legend(labels, colors, x, y):
    out = []
    for k, (lab, col) in enumerate(zip(labels, colors)):
        yy = y + 14 * k
        out.append(f'<line x1="{x}" y1="{yy}" x2="{x + 18}" y2="{yy}" stroke="{col}" stroke-width="2"/>')
        out.append(f'<text x="{x + 22}" y="{yy + 4}">{lab}</text>')
    return out


def _write(path, parts):
    path = Path(path)
    path.write_text("\n".join(parts + ["</svg>"]) + "\n")
    return path


def trajectory_svg(result, cfg, path):
    """True path, per-node estimates, sensors and links."""
    sensors = cfg.sensors
    ptrue = result.p_true
    pts = np.vstack((sensors, ptrue))
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    pad = 0.1 * max(hi - lo) + 1e-9
    fr = _Frame((lo[0] - pad, hi[0] + pad), (lo[1] - pad, hi[1] + pad), equal=True)
    parts = _header(f"{cfg.name}: target and node estimates")
    parts += _axes(fr, "x-location", "y-location")
    for i, j in cfg.edges:
        parts.append(f'<line x1="{_num(fr.X(sensors[i, 0]))}" y1="{_num(fr.Y(sensors[i, 1]))}" '
                     f'x2="{_num(fr.X(sensors[j, 0]))}" y2="{_num(fr.Y(sensors[j, 1]))}" '
                     'stroke="black" stroke-width="1.5"/>')
    t, pt = _thin(result.t, ptrue)
    parts.append(_polyline(fr.X(pt[:, 0]), fr.Y(pt[:, 1]), "#f2c200", width=5))
    for i in range(cfg.n):
        _, est = _thin(result.t, result.p_hat[:, i, :])
        ok = np.all(np.isfinite(est), axis=1)
        parts.append(_polyline(fr.X(est[ok, 0]), fr.Y(est[ok, 1]), PALETTE[i % len(PALETTE)],
                               width=1, dash="4 3"))
    for k, (sx, sy) in enumerate(sensors):
        parts.append(f'<circle cx="{_num(fr.X(sx))}" cy="{_num(fr.Y(sy))}" r="6" fill="#1f4fd6"/>')
        parts.append(f'<text x="{_num(fr.X(sx) + 8)}" y="{_num(fr.Y(sy) - 8)}">{k}</text>')
    x, y = fr.X(ptrue[0, 0]), fr.Y(ptrue[0, 1])
    parts.append(f'<polygon points="{_num(x)},{_num(y - 7)} {_num(x + 7)},{_num(y)} '
                 f'{_num(x)},{_num(y + 7)} {_num(x - 7)},{_num(y)}" fill="#2ca02c"/>')
    x, y = fr.X(ptrue[-1, 0]), fr.Y(ptrue[-1, 1])
    star = []
    for k in range(10):
        r = 8 if k % 2 == 0 else 3.5
        a = math.pi / 2 + k * math.pi / 5
        star.append(f"{_num(x + r * math.cos(a))},{_num(y - r * math.sin(a))}")
    parts.append(f'<polygon points="{" ".join(star)}" fill="#d62728"/>')
    return _write(path, parts)


def _log_traces_svg(t, values, title, ylabel, path, t_star=None):
    vals = np.asarray(values, dtype=float)
    finite = vals[np.isfinite(vals) & (vals > 0)]
    ymin = max(float(finite.min()) if finite.size else 1e-16, 1e-16)
    ymax = float(finite.max()) if finite.size else 1.0
    ylo = 10 ** math.floor(math.log10(ymin))
    yhi = 10 ** math.ceil(math.log10(max(ymax, ylo * 10)))
    fr = _Frame((float(t[0]), float(t[-1])), (ylo, yhi), logy=True)
    parts = _header(title)
    parts += _axes(fr, "t", ylabel)
    n = vals.shape[1]
    for i in range(n):
        tt, v = _thin(np.asarray(t), vals[:, i])
        v = np.clip(np.where(np.isfinite(v), v, yhi), ylo, yhi)
        parts.append(_polyline(fr.X(tt), fr.Y(v), PALETTE[i % len(PALETTE)], width=1.2))
    if t_star is not None and t[0] <= t_star <= t[-1]:
        x = fr.X(t_star)
        parts.append(f'<line x1="{_num(x)}" y1="{MARGIN["top"]}" x2="{_num(x)}" '
                     f'y2="{MARGIN["top"] + fr.ph}" stroke="gray" stroke-dasharray="6 4"/>')
        parts.append(f'<text x="{_num(x + 4)}" y="{MARGIN["top"] + 12}" fill="gray">t*</text>')
    parts += _legend([f"node {i}" for i in range(n)], PALETTE, W - MARGIN["right"] - 80,
                     MARGIN["top"] + 14)
    return _write(path, parts)


def rmse_svg(result, cfg, path):
    return _log_traces_svg(result.t, result.rmse, f"{cfg.name}: tracking error per node",
                           "RMSE", path, result.summary.get("t_star"))


def msce_svg(result, cfg, path):
    return _log_traces_svg(result.t, result.msce, f"{cfg.name}: consensus error per node",
                           "MSCE", path, result.summary.get("t_star"))
