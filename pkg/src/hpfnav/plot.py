"""Deterministic SVG plots of trajectory logs and potential fields.

Output depends only on the inputs: numbers are printed at fixed precision,
element order follows the data, and nothing time- or host-dependent is
written.
"""

from __future__ import annotations

import math
from html import escape

import numpy as np

from .field import PotentialField

WIDTH, HEIGHT = 640, 400
MARGIN = (60, 20, 40, 50)   # left, right, top, bottom
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")
RAMP = ((0.267, 0.005, 0.329), (0.230, 0.322, 0.546), (0.128, 0.567, 0.551),
        (0.369, 0.789, 0.383), (0.993, 0.906, 0.144))

PLOT_KINDS = ("xyz", "speed", "angles", "controls", "xy", "yz", "xz", "heatmap", "distance", "columns")


def _f(x) -> str:
    s = f"{x:.2f}"
    return "0.00" if s == "-0.00" else s


def nice_ticks(lo, hi, n=5):
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ValueError("non-finite data range")
    if hi - lo <= 0:
        pad = abs(lo) * 0.1 or 1.0
        lo, hi = lo - pad, hi + pad
    raw = (hi - lo) / max(n, 1)
    mag = 10 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw)
    a = math.floor(lo / step) * step
    b = math.ceil(hi / step) * step
    ticks = [a + i * step for i in range(int(round((b - a) / step)) + 1)]
    return a, b, ticks


def _tick_label(v):
    s = f"{v:.6g}"
    return "0" if s in ("-0", "0") else s


class _Axes:
    def __init__(self, xr, yr, width=WIDTH, height=HEIGHT, equal=False):
        self.w, self.h = width, height
        l, r, t, b = MARGIN
        self.x0, self.x1 = l, width - r
        self.y0, self.y1 = height - b, t
        self.xlo, self.xhi, self.xt = nice_ticks(*xr)
        self.ylo, self.yhi, self.yt = nice_ticks(*yr)
        if equal:
            sx = (self.x1 - self.x0) / (self.xhi - self.xlo)
            sy = (self.y0 - self.y1) / (self.yhi - self.ylo)
            s = min(sx, sy)
            self.x1 = self.x0 + s * (self.xhi - self.xlo)
            self.y1 = self.y0 - s * (self.yhi - self.ylo)

    def X(self, x):
        return self.x0 + (x - self.xlo) / (self.xhi - self.xlo) * (self.x1 - self.x0)

    def Y(self, y):
        return self.y0 - (y - self.ylo) / (self.yhi - self.ylo) * (self.y0 - self.y1)

    def frame(self, title, xlabel, ylabel):
        out = [f'<rect x="{_f(self.x0)}" y="{_f(self.y1)}" width="{_f(self.x1 - self.x0)}" '
               f'height="{_f(self.y0 - self.y1)}" fill="none" stroke="#000"/>']
        for v in self.xt:
            x = self.X(v)
            out.append(f'<line x1="{_f(x)}" y1="{_f(self.y0)}" x2="{_f(x)}" y2="{_f(self.y0 + 4)}" stroke="#000"/>')
            out.append(f'<text x="{_f(x)}" y="{_f(self.y0 + 16)}" text-anchor="middle">{_tick_label(v)}</text>')
        for v in self.yt:
            y = self.Y(v)
            out.append(f'<line x1="{_f(self.x0 - 4)}" y1="{_f(y)}" x2="{_f(self.x0)}" y2="{_f(y)}" stroke="#000"/>')
            out.append(f'<text x="{_f(self.x0 - 6)}" y="{_f(y + 4)}" text-anchor="end">{_tick_label(v)}</text>')
        out.append(f'<text x="{_f((self.x0 + self.x1) / 2)}" y="{_f(self.h - 10)}" '
                   f'text-anchor="middle">{escape(xlabel)}</text>')
        out.append(f'<text x="14" y="{_f((self.y0 + self.y1) / 2)}" text-anchor="middle" '
                   f'transform="rotate(-90 14 {_f((self.y0 + self.y1) / 2)})">{escape(ylabel)}</text>')
        out.append(f'<text x="{_f((self.x0 + self.x1) / 2)}" y="24" text-anchor="middle" '
                   f'font-weight="bold">{escape(title)}</text>')
        return out

    def series(self, x, y, color, dash=None, width=1.5):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if len(x) == 1:
            return [f'<circle cx="{_f(self.X(x[0]))}" cy="{_f(self.Y(y[0]))}" r="3" fill="{color}"/>']
        pts = " ".join(f"{_f(self.X(a))},{_f(self.Y(b))}" for a, b in zip(x, y))
        d = f' stroke-dasharray="{dash}"' if dash else ""
        return [f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="{width}"{d}/>']


def _legend(ax, names, styles):
    out = []
    for i, (n, (color, dash)) in enumerate(zip(names, styles)):
        y = ax.y1 + 14 + 16 * i
        x = ax.x1 - 120
        d = f' stroke-dasharray="{dash}"' if dash else ""
        out.append(f'<line x1="{_f(x)}" y1="{_f(y - 4)}" x2="{_f(x + 20)}" y2="{_f(y - 4)}" '
                   f'stroke="{color}" stroke-width="2"{d}/>')
        out.append(f'<text x="{_f(x + 26)}" y="{_f(y)}">{escape(n)}</text>')
    return out


def _document(body, width=WIDTH, height=HEIGHT) -> str:
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">\n'
            f'<rect width="{width}" height="{height}" fill="#fff"/>\n')
    return head + "\n".join(body) + "\n</svg>\n"


def _span(arrays):
    vals = np.concatenate([np.asarray(a, dtype=float).ravel() for a in arrays])
    if vals.size == 0:
        raise ValueError("nothing to plot")
    if not np.all(np.isfinite(vals)):
        raise ValueError("data contains non-finite values")
    return float(vals.min()), float(vals.max())


def line_plot(x, ys: dict, title="", xlabel="", ylabel="", dashes=None, equal=False) -> str:
    """Lines ``ys[name]`` against ``x`` (or one x array per series via tuples)."""
    if not ys:
        raise ValueError("nothing to plot")
    xs = {n: (v[0] if isinstance(v, tuple) else x) for n, v in ys.items()}
    yv = {n: (v[1] if isinstance(v, tuple) else v) for n, v in ys.items()}
    for n in ys:
        if len(xs[n]) == 0:
            raise ValueError("empty series")
    ax = _Axes(_span(xs.values()), _span(yv.values()), equal=equal)
    body = ax.frame(title, xlabel, ylabel)
    styles = []
    for i, n in enumerate(ys):
        color = PALETTE[i % len(PALETTE)]
        dash = (dashes or {}).get(n)
        styles.append((color, dash))
        body += ax.series(xs[n], yv[n], color, dash)
    body += _legend(ax, list(ys), styles)
    return _document(body)


def plot_log(log, kind: str, columns=None, title=None) -> str:
    """SVG for one of ``xyz``, ``speed``, ``angles``, ``controls``, ``xy``,
    ``yz``, ``xz`` or ``columns`` (the named ``columns`` against t)."""
    if len(log) == 0:
        raise ValueError("empty log")
    t = log["t"]
    name = log.summary.get("scenario") or ""
    lam = list(log.lambda_names)
    if kind == "xyz":
        ys = {c: log[c] for c in ("x", "y", "z")}
        return line_plot(t, ys, title or f"{name} position", "t", "position")
    if kind == "speed":
        ys = {lam[0]: log[lam[0]]}
        return line_plot(t, ys, title or f"{name} speed", "t", lam[0])
    if kind == "angles":
        ys = {c: log[c] for c in lam[1:]}
        return line_plot(t, ys, title or f"{name} orientation", "t", "angle (rad)")
    if kind == "controls":
        ys = {c: log[c] for c in log.u_names}
        return line_plot(t, ys, title or f"{name} controls", "t", "u")
    if kind in ("xy", "yz", "xz"):
        a, b = kind
        return line_plot(log[a], {f"{a}{b}": log[b]}, title or f"{name} {a}-{b} projection", a, b, equal=True)
    if kind == "columns":
        if not columns:
            raise ValueError("plot kind 'columns' needs column names")
        ys = {c: log[c] for c in columns}
        return line_plot(t, ys, title or name, "t", ", ".join(columns))
    raise ValueError(f"unknown plot kind {kind!r}; expected one of {list(PLOT_KINDS)}")


def plot_distance(t, d, radius=None, title="inter-agent distance") -> str:
    ys = {"distance": np.asarray(d, dtype=float)}
    dashes = {}
    if radius is not None:
        ys["obstacle radius"] = np.full(len(t), float(radius))
        dashes["obstacle radius"] = "4 3"
    return line_plot(t, ys, title, "t", "distance", dashes)


def _ramp(v):
    v = min(max(v, 0.0), 1.0) * (len(RAMP) - 1)
    i = min(int(v), len(RAMP) - 2)
    f = v - i
    c = [RAMP[i][k] + f * (RAMP[i + 1][k] - RAMP[i][k]) for k in range(3)]
    return "#" + "".join(f"{int(round(255 * x)):02x}" for x in c)


def plot_heatmap(field: PotentialField, paths=(), title="potential", z_index=None, background=None) -> str:
    """Cells coloured by V (or by ``background``, e.g. fitness) with paths overlaid.

    ``paths`` is a sequence of ``(name, points, dashed)``; points are world
    positions (extra coordinates ignored). 3-D fields are cut at ``z_index``
    (default: the target's layer).
    """
    env = field.env
    V = np.asarray(field.values if background is None else background, dtype=float)
    blocked = env.obstacle
    if V.ndim == 3:
        k = env.target[2] if z_index is None else int(z_index)
        V, blocked = V[:, :, k], blocked[:, :, k]
    elif V.ndim != 2:
        raise ValueError("heatmaps need a 2-D or 3-D field")
    h = env.spacing
    ox, oy = env.origin[0], env.origin[1]
    nx, ny = V.shape
    xr = (ox - h / 2, ox + (nx - 0.5) * h)
    yr = (oy - h / 2, oy + (ny - 0.5) * h)
    ax = _Axes(xr, yr, equal=True)
    lo, hi = float(np.min(V[~blocked])) if np.any(~blocked) else 0.0, float(np.max(V[~blocked])) if np.any(~blocked) else 1.0
    span = hi - lo if hi > lo else 1.0
    body = []
    cw = ax.X(ox + h) - ax.X(ox)
    for i in range(nx):
        for j in range(ny):
            fill = "#000000" if blocked[i, j] else _ramp((V[i, j] - lo) / span)
            x = ax.X(ox + (i - 0.5) * h)
            y = ax.Y(oy + (j + 0.5) * h)
            body.append(f'<rect x="{_f(x)}" y="{_f(y)}" width="{_f(cw + 0.05)}" height="{_f(cw + 0.05)}" fill="{fill}"/>')
    body += ax.frame(title, "x", "y")
    names, styles = [], []
    for n, (name, pts, dashed) in enumerate(paths):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if len(pts) == 0:
            continue
        color = "#ffffff" if n == 0 else PALETTE[(n - 1) % len(PALETTE)]
        dash = "3 3" if dashed else None
        body += ax.series(pts[:, 0], pts[:, 1], color, dash, width=2)
        names.append(name)
        styles.append((color, dash))
    if names:
        body.append(f'<rect x="{_f(ax.x1 - 126)}" y="{_f(ax.y1 + 2)}" width="124" height="{_f(16 * len(names) + 4)}" '
                    f'fill="#808080" opacity="0.8"/>')
        body += _legend(ax, names, styles)
    return _document(body)
