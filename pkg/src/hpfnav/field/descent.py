"""Gradient-descent path extraction on a solved potential."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .potential import PotentialField, QueryError, check_target, gradients_at, values_at

GRAD_FLOOR = 1e-12

REACHED = "reached"
MAX_STEPS = "max_steps"
STALLED = "stalled"
BLOCKED = "blocked"


@dataclass(frozen=True)
class DescentPath:
    points: np.ndarray
    reason: str

    @property
    def success(self) -> bool:
        return self.reason == REACHED

    @property
    def length(self) -> float:
        if len(self.points) < 2:
            return 0.0
        return float(np.sum(np.linalg.norm(np.diff(self.points, axis=0), axis=1)))


def _slides(d) -> np.ndarray:
    """Candidate directions: ``d`` itself, then ``d`` with one axis dropped.

    Axes are dropped smallest component first; the slides let a path run
    along an obstacle face its raw direction would cut into.
    """
    d = np.atleast_2d(d)
    n, nd = d.shape
    out = np.zeros((n, nd + 1, nd))
    out[:, 0] = d
    order = np.argsort(np.abs(d), axis=1, kind="stable")
    rows = np.arange(n)
    for k in range(nd):
        c = d.copy()
        c[rows, order[:, k]] = 0.0
        nrm = np.linalg.norm(c, axis=1, keepdims=True)
        out[:, k + 1] = np.where(nrm > 0, c / np.where(nrm > 0, nrm, 1.0), 0.0)
    return out


def _try_steps(field, P, V, dirs, step):
    """First accepted step per row: passable, strictly lower V.

    Each of five attempts halves the step and tries every candidate
    direction in order. Returns ``(next, moved)``.
    """
    n, nc, _ = dirs.shape
    nxt = P.copy()
    moved = np.zeros(n, dtype=bool)
    s = step
    for _attempt in range(5):
        for c in range(nc):
            todo = np.flatnonzero(~moved & np.any(dirs[:, c] != 0.0, axis=1))
            if todo.size == 0:
                continue
            trial = P[todo] + s * dirs[todo, c]
            _, ok = gradients_at(field, trial)
            ok &= np.all(np.isfinite(trial), axis=1)
            good = np.zeros(todo.size, dtype=bool)
            if np.any(ok):
                good[ok] = values_at(field, trial[ok]) < V[todo[ok]]
            nxt[todo[good]] = trial[good]
            moved[todo[good]] = True
        if np.all(moved):
            break
        s *= 0.5
    return nxt, moved


def _directions(field, X):
    g, ok = gradients_at(field, X)
    n = np.linalg.norm(g, axis=1)
    live = ok & (n >= GRAD_FLOOR)
    d = np.zeros_like(X)
    d[live] = -g[live] / n[live, None]
    return d, live


def _candidates(field, X, d):
    """Slides of the field direction ``d``, then slides of the steepest
    descent of the interpolated V (which has no minima off the nodes)."""
    _, gi = values_at(field, X, gradient=True)
    n = np.linalg.norm(gi, axis=1, keepdims=True)
    di = np.where(n > 0, -gi / np.where(n > 0, n, 1.0), 0.0)
    return np.concatenate([_slides(d), _slides(di)], axis=1)


def descend(
    field: PotentialField,
    start,
    step: float | None = None,
    max_steps: int = 10_000,
    method: str = "euler",
    radius: float | None = None,
) -> DescentPath:
    """Follow the normalised negative gradient from ``start`` with a fixed
    spatial step until within ``radius`` (default: one cell) of the target.

    ``method`` is ``"euler"`` or ``"rk4"``. A step is accepted only if it
    stays in passable cells and lowers the interpolated potential; blocked
    steps are retried sliding along obstacle faces, then along the steepest
    descent of the interpolated potential, then at halved lengths.
    Running out of steps, stalling on a vanishing gradient or finding no
    acceptable step is reported through ``reason`` rather than raised.
    """
    env = field.env
    h = env.spacing
    step = 0.25 * h if step is None else float(step)
    radius = h if radius is None else float(radius)
    if method not in ("euler", "rk4"):
        raise ValueError("method must be 'euler' or 'rk4'")
    goal = env.position(check_target(env))
    P = np.asarray(start, dtype=float)
    # raises for out-of-grid or obstacle starts
    field.gradient_at(P)
    pts = [P.copy()]
    if np.linalg.norm(P - goal) <= radius:
        return DescentPath(np.array(pts), REACHED)
    X = P[None, :]
    V = values_at(field, X)
    for _ in range(max_steps):
        d1, live = _directions(field, X)
        if not live[0]:
            return DescentPath(np.array(pts), STALLED)
        dirs = _candidates(field, X, d1)
        if method == "rk4":
            d2, l2 = _directions(field, X + 0.5 * step * d1)
            d3, l3 = _directions(field, X + 0.5 * step * d2)
            d4, l4 = _directions(field, X + step * d3)
            if l2[0] and l3[0] and l4[0]:
                comb = (d1 + 2 * d2 + 2 * d3 + d4) / 6.0
                dirs = np.concatenate([comb[:, None, :], dirs], axis=1)
        X, moved = _try_steps(field, X, V, dirs, step)
        if not moved[0]:
            return DescentPath(np.array(pts), BLOCKED)
        V = values_at(field, X)
        pts.append(X[0].copy())
        if np.linalg.norm(X[0] - goal) <= radius:
            return DescentPath(np.array(pts), REACHED)
    return DescentPath(np.array(pts), MAX_STEPS)


def descend_many(
    field: PotentialField,
    starts,
    step: float | None = None,
    max_steps: int = 10_000,
    radius: float | None = None,
) -> np.ndarray:
    """Euler :func:`descend` from many starts at once; returns one reason per start.

    Same step, retry and termination rules as the scalar version, so
    reasons agree with ``descend(..., method="euler")`` start by start.
    """
    env = field.env
    h = env.spacing
    step = 0.25 * h if step is None else float(step)
    radius = h if radius is None else float(radius)
    goal = env.position(check_target(env))
    P = np.atleast_2d(np.asarray(starts, dtype=float)).copy()
    _, ok = gradients_at(field, P)
    if not np.all(ok):
        raise QueryError("some descent starts lie outside the grid or in impassable cells")
    reason = np.full(len(P), MAX_STEPS, dtype=object)
    active = np.linalg.norm(P - goal, axis=1) > radius
    reason[~active] = REACHED
    for _ in range(max_steps):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        d, live = _directions(field, P[idx])
        reason[idx[~live]] = STALLED
        active[idx[~live]] = False
        idx, d = idx[live], d[live]
        nxt, moved = _try_steps(field, P[idx], values_at(field, P[idx]), _candidates(field, P[idx], d), step)
        reason[idx[~moved]] = BLOCKED
        active[idx[~moved]] = False
        idx, nxt = idx[moved], nxt[moved]
        P[idx] = nxt
        done = np.linalg.norm(nxt - goal, axis=1) <= radius
        reason[idx[done]] = REACHED
        active[idx[done]] = False
    return reason
