"""Solved potentials and gradient queries on them."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .grid import OBSTACLE, START, TARGET, GridEnvironment, GridEnvironmentError

LAPLACE = "laplace"
ANISOTROPIC = "anisotropic"
WEIGHTED = "weighted"
VARIANTS = (LAPLACE, ANISOTROPIC, WEIGHTED)


class QueryError(ValueError):
    """A position query fell outside the grid or inside an obstacle."""


@dataclass(frozen=True, eq=False)
class PotentialField:
    """Potential values on a grid plus solver bookkeeping.

    ``reachable`` marks cells connected to the target through passable
    cells; values elsewhere are filled, not solved (1.0).
    """

    values: np.ndarray
    env: GridEnvironment
    variant: str
    residual: float = 0.0
    iterations: int = 0
    sigma_params: tuple | None = None
    reachable: np.ndarray = None
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        v = np.array(self.values, dtype=float)
        if v.shape != self.env.shape:
            raise ValueError("values shape does not match environment")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if self.reachable is None:
            object.__setattr__(self, "reachable", self._default_reachable())

    def _default_reachable(self):
        env = self.env
        if env.target is None:
            return np.zeros(env.shape, dtype=bool)
        return env.connected_to(env.target, self.passable) & self.passable

    @property
    def shape(self):
        return self.values.shape

    @property
    def ndim(self):
        return self.values.ndim

    @cached_property
    def dirichlet(self) -> np.ndarray:
        """Cells whose value was pinned by the boundary conditions."""
        cc = self.env.cell_class
        if self.variant == WEIGHTED:
            return (cc == START) | (cc == TARGET)
        return (cc == OBSTACLE) | (cc == TARGET)

    @cached_property
    def passable(self) -> np.ndarray:
        """Cells a path may occupy."""
        if self.variant == WEIGHTED:
            return (self.env.beta >= 1.0 / 255.0) & ~self.env.obstacle
        return ~self.env.obstacle

    @cached_property
    def walls(self) -> np.ndarray:
        """Zero-flux cells: never used in difference stencils."""
        if self.variant == WEIGHTED:
            return ~(self.passable & self.reachable)
        return np.zeros(self.shape, dtype=bool)

    @cached_property
    def node_gradients(self) -> np.ndarray:
        """∇V at every node, shape ``grid.shape + (ndim,)``; NaN where undefined.

        Central differences in the interior of the free region; one-sided
        toward a pinned neighbour when only one side is pinned, so obstacle
        values enter at full strength; one-sided away from zero-flux walls
        and the grid edge.
        """
        excluded = self.env.obstacle | self.walls
        return _node_gradients(self.values, self.dirichlet, self.walls, excluded, self.env.spacing)

    def value_at(self, P) -> float:
        """Multilinear interpolation of V at a world position."""
        corners, weights = self._corners(P)
        vals = np.array([self.values[c] for c in corners])
        return float(np.dot(weights, vals))

    def gradient_at(self, P) -> np.ndarray:
        """Interpolated ∇V (potential per length) at world position ``P``."""
        return gradient_at(self, P)

    def _corners(self, P):
        env = self.env
        P = np.asarray(P, dtype=float)
        if P.shape != (self.ndim,):
            raise QueryError(f"position must have {self.ndim} components")
        if not np.all(np.isfinite(P)) or not env.contains(P):
            raise QueryError(f"position {P.tolist()} is outside the grid")
        q = env.fractional_index(P)
        hi = np.asarray(self.shape) - 1
        q = np.clip(q, 0, hi)
        lo = np.minimum(np.floor(q).astype(int), np.maximum(hi - 1, 0))
        frac = q - lo
        corners, weights = [], []
        for offs in itertools.product((0, 1), repeat=self.ndim):
            c = tuple(int(min(lo[a] + offs[a], hi[a])) for a in range(self.ndim))
            w = 1.0
            for a in range(self.ndim):
                w *= frac[a] if offs[a] else 1.0 - frac[a]
            corners.append(c)
            weights.append(w)
        return corners, np.array(weights)


def _node_gradients(V, dirichlet, walls, excluded, h):
    nd = V.ndim
    grad = np.zeros(V.shape + (nd,))
    free = ~dirichlet & ~walls
    for ax in range(nd):
        n = V.shape[ax]
        vlo = np.full(V.shape, np.nan)
        vhi = np.full(V.shape, np.nan)
        okl = np.zeros(V.shape, dtype=bool)
        okh = np.zeros(V.shape, dtype=bool)
        dl = np.zeros(V.shape, dtype=bool)
        dh = np.zeros(V.shape, dtype=bool)
        if n > 1:
            inner = [slice(None)] * nd
            outer = [slice(None)] * nd
            inner[ax], outer[ax] = slice(1, None), slice(None, -1)
            inner, outer = tuple(inner), tuple(outer)
            vlo[inner] = V[outer]
            okl[inner] = ~walls[outer]
            dl[inner] = dirichlet[outer]
            vhi[outer] = V[inner]
            okh[outer] = ~walls[inner]
            dh[outer] = dirichlet[inner]
        central = (vhi - vlo) / (2 * h)
        fwd = (vhi - V) / h
        bwd = (V - vlo) / h
        g = np.zeros(V.shape)
        both = okl & okh
        g = np.where(both, central, g)
        # free node next to exactly one pinned neighbour: difference toward it
        toward_lo = free & both & dl & ~dh
        toward_hi = free & both & dh & ~dl
        g = np.where(toward_lo, bwd, g)
        g = np.where(toward_hi, fwd, g)
        g = np.where(okl & ~okh, bwd, g)
        g = np.where(okh & ~okl, fwd, g)
        grad[..., ax] = g
    grad[excluded] = np.nan
    return grad


def gradient_at(field: PotentialField, P) -> np.ndarray:
    """Interpolated gradient of ``field`` at world position ``P``.

    Node gradients are blended multilinearly over the surrounding nodes;
    nodes inside obstacles carry no gradient and are dropped with the
    remaining weights renormalised.
    """
    corners, weights = field._corners(P)
    env = field.env
    near = env.nearest_index(P)
    if env.obstacle[near] or field.walls[near]:
        raise QueryError(f"position {np.asarray(P).tolist()} lies in an impassable cell")
    ng = field.node_gradients
    acc = np.zeros(field.ndim)
    wsum = 0.0
    for c, w in zip(corners, weights):
        if w == 0.0:
            continue
        g = ng[c]
        if np.isnan(g[0]):
            continue
        acc += w * g
        wsum += w
    if wsum == 0.0:
        g = ng[near]
        if np.isnan(g[0]):
            raise QueryError("no gradient information near this position")
        return g.copy()
    return acc / wsum


def gradients_at(field: PotentialField, points) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised :func:`gradient_at` for an ``(N, ndim)`` array of positions.

    Returns ``(grad, ok)``; rows where the scalar query would raise have
    ``ok`` False and NaN gradients.
    """
    env = field.env
    nd = field.ndim
    X = np.atleast_2d(np.asarray(points, dtype=float))
    n = len(X)
    q = (X - env.origin) / env.spacing
    hi = np.asarray(field.shape) - 1
    eps = 1e-9  # same tolerance as GridEnvironment.contains
    ok = np.all(np.isfinite(X), axis=1) & np.all((q >= -eps) & (q <= hi + eps), axis=1)
    q = np.clip(np.where(np.isfinite(q), q, 0.0), 0, hi)
    near = np.clip(np.rint(q).astype(int), 0, hi)
    blocked = env.obstacle | field.walls
    ok &= ~blocked[tuple(near.T)]
    lo = np.minimum(np.floor(q).astype(int), np.maximum(hi - 1, 0))
    frac = q - lo
    ng = field.node_gradients
    acc = np.zeros((n, nd))
    wsum = np.zeros(n)
    for offs in itertools.product((0, 1), repeat=nd):
        c = np.minimum(lo + np.array(offs), hi)
        w = np.prod(np.where(np.array(offs, dtype=bool), frac, 1.0 - frac), axis=1)
        g = ng[tuple(c.T)]
        use = (w != 0.0) & ~np.isnan(g[:, 0])
        acc += np.where(use[:, None], w[:, None] * np.nan_to_num(g), 0.0)
        wsum += np.where(use, w, 0.0)
    out = np.full((n, nd), np.nan)
    has = wsum > 0
    out[has] = acc[has] / wsum[has, None]
    fallback = ~has
    if np.any(fallback):
        out[fallback] = ng[tuple(near[fallback].T)]
    ok &= ~np.isnan(out[:, 0])
    out[~ok] = np.nan
    return out, ok


def values_at(field: PotentialField, points, gradient: bool = False):
    """Multilinear V at an ``(N, ndim)`` array of positions (clipped to the grid).

    With ``gradient`` also returns the exact gradient of the interpolant
    (one-sided on cell faces, taken from the cell above).
    """
    env = field.env
    nd = field.ndim
    X = np.atleast_2d(np.asarray(points, dtype=float))
    hi = np.asarray(field.shape) - 1
    q = np.clip((X - env.origin) / env.spacing, 0, hi)
    lo = np.minimum(np.floor(q).astype(int), np.maximum(hi - 1, 0))
    frac = q - lo
    out = np.zeros(len(X))
    grad = np.zeros((len(X), nd))
    for offs in itertools.product((0, 1), repeat=nd):
        on = np.array(offs, dtype=bool)
        c = np.minimum(lo + np.array(offs), hi)
        f = np.where(on, frac, 1.0 - frac)
        v = field.values[tuple(c.T)]
        out += np.prod(f, axis=1) * v
        if gradient:
            for a in range(nd):
                rest = np.prod(np.delete(f, a, axis=1), axis=1)
                grad[:, a] += (1.0 if on[a] else -1.0) * rest * v
    if gradient:
        return out, grad / env.spacing
    return out


def check_target(env: GridEnvironment):
    t = env.target
    if t is None:
        raise GridEnvironmentError("environment has no TARGET cell")
    return t
