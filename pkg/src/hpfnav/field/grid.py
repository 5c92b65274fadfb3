"""Gridded workspace description shared by every potential solver.

Cells are addressed by integer index tuples; the world position of cell
``idx`` is ``origin + idx * spacing``. Values live at cell centres, so the
grid is a lattice of nodes rather than a set of boxes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import ndimage

FREE = 0
OBSTACLE = 1
TARGET = 2
START = 3

CLASS_NAMES = {FREE: "free", OBSTACLE: "obstacle", TARGET: "target", START: "start"}


class GridEnvironmentError(ValueError):
    """Raised for malformed or unsolvable environments."""


@dataclass(frozen=True, eq=False)
class GridEnvironment:
    """Discretised workspace.

    Attributes
    ----------
    cell_class : ndarray of int8
        One of FREE, OBSTACLE, TARGET, START per cell. Its ndim (2 or 3)
        sets the dimension of the problem.
    spacing : float
        Uniform cell size in length units.
    origin : tuple of float
        World position of cell ``(0, 0[, 0])``.
    beta : ndarray, optional
        Fitness in [0, 1] per cell (weighted problems). Defaults to 1 on
        non-obstacle cells and 0 on obstacles.
    lambda_dir : ndarray, optional
        Unit direction per cell, shape ``cell_class.shape + (ndim,)``; only
        read where ``omega_mask`` is set.
    omega_mask : ndarray of bool, optional
        Cells carrying a directional constraint.
    """

    cell_class: np.ndarray
    spacing: float = 1.0
    origin: tuple = None
    beta: np.ndarray = None
    lambda_dir: np.ndarray = None
    omega_mask: np.ndarray = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        cc = np.asarray(self.cell_class, dtype=np.int8)
        if cc.ndim not in (2, 3):
            raise GridEnvironmentError(f"grid must be 2-D or 3-D, got ndim={cc.ndim}")
        if np.any((cc < FREE) | (cc > START)):
            raise GridEnvironmentError("unknown cell class code")
        if not self.spacing > 0:
            raise GridEnvironmentError("spacing must be positive")
        cc.setflags(write=False)
        object.__setattr__(self, "cell_class", cc)
        origin = (0.0,) * cc.ndim if self.origin is None else tuple(float(o) for o in self.origin)
        if len(origin) != cc.ndim:
            raise GridEnvironmentError("origin length does not match grid dimension")
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "spacing", float(self.spacing))

        if self.beta is None:
            beta = np.where(cc == OBSTACLE, 0.0, 1.0)
        else:
            beta = np.array(self.beta, dtype=float)
            if beta.shape != cc.shape:
                raise GridEnvironmentError("beta shape does not match grid")
            if np.any(beta < 0) or np.any(beta > 1) or not np.all(np.isfinite(beta)):
                raise GridEnvironmentError("beta must lie in [0, 1]")
        beta.setflags(write=False)
        object.__setattr__(self, "beta", beta)

        if self.omega_mask is not None:
            mask = np.array(self.omega_mask, dtype=bool)
            if mask.shape != cc.shape:
                raise GridEnvironmentError("omega_mask shape does not match grid")
            if self.lambda_dir is None:
                raise GridEnvironmentError("omega_mask given without lambda_dir")
            lam = np.array(self.lambda_dir, dtype=float)
            if lam.shape != cc.shape + (cc.ndim,):
                raise GridEnvironmentError("lambda_dir must have shape grid.shape + (ndim,)")
            norms = np.linalg.norm(lam[mask], axis=-1)
            if norms.size and np.max(np.abs(norms - 1.0)) > 1e-9:
                raise GridEnvironmentError("directional constraint vectors must be unit length")
            mask.setflags(write=False)
            lam.setflags(write=False)
            object.__setattr__(self, "omega_mask", mask)
            object.__setattr__(self, "lambda_dir", lam)
        elif self.lambda_dir is not None:
            raise GridEnvironmentError("lambda_dir given without omega_mask")

    # -- geometry -------------------------------------------------------
    @property
    def ndim(self) -> int:
        return self.cell_class.ndim

    @property
    def shape(self) -> tuple:
        return self.cell_class.shape

    def position(self, index) -> np.ndarray:
        """World position of a cell index (or an array of indices)."""
        return np.asarray(self.origin) + np.asarray(index, dtype=float) * self.spacing

    def fractional_index(self, P) -> np.ndarray:
        return (np.asarray(P, dtype=float) - np.asarray(self.origin)) / self.spacing

    def nearest_index(self, P) -> tuple:
        q = np.rint(self.fractional_index(P)).astype(int)
        return tuple(int(i) for i in q)

    def contains(self, P, tol: float = 1e-9) -> bool:
        q = self.fractional_index(P)
        hi = np.asarray(self.shape) - 1
        return bool(np.all(q >= -tol) and np.all(q <= hi + tol))

    # -- classes ----------------------------------------------------------
    def _single(self, code: int):
        idx = np.argwhere(self.cell_class == code)
        if len(idx) == 0:
            return None
        if len(idx) > 1:
            raise GridEnvironmentError(f"more than one {CLASS_NAMES[code]} cell ({len(idx)})")
        return tuple(int(i) for i in idx[0])

    @property
    def target(self):
        """Index of the single TARGET cell, or None."""
        return self._single(TARGET)

    @property
    def start(self):
        """Index of the single START cell, or None."""
        return self._single(START)

    @property
    def obstacle(self) -> np.ndarray:
        return self.cell_class == OBSTACLE

    @property
    def free(self) -> np.ndarray:
        return self.cell_class == FREE

    def replace(self, **changes) -> "GridEnvironment":
        kw = dict(
            cell_class=self.cell_class,
            spacing=self.spacing,
            origin=self.origin,
            beta=self.beta,
            lambda_dir=self.lambda_dir,
            omega_mask=self.omega_mask,
            meta=dict(self.meta),
        )
        kw.update(changes)
        return GridEnvironment(**kw)

    def connected_to(self, index, passable: np.ndarray | None = None) -> np.ndarray:
        """Boolean mask of cells face-connected to ``index`` through ``passable`` cells.

        ``passable`` defaults to every non-obstacle cell.
        """
        if passable is None:
            passable = ~self.obstacle
        passable = passable.copy()
        passable[index] = True
        structure = ndimage.generate_binary_structure(self.ndim, 1)
        labels, _ = ndimage.label(passable, structure=structure)
        return labels == labels[index]


def box_environment(
    shape: Sequence[int],
    spacing: float = 1.0,
    origin=None,
    target=None,
    start=None,
    border: bool = True,
    obstacles=(),
) -> GridEnvironment:
    """Convenience constructor: optional obstacle border plus listed cells.

    ``target`` and ``start`` are cell indices.
    """
    cc = np.zeros(tuple(shape), dtype=np.int8)
    if border:
        cc[...] = OBSTACLE
        cc[(slice(1, -1),) * cc.ndim] = FREE
    for idx in obstacles:
        cc[tuple(idx)] = OBSTACLE
    if target is not None:
        cc[tuple(target)] = TARGET
    if start is not None:
        cc[tuple(start)] = START
    return GridEnvironment(cc, spacing=spacing, origin=origin)


def strip_environment(n: int, spacing: float = 1.0, weighted: bool = False, beta=None) -> GridEnvironment:
    """One-cell-wide 2-D strip (shape ``(n, 1)``).

    Node 0 is the high-potential end (an obstacle cell, or START when
    ``weighted``), node ``n-1`` is the target. The grid edge is zero-flux,
    so the strip behaves as a 1-D problem.
    """
    cc = np.zeros((n, 1), dtype=np.int8)
    cc[0, 0] = START if weighted else OBSTACLE
    cc[-1, 0] = TARGET
    b = None if beta is None else np.asarray(beta, dtype=float).reshape(n, 1)
    if weighted and b is None:
        b = np.ones((n, 1))
    return GridEnvironment(cc, spacing=spacing, beta=b)
