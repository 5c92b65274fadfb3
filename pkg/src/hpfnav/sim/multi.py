"""Lock-step simulation of two agents with periodic field re-solves.

The maneuvering agent treats the other one as a moving obstacle: every
``resolve_period`` seconds its potential is re-solved with a disc of
obstacle cells stamped at the other agent's position. The other agent
flies its own (static) reference and ignores the first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..field import OBSTACLE, TARGET, QueryError, SolverParams, solve_laplace
from ..field.grid import GridEnvironmentError
from ..guidance import HPFReference
from .core import JointState, Scenario, _advance, _Dynamics, observe, summarize
from .log import TrajectoryLog


class ResolveError(RuntimeError):
    """Re-solve failed, e.g. the stamped disc encloses the target."""


@dataclass(frozen=True, eq=False)
class MultiScenario:
    agents: tuple                      # two Scenarios sharing dt and t_final
    maneuvering: int = 0
    resolve: bool = True
    resolve_period: float = 0.5
    obstacle_radius: float | None = None   # length; default 3 cells
    solver: SolverParams = SolverParams()
    name: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.agents) != 2:
            raise ValueError("multi-agent runs take exactly two agents")
        a, b = self.agents
        if abs(a.dt - b.dt) > 1e-15 or abs(a.t_final - b.t_final) > 1e-12:
            raise ValueError("agents must share dt and t_final")
        if self.maneuvering not in (0, 1):
            raise ValueError("maneuvering must be 0 or 1")
        ref = self.agents[self.maneuvering].reference
        if not isinstance(ref, HPFReference):
            raise ValueError("the maneuvering agent needs an HPF reference")
        if not self.resolve_period > 0:
            raise ValueError("resolve_period must be positive")
        if self.obstacle_radius is None:
            object.__setattr__(self, "obstacle_radius", 3.0 * ref.field.env.spacing)

    @property
    def dt(self):
        return self.agents[0].dt

    @property
    def n_steps(self):
        return self.agents[0].n_steps


@dataclass
class MultiResult:
    logs: list
    t: np.ndarray
    inter_distance: np.ndarray
    resolves: int
    terminations: list

    @property
    def min_distance(self) -> float:
        return float(np.min(self.inter_distance))

    def summary(self) -> dict:
        return {
            "min_inter_distance": self.min_distance,
            "resolves": self.resolves,
            "terminations": list(self.terminations),
            "agents": [tl.summary for tl in self.logs],
        }


def stamp_disc(env, center, radius, keep=None):
    """Copy of ``env`` with FREE cells within ``radius`` of ``center`` made obstacles.

    The target is never stamped, nor are cells flagged in ``keep``.
    """
    nd = env.ndim
    grids = np.meshgrid(*[env.origin[a] + env.spacing * np.arange(n) for a, n in enumerate(env.shape)],
                        indexing="ij")
    pos = np.stack(grids, axis=-1)
    d = np.linalg.norm(pos - np.asarray(center, dtype=float)[:nd], axis=-1)
    disc = (d <= radius) & (env.cell_class != TARGET)
    if keep is not None:
        disc &= ~keep
    cc = env.cell_class.copy()
    cc[disc] = OBSTACLE
    return env.replace(cell_class=cc)


def _corner_mask(env, P):
    """Cells at the corners of the grid cell containing ``P``."""
    mask = np.zeros(env.shape, dtype=bool)
    q = env.fractional_index(np.asarray(P, dtype=float)[: env.ndim])
    lo = np.clip(np.floor(q).astype(int), 0, np.array(env.shape) - 1)
    hi = np.clip(lo + 1, 0, np.array(env.shape) - 1)
    mask[tuple(slice(a, b + 1) for a, b in zip(lo, hi))] = True
    return mask


def _resolve(ms: MultiScenario, ref: HPFReference, own_P, other_P) -> HPFReference:
    base = ms.agents[ms.maneuvering].reference.field
    env = stamp_disc(base.env, other_P, ms.obstacle_radius, keep=_corner_mask(base.env, own_P))
    try:
        fld = solve_laplace(env, ms.solver, initial=ref.field.values)
    except GridEnvironmentError as exc:
        raise ResolveError(f"re-solve failed: {exc}") from None
    return HPFReference(fld, ref.v_ref, ref.taper_radius, ref.altitude, ref.altitude_gain, ref.eps_grad)


def _captured(sc: Scenario, state: JointState) -> bool:
    c = sc.capture
    if c is None:
        return False
    return (float(np.linalg.norm(state.P - c.target)) < c.radius
            and abs(sc.model.speed(state.lam)) < c.v_stop)


def run_multi(ms: MultiScenario) -> MultiResult:
    scen = list(ms.agents)
    states = [sc.initial for sc in scen]
    dyns = [_Dynamics(sc) for sc in scen]
    rngs = [np.random.default_rng(sc.noise.seed) if sc.noise is not None else None for sc in scen]
    logs = [TrajectoryLog.for_model(sc.model, capacity=ms.n_steps + 1) for sc in scen]
    for i in range(2):
        logs[i].append(states[i], observe(scen[i], states[i]))
    active = [True, True]
    reasons = ["t_final", "t_final"]
    k = ms.maneuvering
    other = 1 - k
    every = max(1, int(round(ms.resolve_period / ms.dt)))
    resolves = 0
    t = [0.0]
    dist = [float(np.linalg.norm(states[0].P - states[1].P))]

    def refresh():
        nonlocal resolves
        ref = _resolve(ms, scen[k].reference, states[k].P, states[other].P)
        scen[k] = scen[k].with_(reference=ref)
        dyns[k] = _Dynamics(scen[k])
        resolves += 1

    if ms.resolve:
        refresh()
    for n in range(1, ms.n_steps + 1):
        for i in range(2):
            if not active[i]:
                continue
            try:
                states[i], _ = _advance(dyns[i], states[i], rngs[i])
            except QueryError:
                active[i] = False
                reasons[i] = "left_field"
                continue
            logs[i].append(states[i], observe(scen[i], states[i]))
            if _captured(scen[i], states[i]):
                active[i] = False
                reasons[i] = "captured"
        t.append(n * ms.dt)
        dist.append(float(np.linalg.norm(states[0].P - states[1].P)))
        if not any(active):
            break
        if ms.resolve and active[k] and n % every == 0:
            refresh()
    for i in range(2):
        logs[i].finish()
        logs[i].summary.update(summarize(scen[i], logs[i], reasons[i]))
    return MultiResult(logs, np.array(t), np.array(dist), resolves, reasons)
