"""Correctness observables and the standalone verification battery.

Error measures are squared norms of the logged error vectors. Decay
checks compare a logged measure with its exponential bound, built from
the logged Gram-matrix eigenvalues. The finite-difference check compares
a model's analytic Jacobians with central differences. The field check
covers the range, discrete minima and descent success of a solved
potential.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .controller import ControllerGains
from .field import FREE, PotentialField, descend_many
from .field.descent import REACHED
from .sim.core import FREEZE_LOCAL, FREEZE_REFERENCE, SLAVE_LOCAL
from .sim.log import AXES, TrajectoryLog

FROZEN_MODES = (FREEZE_REFERENCE, FREEZE_LOCAL, SLAVE_LOCAL)

# measure -> (gain attribute, eigenvalue column)
MEASURES = {
    "E_lambda": ("K_u", "eta_lambda"),
    "E_p": ("K_lambda", "eta_P"),
}


class NotFrozenError(ValueError):
    """decay_check was handed a log whose reference was not frozen."""


def error_measures(row: dict) -> tuple[float, float]:
    """``(E_p, E_lambda)`` from a log row: squared norms of the error vectors."""
    pe = np.array([row[f"P_dot_e_{a}"] for a in AXES], dtype=float)
    le = np.array([v for k, v in row.items() if k.startswith("lam_dot_e_")], dtype=float)
    return float(pe @ pe), float(le @ le)


def _json(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


# -- decay -----------------------------------------------------------------

@dataclass(frozen=True)
class DecayReport:
    measure: str
    E0: float
    fitted_exponent: float | None    # -slope of log E(t); None when E0 = 0
    bound_exponent: float            # 2 K eta_min over the whole run
    violations: int
    max_violation_ratio: float       # max E / allowed; <= 1 passes
    rows: int
    slack: float

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d

    def to_json(self) -> str:
        return _json(self.to_dict())


def default_measures(mode: str) -> tuple:
    """Measures whose bound holds exactly in a frozen mode."""
    if mode == FREEZE_LOCAL:
        return ("E_lambda",)
    if mode == SLAVE_LOCAL:
        return ("E_p",)
    return ("E_lambda", "E_p")


def decay_check(log: TrajectoryLog, gains: ControllerGains | None = None, measure: str | None = None,
                slack: float = 1e-6, zero_tol: float = 1e-9) -> DecayReport:
    """Compare a logged error measure with ``E(0) exp(-2 K eta_min(t) t)``.

    ``eta_min(t)`` is the running minimum of the logged eigenvalue column,
    so the bound stays valid for state-dependent Jacobians. A row violates
    the bound when ``E > bound (1 + slack)``; when ``E(0) <= zero_tol`` the
    bound is identically zero and rows may rise to ``zero_tol``.
    ``gains`` defaults to the gains recorded in the log summary.
    """
    s = log.summary
    if not s.get("frozen_reference") or s.get("mode") not in FROZEN_MODES:
        raise NotFrozenError("decay_check needs a log produced with a frozen reference")
    if gains is None:
        if "gains" not in s:
            raise ValueError("log summary carries no gains; pass them explicitly")
        gains = ControllerGains(**s["gains"])
    if measure is None:
        measure = default_measures(s["mode"])[0]
    if measure not in MEASURES:
        raise ValueError(f"unknown measure {measure!r}; expected one of {sorted(MEASURES)}")
    if len(log) == 0:
        raise ValueError("empty log")
    gain_name, eta_col = MEASURES[measure]
    K = getattr(gains, gain_name)
    t = log["t"] - log["t"][0]
    E = log[measure]
    eta_min = np.minimum.accumulate(np.maximum(log[eta_col], 0.0))
    E0 = float(E[0])
    if E0 <= zero_tol:
        allowed = np.full(len(E), zero_tol)
    else:
        allowed = E0 * np.exp(-2.0 * K * eta_min * t) * (1.0 + slack)
    ratio = E / allowed
    return DecayReport(
        measure=measure,
        E0=E0,
        fitted_exponent=_fit_exponent(t, E, E0),
        bound_exponent=float(2.0 * K * eta_min[-1]),
        violations=int(np.sum(ratio > 1.0)),
        max_violation_ratio=float(np.max(ratio)),
        rows=int(len(E)),
        slack=slack,
    )


def decay_checks(log: TrajectoryLog, gains: ControllerGains | None = None, **kw) -> list[DecayReport]:
    """One report per measure applicable to the log's frozen mode."""
    return [decay_check(log, gains, m, **kw) for m in default_measures(log.summary.get("mode"))]


def _fit_exponent(t, E, E0):
    if E0 <= 0:
        return None
    # stop at the round-off floor so the tail does not flatten the fit
    keep = E > max(E0 * 1e-13, 1e-300)
    if np.sum(keep) < 2:
        return None
    slope = np.polyfit(t[keep], np.log(E[keep]), 1)[0]
    return float(-slope)


# -- Jacobians -------------------------------------------------------------

def _central(f, x, h):
    x = np.asarray(x, dtype=float)
    cols = []
    for j in range(len(x)):
        e = np.zeros_like(x)
        e[j] = h
        cols.append((f(x + e) - f(x - e)) / (2 * h))
    return np.stack(cols, axis=1)


def _rel_err(A, B) -> float:
    return float(np.max(np.abs(A - B)) / max(1.0, float(np.max(np.abs(B)))))


def fd_jacobian_check(model, samples: int = 100, step: float = 1e-6, seed: int = 0,
                      affine_step: float = 0.5) -> dict:
    """Worst relative error of ``J_lambda`` and ``J_u`` against central differences.

    States come from ``model.sample_state`` with a seeded generator. Models
    flagged ``affine_in_u`` are differenced in ``u`` with ``affine_step``:
    central differences are exact for affine maps at any step, and a
    large one keeps cancellation out of the comparison.
    """
    if not step > 0 or not affine_step > 0:
        raise ValueError("finite-difference step must be positive")
    rng = np.random.default_rng(seed)
    hu = affine_step if getattr(model, "affine_in_u", False) else step
    worst = {"J_lambda": 0.0, "J_u": 0.0}
    for _ in range(int(samples)):
        lam, u = model.sample_state(rng)
        fd_l = _central(model.G, lam, step)
        fd_u = _central(lambda uu: model.F(lam, uu), u, hu)
        worst["J_lambda"] = max(worst["J_lambda"], _rel_err(fd_l, model.J_lambda(lam)))
        worst["J_u"] = max(worst["J_u"], _rel_err(fd_u, model.J_u(lam, u)))
    return worst


# -- fields ----------------------------------------------------------------

@dataclass(frozen=True)
class FieldSanityReport:
    interior_min: float
    interior_max: float
    pinned_min: float
    pinned_max: float
    range_ok: bool
    spurious_minima: int
    spurious_cells: list
    descent_starts: int
    descent_success: float
    descent_failures: list
    unreachable: int
    exhaustive: bool

    @property
    def passed(self) -> bool:
        return self.range_ok and self.spurious_minima == 0 and self.descent_success == 1.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d

    def to_json(self) -> str:
        return _json(self.to_dict())


EXHAUSTIVE_LIMIT = 32 ** 3


def spurious_minima(field: PotentialField, tol: float = 1e-12) -> list:
    """Free solved cells lower than every usable face neighbour by more than ``tol``."""
    V = field.values
    cand = (field.env.cell_class == FREE) & field.reachable & ~field.dirichlet
    lowest = np.full(V.shape, np.inf)
    usable = ~field.walls
    for ax in range(V.ndim):
        for shift in (1, -1):
            nb = np.roll(V, shift, axis=ax)
            ok = np.roll(usable, shift, axis=ax)
            edge = [slice(None)] * V.ndim
            edge[ax] = 0 if shift == 1 else -1
            ok[tuple(edge)] = False
            lowest = np.where(ok, np.minimum(lowest, nb), lowest)
    bad = cand & (V <= lowest - tol)
    return [tuple(int(i) for i in ix) for ix in np.argwhere(bad)]


def field_sanity(field: PotentialField, tol: float = 1e-12, samples: int = 2000, seed: int = 0,
                 max_steps: int = 10_000) -> FieldSanityReport:
    """Range, discrete minima and descent success of a solved field.

    Descent starts at every reachable FREE cell when there are at most
    ``32**3`` of them, otherwise at ``samples`` seeded random ones. Free
    cells cut off from the target are counted as unreachable, not failed.
    """
    env = field.env
    V = field.values
    pinned = field.dirichlet & field.reachable
    solved = field.reachable & ~field.dirichlet
    lo = float(np.min(V[pinned])) if np.any(pinned) else 0.0
    hi = float(np.max(V[pinned])) if np.any(pinned) else 1.0
    if field.variant == "laplace":
        # obstacles not touching the reachable region still bound the range
        lo, hi = min(lo, 0.0), max(hi, 1.0)
    vmin = float(np.min(V[solved])) if np.any(solved) else lo
    vmax = float(np.max(V[solved])) if np.any(solved) else hi
    range_ok = bool(vmin >= lo - 1e-9 and vmax <= hi + 1e-9)
    spur = spurious_minima(field, tol)
    free = (env.cell_class == FREE) & field.passable
    starts_idx = np.argwhere(free & field.reachable)
    unreachable = int(np.sum(free & ~field.reachable))
    exhaustive = len(starts_idx) <= EXHAUSTIVE_LIMIT
    if not exhaustive:
        rng = np.random.default_rng(seed)
        pick = np.sort(rng.choice(len(starts_idx), size=min(samples, len(starts_idx)), replace=False))
        starts_idx = starts_idx[pick]
    if len(starts_idx):
        starts = env.origin + starts_idx * env.spacing
        reasons = descend_many(field, starts, max_steps=max_steps)
        ok = reasons == REACHED
        success = float(np.mean(ok))
        failures = [tuple(int(i) for i in ix) for ix in starts_idx[~ok]]
    else:
        success, failures = 1.0, []
    return FieldSanityReport(
        interior_min=vmin, interior_max=vmax, pinned_min=lo, pinned_max=hi, range_ok=range_ok,
        spurious_minima=len(spur), spurious_cells=spur, descent_starts=int(len(starts_idx)),
        descent_success=success, descent_failures=failures, unreachable=unreachable,
        exhaustive=exhaustive,
    )


def fd_step_study(model, steps=(1e-2, 5e-3, 2.5e-3), samples: int = 20, seed: int = 0) -> list:
    """``J_lambda`` error per step for a fixed sample set (FD order check)."""
    out = []
    for h in steps:
        out.append(fd_jacobian_check(model, samples, h, seed, affine_step=h)["J_lambda"])
    return out



# -- battery -----------------------------------------------------------------

def random_obstacle_grid(rng, max_size: int = 32, min_size: int = 12, blocks: int = 4):
    """Bordered 2-D grid with a few rectangular obstacle blocks and a random target."""
    from .field import OBSTACLE, TARGET, GridEnvironment

    n = int(rng.integers(min_size, max_size + 1))
    m = int(rng.integers(min_size, max_size + 1))
    cc = np.zeros((n, m), dtype=np.int8)
    cc[0, :] = cc[-1, :] = cc[:, 0] = cc[:, -1] = OBSTACLE
    for _ in range(int(rng.integers(1, blocks + 1))):
        a = int(rng.integers(2, n - 4))
        b = int(rng.integers(2, m - 4))
        cc[a:a + int(rng.integers(1, max(2, n // 4))), b:b + int(rng.integers(1, max(2, m // 4)))] = OBSTACLE
    free = np.argwhere(cc == FREE)
    cc[tuple(free[rng.integers(len(free))])] = TARGET
    return GridEnvironment(cc, spacing=float(rng.choice([0.25, 0.5, 1.0])))


def decay_runs():
    """Frozen-mode decay runs (5 s each) and their reports as ``(name, DecayReport)``."""
    from .guidance import FrozenReference
    from .models import FixedWing, SphericalRedundant, SphericalUnderactuated
    from .sim import JointState, Scenario, matched_initial_state, run

    cases = [
        ("fixed_wing", FixedWing(g=1.0, v_floor=0.05), [0.5, 0.1, 0.3], [0.2, 1.3, 0.2], [1.0, 0.0, 0.0]),
        ("spherical_redundant", SphericalRedundant(), [0.2, 1.0, 0.3], [0.1, 0, 0, 0, 0, 0], [0.6, 0.6, 0.5]),
        ("spherical_underactuated", SphericalUnderactuated(), [0.2, 1.0, 0.3], [0.1, 0.0], [0.6, 0.6, 0.5]),
    ]
    out = []
    gains = ControllerGains(2.0, 1.0)
    for name, model, lam, u, vel in cases:
        st = JointState.make([0, 0, 0], lam, u)
        for mode in (FREEZE_LOCAL, SLAVE_LOCAL):
            sc = Scenario(model, gains, FrozenReference(vel), st, dt=0.01, t_final=5.0, mode=mode,
                          name=f"{name}_{mode}")
            for r in decay_checks(run(sc)):
                out.append((f"decay/{name}/{mode}/{r.measure}", r))
        sc = Scenario(model, gains, FrozenReference(vel), st, dt=0.01, t_final=5.0, mode=FREEZE_REFERENCE)
        sc = sc.with_(initial=matched_initial_state(sc), name=f"{name}_zero_error")
        for r in decay_checks(run(sc)):
            out.append((f"decay/{name}/zero_error/{r.measure}", r))
    return out


def verification_battery(seed: int = 0, random_grids: int = 20) -> dict:
    """Jacobian, decay and field checks; JSON-ready, with an overall ``passed``."""
    from .field import box_environment, solve_laplace, strip_environment
    from .models import FixedWing, SphericalRedundant, SphericalUnderactuated

    checks = []
    for model in (FixedWing(), SphericalRedundant(), SphericalUnderactuated()):
        err = fd_jacobian_check(model, 100, 1e-6, seed)
        tol_u = 1e-12 if model.affine_in_u else 1e-6
        checks.append({"name": f"jacobian/{model.name}", "passed": err["J_lambda"] <= 1e-6 and err["J_u"] <= tol_u,
                       "errors": err, "tolerance_J_u": tol_u})
    for name, rep in decay_runs():
        checks.append({"name": name, **rep.to_dict()})
    fields_ = [("strip5", solve_laplace(strip_environment(5))),
               ("box5x5", solve_laplace(box_environment((5, 5), target=(2, 2))))]
    rng = np.random.default_rng(seed)
    for i in range(random_grids):
        fields_.append((f"random{i:02d}", solve_laplace(random_obstacle_grid(rng))))
    for name, fld in fields_:
        rep = field_sanity(fld)
        d = rep.to_dict()
        d.pop("spurious_cells")
        d.pop("descent_failures")
        checks.append({"name": f"field/{name}", **d})
    return {"seed": seed, "checks": checks, "passed": all(c["passed"] for c in checks)}
