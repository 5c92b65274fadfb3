"""Fixed-step RK4 integration of the joint (P, lam, u) closed loop."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..controller import (
    BANG_BANG,
    ControlBox,
    ControllerGains,
    apply_barrier,
    barrier_gain_bound,
    control_rate,
)
from ..field import QueryError
from ..guidance import FrozenReference
from ..models import VehicleModel
from .log import TrajectoryLog

log = logging.getLogger(__name__)

# modes
FULL = "full"
FREEZE_REFERENCE = "freeze_reference"   # P'_r held at a constant vector
FREEZE_LOCAL = "freeze_local"           # P, lam held; only u evolves
SLAVE_LOCAL = "slave_local"             # lam' = lam'_r exactly; u not integrated
MODES = (FULL, FREEZE_REFERENCE, FREEZE_LOCAL, SLAVE_LOCAL)

# RK4 is stable on the negative real axis up to |h*lambda| ~ 2.78
STABILITY_LIMIT = 2.0
MAX_SUBSTEPS = 100_000


class DivergenceError(RuntimeError):
    """Non-finite state produced by the integrator."""


@dataclass(frozen=True)
class JointState:
    P: np.ndarray
    lam: np.ndarray
    u: np.ndarray
    t: float = 0.0

    @classmethod
    def make(cls, P, lam, u, t=0.0):
        return cls(np.array(P, dtype=float), np.array(lam, dtype=float), np.array(u, dtype=float), float(t))

    def vector(self) -> np.ndarray:
        return np.concatenate([self.P, self.lam, self.u])


@dataclass(frozen=True)
class NoiseSpec:
    """Zero-mean uniform additive noise on the control rate, per RK4 stage."""

    amplitude: np.ndarray
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "amplitude", np.atleast_1d(np.asarray(self.amplitude, dtype=float)))
        if np.any(self.amplitude < 0):
            raise ValueError("noise amplitude must be non-negative")


@dataclass(frozen=True)
class Capture:
    """Early termination when ``|P - target| < radius`` and speed < ``v_stop``."""

    target: np.ndarray
    radius: float
    v_stop: float = math.inf


@dataclass(frozen=True, eq=False)
class Scenario:
    model: VehicleModel
    gains: ControllerGains
    reference: object
    initial: JointState
    dt: float = 0.01
    t_final: float = 10.0
    box: ControlBox | None = None
    noise: NoiseSpec | None = None
    capture: Capture | None = None
    mode: str = FULL
    name: str = ""
    barrier_gain: float | None = None
    auto_gain_samples: int = 200
    v_band: float = 0.02
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.t_final >= self.dt:
            raise ValueError("t_final must be at least dt")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        st = self.initial
        if st.P.shape != (3,) or st.lam.shape != (self.model.n_lambda,) or st.u.shape != (self.model.n_u,):
            raise ValueError("initial state dimensions do not match the model")
        if self.box is not None:
            if self.box.lower.shape != (self.model.n_u,):
                raise ValueError("control box dimension does not match the model")
            if not self.box.contains(st.u):
                raise ValueError("initial control lies outside the control box")
        if self.noise is not None and self.noise.amplitude.size not in (1, self.model.n_u):
            raise ValueError("noise amplitude must be scalar or one per control")
        if self.mode in (FREEZE_REFERENCE, FREEZE_LOCAL, SLAVE_LOCAL) and not isinstance(self.reference, FrozenReference):
            object.__setattr__(self, "reference", FrozenReference(self.reference.velocity(st.P)))

    @property
    def n_steps(self) -> int:
        return int(math.floor(self.t_final / self.dt + 1e-9))

    def with_(self, **changes) -> "Scenario":
        return replace(self, **changes)


def resolve_barrier_gain(sc: Scenario) -> float | None:
    """Numeric barrier gain for bang-bang boxes (sampled bound when 'auto')."""
    box = sc.box
    if box is None:
        return None
    if box.gain != "auto":
        return float(box.gain)
    if sc.barrier_gain is not None:
        return sc.barrier_gain
    rng = np.random.default_rng(0)
    lo = np.where(np.isfinite(box.lower), box.lower, -1.0)
    hi = np.where(np.isfinite(box.upper), box.upper, 1.0)
    v_ref = getattr(sc.reference, "v_ref", 1.0)
    samples = []
    for _ in range(sc.auto_gain_samples):
        lam, _u = sc.model.sample_state(rng)
        lam[0] = abs(lam[0])
        u = rng.uniform(lo, hi)
        d = rng.normal(size=3)
        samples.append((lam, u, v_ref * d / np.linalg.norm(d)))
    return barrier_gain_bound(sc.model, sc.gains, samples)


def stable_substeps(sc: Scenario, state: JointState) -> int:
    """Number of RK4 substeps keeping h * (fast loop rate) inside the stability region."""
    Ju = sc.model.J_u(state.lam, state.u)
    Jl = sc.model.J_lambda(state.lam)
    rate = sc.gains.K_u * float(np.sum(Ju * Ju)) + sc.gains.K_lambda * float(np.sum(Jl * Jl))
    if rate <= 0:
        return 1
    n = math.ceil(sc.dt * rate / STABILITY_LIMIT - 1e-12)
    return int(min(max(n, 1), MAX_SUBSTEPS))


class _Dynamics:
    """Right-hand side of the joint ODE for one scenario."""

    def __init__(self, sc: Scenario):
        self.sc = sc
        self.m = sc.model
        self.n_l = sc.model.n_lambda
        self.gain = resolve_barrier_gain(sc) if sc.box is not None and sc.box.mode == BANG_BANG else None

    def split(self, y):
        return y[:3], y[3:3 + self.n_l], y[3 + self.n_l:]

    def __call__(self, y, noise=None):
        sc = self.sc
        P, lam, u = self.split(y)
        if sc.box is not None:
            u = sc.box.clamp(u)
        Pdr = sc.reference.velocity(P)
        cr = control_rate(self.m, sc.gains, lam, u, Pdr)
        udot = cr.u_dot if noise is None else cr.u_dot + noise
        udot = apply_barrier(sc.box, u, udot, self.gain)
        if sc.mode == FREEZE_LOCAL:
            return np.concatenate([np.zeros(3), np.zeros(self.n_l), udot])
        if sc.mode == SLAVE_LOCAL:
            return np.concatenate([cr.P_dot, cr.lam_dot_r, np.zeros_like(u)])
        return np.concatenate([cr.P_dot, cr.lam_dot, udot])


def _check_finite(y, t, dyn):
    if not np.all(np.isfinite(y)):
        P, lam, u = dyn.split(y)
        for name, arr in (("P", P), ("lambda", lam), ("u", u)):
            if not np.all(np.isfinite(arr)):
                raise DivergenceError(f"non-finite {name} at t={t:.6g}: {arr.tolist()}")


def _rk4(dyn: _Dynamics, y, h, rng, amp):
    def noise():
        if rng is None:
            return None
        return rng.uniform(-1.0, 1.0, size=dyn.sc.model.n_u) * amp

    k1 = dyn(y, noise())
    k2 = dyn(y + 0.5 * h * k1, noise())
    k3 = dyn(y + 0.5 * h * k2, noise())
    k4 = dyn(y + h * k3, noise())
    return y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def _advance(dyn: _Dynamics, state: JointState, rng=None) -> tuple[JointState, int]:
    sc = dyn.sc
    amp = sc.noise.amplitude if sc.noise is not None else None
    n = stable_substeps(sc, state)
    h = sc.dt / n
    y = state.vector()
    nl = dyn.n_l
    for _ in range(n):
        y = _rk4(dyn, y, h, rng, amp)
        if sc.box is not None:
            y[3 + nl:] = sc.box.clamp(y[3 + nl:])
    t = state.t + sc.dt
    _check_finite(y, t, dyn)
    P, lam, u = dyn.split(y)
    return JointState(P.copy(), lam.copy(), u.copy(), t), n


def step(sc: Scenario, state: JointState, rng=None) -> JointState:
    """Advance one ``dt`` (possibly in several stability-limited RK4 substeps).

    With the control box active, stage controls are clamped before use, the
    barrier acts inside every stage derivative, and ``u`` is clamped after
    each substep. ``rng`` supplies noise when the scenario has any.
    """
    if sc.noise is not None and rng is None:
        rng = np.random.default_rng(sc.noise.seed)
    return _advance(_Dynamics(sc), state, rng)[0]


def observe(sc: Scenario, state: JointState, dyn: _Dynamics | None = None) -> dict:
    """Intermediates of the control law at ``state`` (noise-free)."""
    u = sc.box.clamp(state.u) if sc.box is not None else state.u
    Pdr = sc.reference.velocity(state.P)
    cr = control_rate(sc.model, sc.gains, state.lam, u, Pdr)
    if sc.mode == SLAVE_LOCAL:
        lde = np.zeros_like(cr.lam_dot_e)
    else:
        lde = cr.lam_dot_e
    Ju = sc.model.J_u(state.lam, u)
    Jl = sc.model.J_lambda(state.lam)
    return {
        "P_dot_r": Pdr,
        "P_dot_e": cr.P_dot_e,
        "lam_dot_e": lde,
        "E_p": float(cr.P_dot_e @ cr.P_dot_e),
        "E_lambda": float(lde @ lde),
        "eta_lambda": float(np.linalg.eigvalsh(Ju @ Ju.T)[0]),
        "eta_P": float(np.linalg.eigvalsh(Jl @ Jl.T)[0]),
    }


def run(sc: Scenario, on_step=None) -> TrajectoryLog:
    """Integrate from ``sc.initial`` to ``t_final`` or to target capture."""
    dyn = _Dynamics(sc)
    rng = np.random.default_rng(sc.noise.seed) if sc.noise is not None else None
    tl = TrajectoryLog.for_model(sc.model, capacity=sc.n_steps + 1)
    state = sc.initial
    tl.append(state, observe(sc, state))
    reason = "t_final"
    substeps = 0
    for _ in range(sc.n_steps):
        try:
            state, n = _advance(dyn, state, rng)
        except QueryError as exc:
            log.info("%s: stopped at t=%.3f: %s", sc.name or "scenario", state.t, exc)
            reason = "left_field"
            break
        substeps += n
        tl.append(state, observe(sc, state))
        if on_step is not None:
            on_step(state)
        if sc.capture is not None:
            d = float(np.linalg.norm(state.P - sc.capture.target))
            if d < sc.capture.radius and abs(sc.model.speed(state.lam)) < sc.capture.v_stop:
                reason = "captured"
                break
    tl.finish()
    tl.summary.update(summarize(sc, tl, reason))
    tl.summary["substeps"] = substeps
    return tl


def settling_time(t, v, v_ref, band, window=None):
    """First time after which ``|v - v_ref| <= band * v_ref`` holds for the rest of the window."""
    if window is None:
        window = np.ones(len(t), dtype=bool)
    idx = np.flatnonzero(window)
    if idx.size == 0:
        return None
    end = idx[-1] + 1
    ok = np.abs(v[:end] - v_ref) <= band * v_ref
    bad = np.flatnonzero(~ok)
    if bad.size == 0:
        return float(t[0])
    if bad[-1] + 1 >= end:
        return None
    return float(t[bad[-1] + 1])


def summarize(sc: Scenario, tl: TrajectoryLog, reason: str) -> dict:
    t = tl["t"]
    P = tl.positions()
    v = tl[sc.model.lambda_names[0]]
    U = tl.controls()
    Pdr = tl.block("P_dot_r")
    v_ref = getattr(sc.reference, "v_ref", None)
    out = {
        "scenario": sc.name,
        "model": sc.model.name,
        "termination": reason,
        "mode": sc.mode,
        "frozen_reference": isinstance(sc.reference, FrozenReference),
        "gains": {"K_lambda": sc.gains.K_lambda, "K_u": sc.gains.K_u},
        "rows": int(len(t)),
        "t_end": float(t[-1]),
        "max_abs_u": [float(x) for x in np.max(np.abs(U), axis=0)],
        "final_position": [float(x) for x in P[-1]],
        "final_speed": float(v[-1]),
    }
    if sc.capture is not None:
        d = np.linalg.norm(P - sc.capture.target, axis=1)
        out["final_distance"] = float(d[-1])
        out["min_distance"] = float(np.min(d))
        out["captured"] = reason == "captured"
    if v_ref:
        full = np.linalg.norm(Pdr, axis=1) >= v_ref * (1.0 - 1e-6)
        # evaluation window: from the start until the reference first tapers
        tapered = np.flatnonzero(~full)
        window = np.zeros(len(t), dtype=bool)
        window[: tapered[0] if tapered.size else len(t)] = True
        ts = settling_time(t, v, v_ref, sc.v_band, window)
        out["v_ref"] = float(v_ref)
        out["settling_time"] = ts
        out["v_settled"] = bool(ts is not None and ts < t[np.flatnonzero(window)[-1]])
        out["speed_window_end"] = float(t[np.flatnonzero(window)[-1]])
    # E_lambda monotonicity where the reference direction barely moves
    El = tl["E_lambda"]
    nrm = np.linalg.norm(Pdr, axis=1)
    safe = np.where(nrm > 0, nrm, 1.0)
    dirs = Pdr / safe[:, None]
    turn = np.arccos(np.clip(np.sum(dirs[1:] * dirs[:-1], axis=1), -1.0, 1.0))
    threshold = 1e-3
    quiet = turn < threshold
    out["E_lambda_turn_threshold"] = threshold
    out["E_lambda_increase_violations"] = int(np.sum(quiet & (np.diff(El) > 1e-9)))
    return out
