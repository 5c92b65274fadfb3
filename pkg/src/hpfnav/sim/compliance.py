"""Kinematic/dynamic trajectory compliance on a solved potential."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..controller import local_reference_rate, world_velocity_error
from ..field import DescentPath, descend
from ..guidance import HPFReference
from .core import JointState, Scenario, run
from .log import TrajectoryLog


class MatchError(ValueError):
    """Matched initial state could not be constructed."""


@dataclass(frozen=True)
class ComplianceResult:
    kinematic: DescentPath
    dynamic: np.ndarray          # dynamic path in the field's coordinates
    max_deviation: float
    log: TrajectoryLog
    initial: JointState
    matched: bool


def matched_initial_state(sc: Scenario, tol: float = 1e-9) -> JointState:
    """Initial (lam, u) with P' = P'_r(P0) and lam' = lam'_r(0).

    The local state comes from the model's closed-form inverse of G; the
    control from the model's exact trim when it has one, otherwise from a
    least-squares solve through the J_u pseudo-inverse (exact for models
    affine in u).
    """
    m = sc.model
    P0 = sc.initial.P
    Pdr = sc.reference.velocity(P0)
    lam = m.local_state_for_velocity(Pdr)
    F_p, _ = world_velocity_error(Pdr, m.G(lam), sc.gains.K_lambda)
    lam_dot_r = local_reference_rate(m, lam, F_p)
    if hasattr(m, "trim_control"):
        u = m.trim_control(lam, lam_dot_r)
    else:
        u0 = np.zeros(m.n_u)
        Ju = m.J_u(lam, u0)
        u = u0 + np.linalg.pinv(Ju) @ (lam_dot_r - m.F(lam, u0))
    res = float(np.linalg.norm(m.F(lam, u) - lam_dot_r))
    if res > tol:
        raise MatchError(f"matched-initial control solve left residual {res:.3e}")
    if sc.box is not None:
        if not sc.box.contains(u):
            raise MatchError(f"matched-initial control {u.tolist()} lies outside the control box")
    return JointState.make(P0, lam, u, sc.initial.t)


def polyline_distance(points, poly) -> np.ndarray:
    """Distance from each point to the nearest point of a polyline."""
    points = np.asarray(points, dtype=float)
    poly = np.asarray(poly, dtype=float)
    if len(poly) == 1:
        return np.linalg.norm(points - poly[0], axis=1)
    a = poly[:-1]
    d = poly[1:] - a
    dd = np.sum(d * d, axis=1)
    dd[dd == 0] = 1.0
    out = np.empty(len(points))
    for i, p in enumerate(points):
        s = np.clip(np.sum((p - a) * d, axis=1) / dd, 0.0, 1.0)
        out[i] = float(np.min(np.linalg.norm(a + s[:, None] * d - p, axis=1)))
    return out


def run_compliance(sc: Scenario, matched_initial: bool = True, step: float | None = None) -> ComplianceResult:
    """Fly ``sc`` and compare the flown path with the descent path of its field.

    Comparison happens in the field's own coordinates (x, y for a 2-D
    field flown at altitude). The deviation is the largest distance from a
    logged dynamic position to the kinematic polyline.
    """
    ref = sc.reference
    if not isinstance(ref, HPFReference):
        raise ValueError("compliance needs an HPF reference")
    nd = ref.field.ndim
    initial = matched_initial_state(sc) if matched_initial else sc.initial
    flown = sc.with_(initial=initial)
    tl = run(flown)
    kin = descend(ref.field, initial.P[:nd], step=step, radius=ref.field.env.spacing)
    dyn = tl.positions()[:, :nd]
    dev = polyline_distance(dyn, kin.points)
    return ComplianceResult(kin, dyn, float(np.max(dev)), tl, initial, matched_initial)
