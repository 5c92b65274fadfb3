"""Virtual velocity attractor (VVA) control law and control-box barrier.

The law chains two attractors. A world-frame force pulls the vehicle
velocity toward the reference,

    F_p = K_lambda (P'_r - P'),

is pulled back to local coordinates as the local reference rate
``lam'_r = J_lambda^T F_p``, and the local rate error is pushed through the
actuation Jacobian to give the control rate

    u' = K_u J_u^T (lam'_r - F(lam, u)).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .models import VehicleModel

PROJECTION = "projection"
BANG_BANG = "bang_bang"


@dataclass(frozen=True)
class ControllerGains:
    K_lambda: float = 2.0
    K_u: float = 1.0

    def __post_init__(self):
        if not self.K_lambda > 0:
            raise ValueError(f"K_lambda > 0 required, got {self.K_lambda}")
        if not self.K_u > 0:
            raise ValueError(f"K_u > 0 required, got {self.K_u}")


class BoxViolation(ValueError):
    """Control state found strictly outside its admissible box."""


@dataclass(frozen=True, eq=False)
class ControlBox:
    """Per-component bounds ``lower <= u <= upper``; +-inf leaves a component free.

    ``gain`` is the bang-bang barrier magnitude (a number or ``"auto"``);
    the default projection mode does not use it.
    """

    lower: np.ndarray
    upper: np.ndarray
    mode: str = PROJECTION
    gain: float | str = "auto"

    def __post_init__(self):
        lo = np.array(self.lower, dtype=float)
        hi = np.array(self.upper, dtype=float)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("lower and upper bounds must be 1-D and the same length")
        bounded = np.isfinite(lo) | np.isfinite(hi)
        if np.any(~(lo[bounded] < hi[bounded])):
            raise ValueError("every bounded component needs lower < upper")
        if self.mode not in (PROJECTION, BANG_BANG):
            raise ValueError(f"unknown barrier mode {self.mode!r}")
        if not (self.gain == "auto" or (isinstance(self.gain, (int, float)) and self.gain > 0)):
            raise ValueError("barrier gain must be positive or 'auto'")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def symmetric(cls, limit: float, n: int, **kw) -> "ControlBox":
        return cls(np.full(n, -float(limit)), np.full(n, float(limit)), **kw)

    def clamp(self, u) -> np.ndarray:
        return np.minimum(np.maximum(u, self.lower), self.upper)

    def contains(self, u) -> bool:
        u = np.asarray(u)
        return bool(np.all(u >= self.lower) and np.all(u <= self.upper))


@dataclass(frozen=True)
class ControlRate:
    """Control rate plus the intermediates the law computes on the way."""

    u_dot: np.ndarray
    P_dot: np.ndarray
    P_dot_e: np.ndarray
    F_p: np.ndarray
    lam_dot: np.ndarray
    lam_dot_r: np.ndarray
    lam_dot_e: np.ndarray


def world_velocity_error(P_dot_r, P_dot, K_lambda: float):
    """Return ``(F_p, P_dot_e)`` with ``F_p = K_lambda * P_dot_e``."""
    e = np.asarray(P_dot_r, dtype=float) - np.asarray(P_dot, dtype=float)
    return K_lambda * e, e


def local_reference_rate(model: VehicleModel, lam, F_p) -> np.ndarray:
    return model.J_lambda(lam).T @ np.asarray(F_p, dtype=float)


def control_rate(model: VehicleModel, gains: ControllerGains, lam, u, P_dot_r) -> ControlRate:
    lam = np.asarray(lam, dtype=float)
    u = np.asarray(u, dtype=float)
    P_dot = model.G(lam)
    F_p, P_dot_e = world_velocity_error(P_dot_r, P_dot, gains.K_lambda)
    lam_dot_r = local_reference_rate(model, lam, F_p)
    lam_dot = model.F(lam, u)
    lam_dot_e = lam_dot_r - lam_dot
    u_dot = gains.K_u * model.J_u(lam, u).T @ lam_dot_e
    return ControlRate(u_dot, P_dot, P_dot_e, F_p, lam_dot, lam_dot_r, lam_dot_e)


def local_rate_control(model: VehicleModel, gains: ControllerGains, lam, u, lam_dot_r) -> np.ndarray:
    """Inner loop alone: ``K_u J_u^T (lam_dot_r - F(lam, u))``."""
    return gains.K_u * model.J_u(lam, u).T @ (np.asarray(lam_dot_r, float) - model.F(lam, u))


def apply_barrier(box: ControlBox | None, u, u_dot, gain: float | None = None) -> np.ndarray:
    """Constrain a control rate so ``u`` stays in ``box``.

    Projection mode zeroes each rate component that points outward from an
    active bound and leaves everything else untouched. Bang-bang mode adds
    ``-gain`` at an upper bound and ``+gain`` at a lower bound.
    """
    u_dot = np.array(u_dot, dtype=float)
    if box is None:
        return u_dot
    u = np.asarray(u, dtype=float)
    if np.any(u > box.upper) or np.any(u < box.lower):
        raise BoxViolation(f"control {u.tolist()} outside box")
    at_hi = u >= box.upper
    at_lo = u <= box.lower
    if box.mode == PROJECTION:
        u_dot[at_hi & (u_dot > 0)] = 0.0
        u_dot[at_lo & (u_dot < 0)] = 0.0
        return u_dot
    if gain is None:
        if box.gain == "auto":
            raise ValueError("bang-bang barrier needs a numeric gain (size it with barrier_gain_bound)")
        gain = float(box.gain)
    return u_dot - gain * at_hi + gain * at_lo


def barrier_gain_bound(model: VehicleModel, gains: ControllerGains, samples, safety: float = 2.0) -> float:
    """Largest component of |u'| over ``(lam, u, P_dot_r)`` samples, times ``safety``."""
    samples = list(samples)
    if not samples:
        raise ValueError("barrier_gain_bound needs at least one sample")
    worst = 0.0
    for lam, u, P_dot_r in samples:
        q = control_rate(model, gains, lam, u, P_dot_r).u_dot
        worst = max(worst, float(np.max(np.abs(q))))
    return safety * worst
