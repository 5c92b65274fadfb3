"""Reference velocity fields P'_r(P).

Three static fields are provided: the normalised negative gradient of a
solved potential, a straight-line capture field, and an outward
Archimedean spiral with altitude capture. Each returns a vector of
magnitude ``v_ref`` (an HPF reference tapers to zero close to its target).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .field import PotentialField

EPS_GRAD = 1e-9


def _unit(x):
    n = float(np.linalg.norm(x))
    return x / n if n > 0 else x


@dataclass(frozen=True, eq=False)
class HPFReference:
    """Direction from ``-grad V``, magnitude ``v_ref``.

    A 2-D field drives the horizontal components of a 3-D vehicle; the
    vertical component then captures ``altitude`` with ``altitude_gain``
    (per length) and the whole vector is renormalised. Within
    ``taper_radius`` of the target (default one cell) the magnitude falls
    linearly to zero.
    """

    field: PotentialField
    v_ref: float = 1.0
    taper_radius: float | None = None
    altitude: float | None = None
    altitude_gain: float = 1.0
    eps_grad: float = EPS_GRAD

    def __post_init__(self):
        if not self.v_ref > 0:
            raise ValueError("v_ref must be positive")
        if self.field.env.target is None:
            raise ValueError("HPF reference needs a field with a target")
        if self.taper_radius is None:
            object.__setattr__(self, "taper_radius", self.field.env.spacing)

    @property
    def target(self) -> np.ndarray:
        env = self.field.env
        return env.position(env.target)

    def target_position(self, dim: int = 3) -> np.ndarray:
        t = self.target
        if len(t) == 2 and dim == 3:
            z = self.altitude if self.altitude is not None else 0.0
            return np.array([t[0], t[1], z])
        return t

    def distance_to_target(self, P) -> float:
        """Distance in the field's own coordinates (horizontal for 2-D fields)."""
        P = np.asarray(P, dtype=float)
        return float(np.linalg.norm(P[: self.field.ndim] - self.target))

    def velocity(self, P) -> np.ndarray:
        P = np.asarray(P, dtype=float)
        nd = self.field.ndim
        g = self.field.gradient_at(P[:nd])
        d = -g / max(float(np.linalg.norm(g)), self.eps_grad)
        if len(P) > nd:
            z_err = 0.0 if self.altitude is None else self.altitude - P[nd]
            full = np.zeros(len(P))
            full[:nd] = d
            full[nd] = self.altitude_gain * z_err
            d = full / max(float(np.linalg.norm(full)), self.eps_grad)
        scale = 1.0
        if self.taper_radius > 0:
            scale = min(1.0, self.distance_to_target(P) / self.taper_radius)
        return self.v_ref * scale * d


@dataclass(frozen=True, eq=False)
class LineReference:
    """Fly along ``direction`` while capturing the line through ``anchor``.

    P'_r = v_ref * unit(direction + capture_gain * e_perp), where ``e_perp``
    is the offset from P to the line, perpendicular to it.
    """

    direction: np.ndarray
    anchor: np.ndarray
    v_ref: float = 1.0
    capture_gain: float = 1.0

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=float)
        if not self.v_ref > 0:
            raise ValueError("v_ref must be positive")
        if abs(np.linalg.norm(d) - 1.0) > 1e-9:
            raise ValueError("line direction must be a unit vector")
        object.__setattr__(self, "direction", d)
        object.__setattr__(self, "anchor", np.asarray(self.anchor, dtype=float))

    def offset(self, P) -> np.ndarray:
        r = self.anchor - np.asarray(P, dtype=float)
        return r - np.dot(r, self.direction) * self.direction

    def velocity(self, P) -> np.ndarray:
        return self.v_ref * _unit(self.direction + self.capture_gain * self.offset(P))


@dataclass(frozen=True, eq=False)
class SpiralReference:
    """Outward Archimedean spiral about ``center`` (x, y) at ``altitude``.

    The horizontal part is the unit tangent of the spiral family
    r = growth * angle + const through the query point, counter-clockwise
    and outward, plus ``arm_gain`` times the radial offset to the nearest
    arm of the single spiral r = growth * angle (arms are ``2 pi growth``
    apart). The vertical part is ``capture_gain * (altitude - z)``.
    ``arm_gain = 0`` gives the pure tangent field, whose integral curves
    are all spirals of the same pitch.
    """

    center: tuple = (0.0, 0.0)
    growth: float = 0.5 / math.pi
    altitude: float = 2.0
    v_ref: float = 1.0
    capture_gain: float = 1.0
    arm_gain: float = 1.0

    def __post_init__(self):
        if not self.v_ref > 0:
            raise ValueError("v_ref must be positive")
        if not self.growth > 0:
            raise ValueError("spiral growth must be positive")
        if self.arm_gain < 0:
            raise ValueError("arm_gain must be non-negative")

    def nearest_arm(self, r, a) -> float:
        pitch = 2 * math.pi * self.growth
        base = self.growth * (a % (2 * math.pi))
        return base + pitch * round((r - base) / pitch)

    def velocity(self, P) -> np.ndarray:
        x, y, z = (float(c) for c in P)
        dx, dy = x - self.center[0], y - self.center[1]
        r = math.hypot(dx, dy)
        a = math.atan2(dy, dx)
        b = self.growth
        ca, sa = math.cos(a), math.sin(a)
        tx = b * ca - r * sa
        ty = b * sa + r * ca
        tn = math.hypot(tx, ty)
        e = self.arm_gain * (self.nearest_arm(r, a) - r)
        vec = np.array([tx / tn + e * ca, ty / tn + e * sa, self.capture_gain * (self.altitude - z)])
        return self.v_ref * _unit(vec)

    def revolutions(self, P) -> float:
        """Unwrapped turns about the centre along a sampled path ``P`` (rows)."""
        P = np.asarray(P, dtype=float)
        a = np.unwrap(np.arctan2(P[:, 1] - self.center[1], P[:, 0] - self.center[0]))
        return float((a[-1] - a[0]) / (2 * math.pi)) if len(a) else 0.0


class FrozenReference:
    """Constant reference vector, used for decay checks."""

    def __init__(self, velocity):
        self.vector = np.array(velocity, dtype=float)
        self.v_ref = float(np.linalg.norm(self.vector))

    def velocity(self, P) -> np.ndarray:
        return self.vector.copy()


def reference_velocity(ref, P) -> np.ndarray:
    return ref.velocity(P)
