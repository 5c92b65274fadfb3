"""Two-stage vehicle models: world kinematics P' = G(lam), local dynamics lam' = F(lam, u).

Each model provides analytic Jacobians ``J_lambda = dG/dlam`` and
``J_u = dF/du``; the controller only ever sees a model through these four
methods.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class SingularityError(ValueError):
    """Model evaluated where one of its rows is undefined."""


class VehicleModel:
    """Interface shared by all vehicle models."""

    name: str = ""
    lambda_names: tuple = ()
    u_names: tuple = ()
    affine_in_u: bool = False   # F = F0(lam) + B u with constant B

    @property
    def n_lambda(self) -> int:
        return len(self.lambda_names)

    @property
    def n_u(self) -> int:
        return len(self.u_names)

    def G(self, lam) -> np.ndarray:
        raise NotImplementedError

    def F(self, lam, u) -> np.ndarray:
        raise NotImplementedError

    def J_lambda(self, lam) -> np.ndarray:
        raise NotImplementedError

    def J_u(self, lam, u) -> np.ndarray:
        raise NotImplementedError

    def speed(self, lam) -> float:
        return float(lam[0])

    def local_state_for_velocity(self, velocity) -> np.ndarray:
        """Local state whose world velocity equals ``velocity``."""
        raise NotImplementedError

    def sample_state(self, rng):
        """Random admissible ``(lam, u)`` for Jacobian checks."""
        raise NotImplementedError

    def _check(self, lam, u=None):
        lam = np.asarray(lam, dtype=float)
        if lam.shape != (self.n_lambda,):
            raise ValueError(f"{self.name}: local state must have {self.n_lambda} entries")
        if u is None:
            return lam
        u = np.asarray(u, dtype=float)
        if u.shape != (self.n_u,):
            raise ValueError(f"{self.name}: control must have {self.n_u} entries")
        return lam, u


@dataclass(frozen=True)
class FixedWing(VehicleModel):
    """Point-mass fixed-wing aircraft; lam = (v, gamma, psi), u = (F_T, F_N, sigma).

    The gamma and psi rows divide by v and cos(gamma). With
    ``guard="floor"`` those denominators are evaluated at ``max(v, v_floor)``
    and ``|cos gamma| >= sin(gamma_margin)``, so states may pass through
    v = 0; ``guard="raise"`` raises instead.
    """

    M: float = 1.0
    g: float = 9.81
    C_L: float = 0.0
    C_D: float = 0.0
    rho: float = 1.225
    v_floor: float = 1e-3
    gamma_margin: float = 0.01
    guard: str = "floor"

    name = "fixed_wing"
    lambda_names = ("v", "gamma", "psi")
    u_names = ("F_T", "F_N", "sigma")

    def __post_init__(self):
        if not self.M > 0:
            raise ValueError("mass must be positive")
        if self.guard not in ("floor", "raise"):
            raise ValueError("guard must be 'floor' or 'raise'")

    def _denoms(self, v, gamma, row):
        cg = math.cos(gamma)
        if self.guard == "raise":
            if v < self.v_floor:
                raise SingularityError(f"fixed_wing: {row} row undefined for v={v:.3g} < v_floor")
            if abs(gamma) > math.pi / 2 - self.gamma_margin:
                raise SingularityError(f"fixed_wing: psi row undefined near gamma={gamma:.3g}")
            return v, cg
        floor_c = math.sin(self.gamma_margin)
        if abs(cg) < floor_c:
            cg = math.copysign(floor_c, cg)
        return max(v, self.v_floor), cg

    def G(self, lam):
        v, gamma, psi = self._check(lam)
        cg = math.cos(gamma)
        return np.array([v * cg * math.cos(psi), v * cg * math.sin(psi), v * math.sin(gamma)])

    def F(self, lam, u):
        (v, gamma, _psi), (FT, FN, sigma) = self._check(lam, u)
        ve, cg = self._denoms(v, gamma, "gamma")
        M, g = self.M, self.g
        return np.array([
            FT / M - g * math.sin(gamma),
            FN * math.cos(sigma) / (M * ve) - g * math.cos(gamma) / ve,
            FN * math.sin(sigma) / (M * ve * cg),
        ])

    def J_lambda(self, lam):
        v, gamma, psi = self._check(lam)
        cg, sg, cp, sp = math.cos(gamma), math.sin(gamma), math.cos(psi), math.sin(psi)
        return np.array([
            [cg * cp, -v * sg * cp, -v * cg * sp],
            [cg * sp, -v * sg * sp, v * cg * cp],
            [sg, v * cg, 0.0],
        ])

    def J_u(self, lam, u):
        (v, gamma, _psi), (_FT, FN, sigma) = self._check(lam, u)
        ve, cg = self._denoms(v, gamma, "gamma")
        M = self.M
        cs, ss = math.cos(sigma), math.sin(sigma)
        return np.array([
            [1.0 / M, 0.0, 0.0],
            [0.0, cs / (M * ve), -FN * ss / (M * ve)],
            [0.0, ss / (M * ve * cg), FN * cs / (M * ve * cg)],
        ])

    def local_state_for_velocity(self, velocity):
        vx, vy, vz = (float(c) for c in velocity)
        v = math.sqrt(vx * vx + vy * vy + vz * vz)
        if v == 0.0:
            return np.zeros(3)
        return np.array([v, math.asin(max(-1.0, min(1.0, vz / v))), math.atan2(vy, vx)])

    def trim_control(self, lam, lam_dot) -> np.ndarray:
        """Control producing the local rates ``lam_dot`` exactly."""
        v, gamma, _ = (float(x) for x in lam)
        ve, cg = self._denoms(v, gamma, "gamma")
        M, g = self.M, self.g
        FT = M * (lam_dot[0] + g * math.sin(gamma))
        a = M * ve * (lam_dot[1] + g * math.cos(gamma) / ve)   # FN cos(sigma)
        b = M * ve * cg * lam_dot[2]                            # FN sin(sigma)
        return np.array([FT, math.hypot(a, b), math.atan2(b, a) if (a or b) else 0.0])

    def sample_state(self, rng):
        lam = np.array([rng.uniform(0.2, 3.0), rng.uniform(-1.2, 1.2), rng.uniform(-math.pi, math.pi)])
        u = np.array([rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-math.pi, math.pi)])
        return lam, u


@dataclass(frozen=True)
class PhysicalControls:
    thrust: float
    attack_angle: float
    drag: float
    lift: float
    large_attack_angle: bool


def physical_controls(model: FixedWing, F_T: float, F_N: float, v: float,
                      attack_warn: float = math.radians(20.0)) -> PhysicalControls:
    """Recover thrust magnitude and angle of attack from the resultant forces.

    Drag and lift follow the quadratic law D = C_D rho v^2 / 2,
    L = C_L rho v^2 / 2; then F_T = T cos(eps) - D and F_N = T sin(eps) + L
    are inverted. Zero thrust reports eps = 0.
    """
    if v < 0:
        raise ValueError("speed must be non-negative")
    q = 0.5 * model.rho * v * v
    D = model.C_D * q
    L = model.C_L * q
    a = F_T + D
    b = F_N - L
    T = math.hypot(a, b)
    eps = math.atan2(b, a) if T > 0 else 0.0
    return PhysicalControls(T, eps, D, L, abs(eps) > attack_warn)


def forces_from_physical(model: FixedWing, T: float, eps: float, v: float):
    q = 0.5 * model.rho * v * v
    return T * math.cos(eps) - model.C_D * q, T * math.sin(eps) + model.C_L * q


class _Spherical(VehicleModel):
    """Shared kinematics for the spherical models; lam = (v, theta, phi).

    Default kinematics are x' = v cos(phi) sin(theta), y' = v sin(phi) sin(theta),
    z' = v cos(theta) (theta measured from the z axis). ``literal_kinematics``
    switches the x row to v cos(phi) cos(theta); the analytic Jacobian then
    follows that map instead.
    """

    lambda_names = ("v", "theta", "phi")
    literal_kinematics = False
    affine_in_u = True
    B: np.ndarray

    def G(self, lam):
        v, th, ph = self._check(lam)
        st, ct, sp, cp = math.sin(th), math.cos(th), math.sin(ph), math.cos(ph)
        x = v * cp * (ct if self.literal_kinematics else st)
        return np.array([x, v * sp * st, v * ct])

    def J_lambda(self, lam):
        v, th, ph = self._check(lam)
        st, ct, sp, cp = math.sin(th), math.cos(th), math.sin(ph), math.cos(ph)
        if self.literal_kinematics:
            row0 = [cp * ct, -v * cp * st, -v * sp * ct]
        else:
            row0 = [cp * st, v * cp * ct, -v * sp * st]
        return np.array([
            row0,
            [sp * st, v * sp * ct, v * cp * st],
            [ct, -v * st, 0.0],
        ])

    def F(self, lam, u):
        _, u = self._check(lam, u)
        return self.B @ u

    def J_u(self, lam, u):
        self._check(lam, u)
        return self.B.copy()

    def local_state_for_velocity(self, velocity):
        vx, vy, vz = (float(c) for c in velocity)
        v = math.sqrt(vx * vx + vy * vy + vz * vz)
        if v == 0.0:
            return np.zeros(3)
        th = math.acos(max(-1.0, min(1.0, vz / v)))
        if self.literal_kinematics:
            raise NotImplementedError("initial-state matching uses the consistent kinematics")
        return np.array([v, th, math.atan2(vy, vx)])

    def sample_state(self, rng):
        lam = np.array([rng.uniform(-2.0, 3.0), rng.uniform(-math.pi, math.pi), rng.uniform(-math.pi, math.pi)])
        u = rng.uniform(-2.0, 2.0, size=self.n_u)
        return lam, u


class SphericalRedundant(_Spherical):
    """Six redundant inputs: v' = u1 + u4, theta' = u2 + u3 + u5, phi' = u2 + u4 + u6."""

    name = "spherical_redundant"
    u_names = ("u1", "u2", "u3", "u4", "u5", "u6")
    B = np.array([
        [1.0, 0.0, 0.0, 1.0, 0.0, 0.0],
        [0.0, 1.0, 1.0, 0.0, 1.0, 0.0],
        [0.0, 1.0, 0.0, 1.0, 0.0, 1.0],
    ])
    B.setflags(write=False)

    def __init__(self, literal_kinematics: bool = False):
        self.literal_kinematics = bool(literal_kinematics)

    def __repr__(self):
        return f"SphericalRedundant(literal_kinematics={self.literal_kinematics})"


class SphericalUnderactuated(_Spherical):
    """Two inputs: v' = u1, theta' = phi' = u2 (one actuator drives both angles)."""

    name = "spherical_underactuated"
    u_names = ("u1", "u2")
    B = np.array([
        [1.0, 0.0],
        [0.0, 1.0],
        [0.0, 1.0],
    ])
    B.setflags(write=False)

    def __init__(self, literal_kinematics: bool = False):
        self.literal_kinematics = bool(literal_kinematics)

    def __repr__(self):
        return f"SphericalUnderactuated(literal_kinematics={self.literal_kinematics})"


MODELS = {
    "fixed_wing": FixedWing,
    "spherical_redundant": SphericalRedundant,
    "spherical_underactuated": SphericalUnderactuated,
}


def make_model(name: str, **params) -> VehicleModel:
    try:
        cls = MODELS[name]
    except KeyError:
        raise ValueError(f"unknown model {name!r}; expected one of {sorted(MODELS)}") from None
    return cls(**params)


# functional aliases
def eval_G(model: VehicleModel, lam):
    return model.G(lam)


def eval_F(model: VehicleModel, lam, u):
    return model.F(lam, u)


def eval_J_lambda(model: VehicleModel, lam):
    return model.J_lambda(lam)


def eval_J_u(model: VehicleModel, lam, u):
    return model.J_u(lam, u)
