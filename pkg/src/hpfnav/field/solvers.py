"""Red-black SOR solvers for the three harmonic boundary value problems.

All three share one finite-volume kernel: every cell update is the
conductance-weighted average of its face neighbours,

    V_i <- V_i + omega * (sum_f c_f V_f / sum_f c_f - V_i),

with face conductances ``c_f`` chosen per problem (1 for Laplace, the
harmonic mean of cell conductivities for the weighted and directional
problems). Faces on the outer edge of the array do not exist, which makes
the grid edge zero-flux. Sweeps visit the two parity colours in a fixed
order, so results do not depend on anything but the inputs.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .grid import OBSTACLE, START, TARGET, GridEnvironment, GridEnvironmentError
from .potential import ANISOTROPIC, LAPLACE, WEIGHTED, PotentialField, check_target

log = logging.getLogger(__name__)

BETA_ZERO = 1.0 / 255.0


class ConvergenceError(RuntimeError):
    """The iteration did not reach the requested residual."""

    def __init__(self, message, residual=None, iterations=None, flipping=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations
        self.flipping = flipping


@dataclass(frozen=True)
class SolverParams:
    tolerance: float = 1e-8
    max_iterations: int = 200_000
    relaxation: float = 1.8
    anisotropic_outer_iterations: int = 50
    anisotropic_damping: float = 0.5
    check_every: int = 5

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if not 0.0 < self.relaxation < 2.0:
            raise ValueError("relaxation factor must lie in (0, 2)")
        if not 0.0 < self.anisotropic_damping <= 1.0:
            raise ValueError("anisotropic_damping must lie in (0, 1]")
        if self.max_iterations < 0 or self.anisotropic_outer_iterations < 1 or self.check_every < 1:
            raise ValueError("iteration limits must be positive")


def _axis_slices(nd, ax):
    lo = [slice(None)] * nd
    hi = [slice(None)] * nd
    lo[ax], hi[ax] = slice(None, -1), slice(1, None)
    return tuple(lo), tuple(hi)


def _flux_sum(V, faces):
    """sum over faces of c_f * V_neighbour for every cell."""
    S = np.zeros_like(V)
    for ax, c in enumerate(faces):
        if c is None:
            continue
        lo, hi = _axis_slices(V.ndim, ax)
        S[hi] += c * V[lo]
        S[lo] += c * V[hi]
    return S


def _conductance_total(shape, faces):
    C = np.zeros(shape)
    for ax, c in enumerate(faces):
        if c is None:
            continue
        lo, hi = _axis_slices(len(shape), ax)
        C[hi] += c
        C[lo] += c
    return C


def _faces_from_cells(k, pinned=None):
    """Face conductances from cell conductivities by harmonic mean.

    A face between a pinned cell and an unpinned one takes the unpinned
    cell's conductivity; a zero on either side gives a zero face.
    """
    faces = []
    for ax in range(k.ndim):
        if k.shape[ax] < 2:
            faces.append(None)
            continue
        lo, hi = _axis_slices(k.ndim, ax)
        a, b = k[lo], k[hi]
        with np.errstate(divide="ignore", invalid="ignore"):
            hm = np.where((a > 0) & (b > 0), 2.0 * a * b / (a + b), 0.0)
        if pinned is not None:
            pa, pb = pinned[lo], pinned[hi]
            hm = np.where(pa & ~pb, b, hm)
            hm = np.where(pb & ~pa, a, hm)
        faces.append(hm)
    return faces


def sor(V, unknown, faces, params: SolverParams):
    """Relax ``V`` in place on the ``unknown`` cells until the max residual
    drops below ``params.tolerance``.

    Returns ``(residual, iterations)``. Cells with zero total conductance
    are left untouched.
    """
    C = _conductance_total(V.shape, faces)
    active = unknown & (C > 0)
    if not np.any(active):
        return 0.0, 0
    parity = np.indices(V.shape).sum(axis=0) % 2
    colours = [active & (parity == 0), active & (parity == 1)]
    inv_c = np.zeros_like(C)
    inv_c[active] = 1.0 / C[active]
    omega = params.relaxation

    def residual():
        S = _flux_sum(V, faces)
        return float(np.max(np.abs(S[active] * inv_c[active] - V[active])))

    res = residual()
    it = 0
    while res > params.tolerance:
        if it >= params.max_iterations:
            raise ConvergenceError(
                f"SOR did not converge in {it} iterations (residual {res:.3e})",
                residual=res, iterations=it)
        for mask in colours:
            S = _flux_sum(V, faces)
            V[mask] += omega * (S[mask] * inv_c[mask] - V[mask])
        it += 1
        if it % params.check_every == 0 or it >= params.max_iterations:
            res = residual()
    return res, it


def _laplace_setup(env: GridEnvironment):
    target = check_target(env)
    cc = env.cell_class
    V = np.zeros(env.shape)
    V[cc == OBSTACLE] = 1.0
    V[target] = 0.0
    unknown = (cc != OBSTACLE) & (cc != TARGET)
    if np.any(unknown):
        connected = env.connected_to(target) & unknown
        if not np.any(connected):
            raise GridEnvironmentError("target is enclosed by obstacles; no free cell reaches it")
    return V, unknown


def solve_laplace(env: GridEnvironment, params: SolverParams = SolverParams(), initial=None) -> PotentialField:
    """Harmonic potential with V=1 on obstacles and V=0 at the target."""
    V, unknown = _laplace_setup(env)
    if initial is not None:
        V[unknown] = np.asarray(initial, dtype=float)[unknown]
    else:
        V[unknown] = 0.5
    faces = [np.ones(tuple(n - 1 if a == ax else n for a, n in enumerate(env.shape)))
             if env.shape[ax] > 1 else None for ax in range(env.ndim)]
    res, it = sor(V, unknown, faces, params)
    log.debug("laplace: %d iterations, residual %.3e", it, res)
    return PotentialField(V, env, LAPLACE, residual=res, iterations=it)


def _direction_map(field: PotentialField, omega):
    """True where motion along -∇V agrees with the constraint direction."""
    g = field.node_gradients
    lam = field.env.lambda_dir
    s = -np.einsum("...i,...i->...", np.nan_to_num(g), lam)
    return (s > 0) & omega


def solve_anisotropic(
    env: GridEnvironment,
    sigma_f: float,
    sigma_b: float,
    params: SolverParams = SolverParams(),
) -> PotentialField:
    """Potential honouring directional constraints inside the masked region.

    Inside the mask the cell conductivity is ``sigma_f`` where the descent
    direction agrees with the constraint vector and ``sigma_b`` where it
    does not; elsewhere it is ``sigma_f`` (unconstrained motion counts as
    agreeing), so equal sigmas reproduce the Laplace field. The switching map is found by Picard
    iteration: solve with frozen conductivities, re-evaluate the map,
    blend conductivities toward it with ``params.anisotropic_damping``, and
    repeat. Once the map stops changing the exact (undamped) conductivities
    are applied and the map is confirmed against that final solve.
    """
    if not (sigma_f > 0 and sigma_b > 0):
        raise ValueError("sigma_f and sigma_b must be positive")
    base = solve_laplace(env, params)
    sig = (float(sigma_f), float(sigma_b))
    if env.omega_mask is None or not np.any(env.omega_mask & ~env.obstacle):
        return PotentialField(base.values, env, ANISOTROPIC, base.residual, base.iterations, sig)

    V, unknown = _laplace_setup(env)
    pinned = ~unknown
    omega = env.omega_mask & unknown
    field = base
    k = np.full(env.shape, sig[0])
    dmap = _direction_map(field, omega)
    total_it = base.iterations
    damping = params.anisotropic_damping
    history = [dmap]
    exact = False
    for outer in range(params.anisotropic_outer_iterations):
        target_k = np.where(omega, np.where(dmap, sig[0], sig[1]), sig[0])
        k = target_k if exact else (1.0 - damping) * k + damping * target_k
        faces = _faces_from_cells(k, pinned)
        Vn = np.array(field.values)
        res, it = sor(Vn, unknown, faces, params)
        total_it += it
        field = PotentialField(Vn, env, ANISOTROPIC, res, total_it, sig)
        new_map = _direction_map(field, omega)
        unchanged = np.array_equal(new_map, dmap)
        log.debug("anisotropic outer %d: %d flips, exact=%s", outer, int(np.sum(new_map != dmap)), exact)
        if unchanged and exact:
            field.info["outer_iterations"] = outer + 1
            field.info["forward_cells"] = int(np.sum(new_map))
            return field
        exact = unchanged
        dmap = new_map
        history.append(dmap)
    flips = np.zeros(env.shape, dtype=bool)
    for a, b in zip(history[-4:], history[-3:]):
        flips |= a != b
    raise ConvergenceError(
        f"directional conductance map still changing after {params.anisotropic_outer_iterations} outer iterations",
        residual=field.residual, iterations=total_it,
        flipping=[tuple(int(i) for i in idx) for idx in np.argwhere(flips)])


def effective_beta(env: GridEnvironment) -> np.ndarray:
    """Fitness with obstacles and sub-quantum values forced to zero."""
    beta = np.array(env.beta, dtype=float)
    beta[beta < BETA_ZERO] = 0.0
    beta[env.obstacle] = 0.0
    return beta


def solve_weighted(env: GridEnvironment, params: SolverParams = SolverParams(), initial=None) -> PotentialField:
    """Potential for div(beta grad V) = 0 with V=1 at START and V=0 at TARGET.

    The grid edge and zero-fitness cells are zero-flux. Cells not connected
    to the start/target pair are filled with 1.
    """
    target = env.target
    start = env.start
    if target is None or start is None:
        raise GridEnvironmentError("weighted problems need exactly one START and one TARGET cell")
    beta = effective_beta(env)
    if beta[start] <= 0 or beta[target] <= 0:
        raise GridEnvironmentError("START/TARGET cell has zero fitness")
    conn = env.connected_to(start, beta > 0) & (beta > 0)
    if not conn[target]:
        raise GridEnvironmentError("START and TARGET are not connected through cells with positive fitness")
    cc = env.cell_class
    pinned = (cc == START) | (cc == TARGET)
    unknown = conn & ~pinned
    V = np.ones(env.shape)
    V[target] = 0.0
    if initial is not None:
        V[unknown] = np.asarray(initial, dtype=float)[unknown]
    else:
        V[unknown] = 0.5
    faces = _faces_from_cells(beta)
    res, it = sor(V, unknown, faces, params)
    return PotentialField(V, env, WEIGHTED, residual=res, iterations=it, reachable=conn)


def solve(env: GridEnvironment, variant: str = LAPLACE, params: SolverParams = SolverParams(), **kw) -> PotentialField:
    """Dispatch on variant name."""
    if variant == LAPLACE:
        return solve_laplace(env, params, **kw)
    if variant == ANISOTROPIC:
        return solve_anisotropic(env, params=params, **kw)
    if variant == WEIGHTED:
        return solve_weighted(env, params, **kw)
    raise ValueError(f"unknown variant {variant!r}")
