import itertools

import numpy as np
import pytest
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from hypothesis import given
from hypothesis import strategies as st

from hpfnav.field import (
    BLOCKED,
    MAX_STEPS,
    OBSTACLE,
    REACHED,
    START,
    TARGET,
    ConvergenceError,
    GridEnvironment,
    GridEnvironmentError,
    QueryError,
    SolverParams,
    box_environment,
    descend,
    descend_many,
    gradients_at,
    solve_anisotropic,
    solve_laplace,
    solve_weighted,
    strip_environment,
)
from hpfnav.field.potential import values_at

TIGHT = SolverParams(tolerance=1e-11)

# frozen oracles (hand-solved, see test docstrings)
STRIP5 = [1.0, 0.75, 0.5, 0.25, 0.0]
BOX5_EDGE = 2.0 / 3.0      # 4a = 1 + 2b
BOX5_CORNER = 5.0 / 6.0    # 4b = 2 + 2a
STRIP_BETA = [1.0, 0.8, 0.5, 0.2, 0.0]


def direct_laplace(env):
    """Assemble the 5-point stencil system over unknown cells and solve it."""
    cc = env.cell_class
    unknown = np.argwhere((cc != OBSTACLE) & (cc != TARGET))
    index = {tuple(ix): k for k, ix in enumerate(unknown)}
    n = len(unknown)
    A = sp.lil_matrix((n, n))
    b = np.zeros(n)
    for k, ix in enumerate(unknown):
        for ax in range(cc.ndim):
            for s in (-1, 1):
                nb = list(ix)
                nb[ax] += s
                if not 0 <= nb[ax] < cc.shape[ax]:
                    continue   # zero-flux grid edge
                nb = tuple(nb)
                A[k, k] += 1
                if nb in index:
                    A[k, index[nb]] -= 1
                elif cc[nb] == OBSTACLE:
                    b[k] += 1.0
    x = spla.spsolve(A.tocsr(), b)
    V = np.where(cc == OBSTACLE, 1.0, 0.0)
    for k, ix in enumerate(unknown):
        V[tuple(ix)] = x[k]
    return V


class TestLaplace:
    def test_strip_is_linear(self):
        f = solve_laplace(strip_environment(5), TIGHT)
        np.testing.assert_allclose(f.values[:, 0], STRIP5, atol=1e-9)

    def test_no_unknowns(self):
        env = box_environment((3, 3), target=(1, 1))
        f = solve_laplace(env)
        assert f.iterations == 0
        assert f.values[1, 1] == 0.0 and np.all(f.values[env.obstacle] == 1.0)

    def test_box5_frozen_values(self):
        f = solve_laplace(box_environment((5, 5), target=(2, 2)), TIGHT)
        V = f.values
        for ix in [(1, 2), (2, 1), (3, 2), (2, 3)]:
            assert V[ix] == pytest.approx(BOX5_EDGE, abs=1e-9)
        for ix in [(1, 1), (1, 3), (3, 1), (3, 3)]:
            assert V[ix] == pytest.approx(BOX5_CORNER, abs=1e-9)

    def test_box5_matches_direct_solve_and_rotation(self):
        env = box_environment((5, 5), target=(2, 2))
        f = solve_laplace(env, TIGHT)
        np.testing.assert_allclose(f.values, direct_laplace(env), atol=1e-9)
        np.testing.assert_allclose(f.values, np.rot90(f.values), atol=1e-9)
        inner = f.values[1:4, 1:4]
        assert np.all((inner[inner > 0] > 0) & (inner[inner > 0] < 1))

    def test_obstacle_grid_matches_direct_solve(self):
        env = box_environment((9, 7), target=(6, 2), obstacles=[(3, 2), (3, 3), (3, 4), (5, 5)])
        f = solve_laplace(env, TIGHT)
        np.testing.assert_allclose(f.values, direct_laplace(env), atol=1e-8)

    def test_3d_matches_direct_solve(self):
        env = box_environment((6, 5, 5), target=(2, 2, 2), obstacles=[(4, 2, 2)])
        f = solve_laplace(env, TIGHT)
        np.testing.assert_allclose(f.values, direct_laplace(env), atol=1e-8)

    def test_errors(self):
        cc = np.zeros((4, 4), dtype=np.int8)
        with pytest.raises(GridEnvironmentError):
            solve_laplace(GridEnvironment(cc))
        enclosed = box_environment((5, 5), target=(2, 2), obstacles=[(1, 2), (3, 2), (2, 1), (2, 3)])
        with pytest.raises(GridEnvironmentError):
            solve_laplace(enclosed)
        with pytest.raises(ConvergenceError) as exc:
            solve_laplace(box_environment((20, 20), target=(5, 5)), SolverParams(max_iterations=3))
        assert exc.value.residual is not None

    @given(st.integers(0, 10_000))
    def test_min_max_principle(self, seed):
        rng = np.random.default_rng(seed)
        shape = (int(rng.integers(4, 12)), int(rng.integers(4, 12)))
        cc = np.zeros(shape, dtype=np.int8)
        cc[rng.random(shape) < 0.2] = OBSTACLE
        free = np.argwhere(cc == 0)
        if len(free) == 0:
            return
        cc[tuple(free[rng.integers(len(free))])] = TARGET
        env = GridEnvironment(cc)
        try:
            f = solve_laplace(env)
        except GridEnvironmentError:
            return
        tol = 10 * SolverParams().tolerance   # SOR may overshoot by the residual
        assert np.all(f.values >= -tol) and np.all(f.values <= 1 + tol)


class TestAnisotropic:
    def _env(self, omega=True, direction=(1.0, 0.0)):
        env = box_environment((10, 8), target=(7, 4), obstacles=[(4, 2), (4, 3)])
        if not omega:
            return env
        mask = np.zeros(env.shape, dtype=bool)
        mask[2:6, 1:7] = True
        lam = np.zeros(env.shape + (2,))
        lam[...] = direction
        return env.replace(omega_mask=mask, lambda_dir=lam)

    def test_empty_omega_equals_laplace(self):
        a = solve_anisotropic(self._env(omega=False), 1.0, 0.01, TIGHT)
        b = solve_laplace(self._env(omega=False), TIGHT)
        np.testing.assert_allclose(a.values, b.values, atol=1e-10)

    def test_equal_sigmas_equal_laplace(self):
        env = self._env()
        a = solve_anisotropic(env, 0.3, 0.3, TIGHT)
        b = solve_laplace(env, TIGHT)
        np.testing.assert_allclose(a.values, b.values, atol=1e-9)

    def test_strip_all_forward(self):
        env = strip_environment(7)
        mask = np.ones(env.shape, dtype=bool)
        lam = np.zeros(env.shape + (2,))
        lam[..., 0] = 1.0    # toward the target at the high index
        env = env.replace(omega_mask=mask, lambda_dir=lam)
        a = solve_anisotropic(env, 1.0, 0.01, TIGHT)
        b = solve_laplace(strip_environment(7), TIGHT)
        np.testing.assert_allclose(a.values, b.values, atol=1e-9)
        # brute-force sign check of -grad V . Lambda on the Laplace field
        g = b.node_gradients[1:-1, 0, 0]
        assert np.all(-g * 1.0 > 0)
        assert a.info["forward_cells"] == int(np.sum(mask & ~env.obstacle & (env.cell_class != TARGET)))

    def test_backward_constraint_raises_potential(self):
        env = self._env(direction=(-1.0, 0.0))
        a = solve_anisotropic(env, 1.0, 0.05, TIGHT)
        b = solve_laplace(env, TIGHT)
        assert not np.allclose(a.values, b.values)
        assert np.all(a.values >= -1e-12) and np.all(a.values <= 1 + 1e-12)


    def _lane(self, direction, rows):
        env = box_environment((20, 14), target=(16, 7), obstacles=[(8, j) for j in range(3, 11)])
        mask = np.zeros(env.shape, dtype=bool)
        mask[3:14, rows] = True
        lam = np.zeros(env.shape + (2,))
        lam[...] = direction
        return env.replace(omega_mask=mask, lambda_dir=lam)

    def test_one_way_lane_reroutes(self):
        env = self._lane((-1.0, 0.0), slice(9, 13))
        a = solve_anisotropic(env, 1.0, 0.05)
        crossing = lambda p: p.points[np.argmin(np.abs(p.points[:, 0] - 8.0)), 1]
        assert crossing(descend(solve_laplace(env), [3.0, 7.0])) > 10
        assert crossing(descend(a, [3.0, 7.0])) < 3

    def test_oscillation_reports_cells(self):
        with pytest.raises(ConvergenceError) as exc:
            solve_anisotropic(self._lane((0.0, 1.0), slice(1, 13)), 1.0, 0.05)
        assert exc.value.flipping and all(len(c) == 2 for c in exc.value.flipping)

    def test_bad_sigmas(self):
        with pytest.raises(ValueError):
            solve_anisotropic(self._env(), 1.0, 0.0)


class TestWeighted:
    def test_unit_beta_strip(self):
        f = solve_weighted(strip_environment(5, weighted=True), TIGHT)
        np.testing.assert_allclose(f.values[:, 0], STRIP5, atol=1e-9)

    def test_harmonic_mean_faces(self):
        """Faces [1, 2/3, 2/3, 1] act as series resistances [1, 1.5, 1.5, 1]."""
        env = strip_environment(5, weighted=True, beta=[1, 1, 0.5, 1, 1])
        f = solve_weighted(env, TIGHT)
        np.testing.assert_allclose(f.values[:, 0], STRIP_BETA, atol=1e-9)

    def test_unit_beta_matches_laplace_with_same_pinning(self):
        # START plays the obstacle's V = 1 role when it is the only high pin
        cc = np.zeros((9, 6), dtype=np.int8)
        cc[0, 2], cc[8, 3] = START, TARGET
        w = solve_weighted(GridEnvironment(cc), TIGHT)
        cc2 = cc.copy()
        cc2[0, 2] = OBSTACLE
        lap = solve_laplace(GridEnvironment(cc2), TIGHT)
        np.testing.assert_allclose(w.values, lap.values, atol=1e-9)

    def test_blocked_corridor(self):
        env = strip_environment(5, weighted=True, beta=[1, 1, 0, 1, 1])
        with pytest.raises(GridEnvironmentError):
            solve_weighted(env)

    def test_missing_start(self):
        with pytest.raises(GridEnvironmentError):
            solve_weighted(strip_environment(5))


class TestGradient:
    def test_linear_field(self):
        f = solve_laplace(strip_environment(5, spacing=0.5), TIGHT)
        L = 4 * 0.5
        for x in (0.5, 0.75, 1.0, 1.25, 1.5):
            g = f.gradient_at([x, 0.0])
            np.testing.assert_allclose(g, [-1 / L, 0.0], atol=1e-8)

    def test_face_midpoint_matches_flanking_difference(self):
        f = solve_laplace(strip_environment(5), TIGHT)
        fd = (f.values[2, 0] - f.values[1, 0]) / 1.0
        assert f.gradient_at([1.5, 0.0])[0] == pytest.approx(fd, abs=1e-8)

    def test_symmetric_center(self):
        f = solve_laplace(box_environment((5, 5), target=(2, 2)), TIGHT)
        assert np.linalg.norm(f.gradient_at([2.0, 2.0])) < 1e-9

    def test_errors(self):
        f = solve_laplace(box_environment((5, 5), target=(2, 2)))
        with pytest.raises(QueryError):
            f.gradient_at([10.0, 1.0])
        with pytest.raises(QueryError):
            f.gradient_at([0.0, 0.0])

    @given(st.floats(0.6, 3.4), st.floats(0.6, 3.4))
    def test_vectorised_matches_scalar(self, x, y):
        f = solve_laplace(box_environment((5, 5), target=(2, 2), obstacles=[(1, 3)]))
        g, ok = gradients_at(f, [[x, y]])
        try:
            ref = f.gradient_at([x, y])
        except QueryError:
            assert not ok[0]
            return
        assert ok[0]
        np.testing.assert_allclose(g[0], ref, atol=1e-14)

    def test_interpolant_gradient(self):
        f = solve_laplace(box_environment((6, 6), target=(2, 3)))
        X = np.array([[1.3, 2.6], [3.2, 1.7]])
        v, g = values_at(f, X, gradient=True)
        h = 1e-6
        for a in range(2):
            e = np.zeros(2)
            e[a] = h
            fd = (values_at(f, X + e) - values_at(f, X - e)) / (2 * h)
            np.testing.assert_allclose(g[:, a], fd, atol=1e-7)


class TestDescend:
    def test_start_at_target(self):
        f = solve_laplace(box_environment((5, 5), target=(2, 2)))
        p = descend(f, [2.0, 2.0])
        assert p.success and len(p.points) == 1 and p.length == 0.0

    def test_strip_straight(self):
        f = solve_laplace(strip_environment(9), TIGHT)
        p = descend(f, [1.0, 0.0], radius=0.1)
        assert p.success
        assert np.allclose(p.points[:, 1], 0.0)
        assert abs(p.length - 7.0) <= 0.25 + 1e-9

    def test_box5_every_cell(self):
        env = box_environment((5, 5), target=(2, 2))
        f = solve_laplace(env)
        for ix in np.argwhere(env.cell_class == 0):
            assert descend(f, env.position(tuple(ix))).success

    def test_start_in_obstacle(self):
        f = solve_laplace(box_environment((5, 5), target=(2, 2)))
        with pytest.raises(QueryError):
            descend(f, [0.0, 0.0])

    def test_max_steps_reported(self):
        f = solve_laplace(box_environment((30, 30), target=(25, 25)))
        assert descend(f, [2.0, 2.0], max_steps=3).reason == MAX_STEPS

    def test_rk4(self):
        f = solve_laplace(box_environment((12, 12), target=(8, 8), obstacles=[(5, 5), (5, 6)]))
        assert descend(f, [2.0, 2.0], method="rk4").success

    def test_obstacle_field(self):
        env = box_environment((20, 14), target=(16, 7), obstacles=[(8, j) for j in range(3, 12)])
        f = solve_laplace(env)
        p = descend(f, [3.0, 7.0])
        assert p.success
        assert all(not env.obstacle[env.nearest_index(q)] for q in p.points)
        V = values_at(f, p.points)
        assert np.all(np.diff(V) < 0)

    def test_batch_agrees_with_scalar(self):
        env = box_environment((16, 12), target=(12, 3), obstacles=[(6, j) for j in range(2, 9)] + [(9, 9)])
        f = solve_laplace(env)
        idx = np.argwhere(env.cell_class == 0)
        starts = env.origin + idx * env.spacing
        batch = descend_many(f, starts)
        for s, r in zip(starts, batch):
            assert descend(f, s).reason == r
        assert set(batch) == {REACHED}
        assert BLOCKED not in batch
