import math

import numpy as np
import pytest

from hpfnav.controller import ControllerGains
from hpfnav.field import OBSTACLE, TARGET, box_environment, solve_laplace, strip_environment
from hpfnav.guidance import HPFReference, LineReference
from hpfnav.models import SphericalRedundant
from hpfnav.sim import Capture, JointState, MultiScenario, Scenario, run, run_compliance, run_multi, stamp_disc

SR = SphericalRedundant()


def test_stamp_disc_spares_target_and_keep():
    env = box_environment((12, 12), target=(6, 6))
    keep = np.zeros(env.shape, dtype=bool)
    keep[5, 6] = True
    out = stamp_disc(env, [6.0, 6.0, 0.0], 1.5, keep=keep)
    assert out.cell_class[6, 6] == TARGET and out.cell_class[5, 6] != OBSTACLE
    assert out.cell_class[7, 6] == OBSTACLE and out.cell_class[3, 3] != OBSTACLE


def _agent(field, start, heading, altitude=2.0):
    ref = HPFReference(field, altitude=altitude)
    return Scenario(SR, ControllerGains(1, 1), ref,
                    JointState.make(start, [1.0, math.pi / 2, heading], np.zeros(6)),
                    dt=0.02, t_final=40.0, capture=Capture(ref.target_position(), 2 * field.env.spacing))


def test_parallel_agents_do_not_interact():
    fa = solve_laplace(box_environment((30, 30), target=(25, 5)))
    fb = solve_laplace(box_environment((30, 30), target=(25, 24)))
    ms = MultiScenario((_agent(fa, [4, 5, 2], 0.0), _agent(fb, [4, 24, 2], 0.0)))
    res = run_multi(ms)
    assert res.terminations == ["captured", "captured"]
    assert res.min_distance > 3 * ms.obstacle_radius
    assert res.resolves >= 1
    # the non-maneuvering agent never reacts: its log equals a solo run
    solo = run(ms.agents[1])
    np.testing.assert_array_equal(res.logs[1].data, solo.data)


def test_multi_validation():
    f = solve_laplace(box_environment((10, 10), target=(7, 7)))
    a = _agent(f, [2, 2, 2], 0.0)
    with pytest.raises(ValueError):
        MultiScenario((a,))
    with pytest.raises(ValueError):
        MultiScenario((a, a.with_(dt=0.01)))
    line = a.with_(reference=LineReference([1, 0, 0], [0, 0, 2]))
    with pytest.raises(ValueError):
        MultiScenario((line, a))


def test_compliance_on_strip():
    """On a 1-D field the kinematic path is the straight strip itself."""
    f = solve_laplace(strip_environment(12))
    ref = HPFReference(f, altitude=None)
    sc = Scenario(SR, ControllerGains(1, 1), ref, JointState.make([1, 0, 0], [0, math.pi / 2, 0], np.zeros(6)),
                  dt=0.02, t_final=15.0, capture=Capture(np.array([11.0, 0.0, 0.0]), 2.0))
    res = run_compliance(sc, matched_initial=True)
    assert np.allclose(res.kinematic.points[:, 1], 0.0)
    assert res.max_deviation < 1e-6
    assert res.initial.lam[0] == pytest.approx(1.0)
