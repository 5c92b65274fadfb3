import math

import numpy as np
import pytest

from hpfnav.controller import ControlBox, ControllerGains
from hpfnav.field import box_environment, solve_laplace
from hpfnav.guidance import FrozenReference, HPFReference, LineReference
from hpfnav.models import FixedWing, SphericalRedundant
from hpfnav.sim import (
    FREEZE_LOCAL,
    FREEZE_REFERENCE,
    SLAVE_LOCAL,
    Capture,
    JointState,
    NoiseSpec,
    Scenario,
    TrajectoryLog,
    run,
    settling_time,
    step,
)
from hpfnav.sim.compliance import MatchError, matched_initial_state, polyline_distance

SR = SphericalRedundant()


def frozen(dt, gains=ControllerGains(0.3, 0.2), t_final=4.0, **kw):
    return Scenario(SR, gains, FrozenReference([1, 0.5, 0.2]),
                    JointState.make([0, 0, 0], [0.3, 0.5, 0.2], np.zeros(6)),
                    dt=dt, t_final=t_final, mode=FREEZE_REFERENCE, **kw)


def test_equilibrium_is_fixed():
    """Matched state under a constant reference: every error stays zero."""
    sc = frozen(0.05)
    sc = sc.with_(initial=matched_initial_state(sc))
    tl = run(sc)
    assert np.max(tl["E_p"]) < 1e-20 and np.max(tl["E_lambda"]) < 1e-20
    np.testing.assert_allclose(tl.controls()[-1], sc.initial.u, atol=1e-14)


def test_rk4_order():
    """Errors against a fine reference shrink 16x per halving (single substep per step)."""
    ref = run(frozen(0.4 / 64)).data[-1, 1:13]
    errs = []
    for dt in (0.4, 0.2, 0.1):
        tl = run(frozen(dt))
        assert tl.summary["substeps"] == len(tl) - 1
        errs.append(np.linalg.norm(tl.data[-1, 1:13] - ref))
    for a, b in zip(errs, errs[1:]):
        assert 4.0 <= a / b <= 64.0


def test_step_matches_run():
    sc = frozen(0.1)
    s1 = step(sc, sc.initial)
    np.testing.assert_array_equal(run(sc.with_(t_final=0.1)).data[-1, 1:4], s1.P)
    assert s1.t == pytest.approx(0.1)


def test_noise_reproducible_and_seed_dependent():
    a = frozen(0.05, noise=NoiseSpec(0.5, seed=3))
    b = frozen(0.05, noise=NoiseSpec(0.5, seed=4))
    assert run(a).to_csv() == run(a).to_csv()
    assert run(a).to_csv() != run(b).to_csv()


def test_csv_round_trip(tmp_path):
    tl = run(frozen(0.1, t_final=1.0))
    csv_path, summary_path = tl.write(tmp_path / "log.csv")
    back = TrajectoryLog.read(csv_path)
    np.testing.assert_array_equal(back.data, tl.data)
    assert back.columns == tl.columns and back.summary["model"] == "spherical_redundant"
    assert summary_path.name == "log.summary.json"


def test_box_containment():
    box = ControlBox.symmetric(0.1, 6)
    tl = run(frozen(0.05, box=box, gains=ControllerGains(2, 1)))
    U = tl.controls()
    assert np.all(U <= 0.1) and np.all(U >= -0.1)
    assert np.isclose(np.max(np.abs(U)), 0.1)


def test_freeze_local_and_slave_modes():
    tl = run(frozen(0.05, t_final=1.0).with_(mode=FREEZE_LOCAL))
    np.testing.assert_array_equal(tl.positions()[-1], [0, 0, 0])
    assert np.all(np.diff(tl["E_lambda"]) <= 1e-15)
    tl = run(frozen(0.05, t_final=1.0).with_(mode=SLAVE_LOCAL))
    np.testing.assert_array_equal(tl["E_lambda"], 0.0)
    assert tl["E_p"][-1] < tl["E_p"][0]


def test_capture_and_left_field():
    env = box_environment((12, 12), target=(8, 8))
    ref = HPFReference(solve_laplace(env), altitude=2.0)
    target = ref.target_position()
    start = JointState.make([3, 3, 2], [0.0, math.pi / 2, 0.0], np.zeros(6))
    sc = Scenario(SR, ControllerGains(2, 1), ref, start, dt=0.02, t_final=40.0,
                  capture=Capture(target, 2.0))
    tl = run(sc)
    assert tl.summary["termination"] == "captured"
    assert np.linalg.norm(tl.positions()[-1] - target) < 2.0
    away = JointState.make([1.5, 5, 2], [6.0, math.pi / 2, math.pi], np.zeros(6))
    assert run(sc.with_(initial=away)).summary["termination"] == "left_field"


def test_fixed_wing_from_rest():
    """Fixed-wing may start at v = 0 thanks to the v_floor guard."""
    ref = LineReference([1, 0, 0], [0, 2, 2], capture_gain=0.2)
    sc = Scenario(FixedWing(g=1.0), ControllerGains(2, 1), ref,
                  JointState.make([0, 0, 0], [0, 0, math.pi / 4], [0, 1, 0]), dt=0.01, t_final=2.0)
    tl = run(sc)
    assert np.all(np.isfinite(tl.data))


def test_matched_initial_outside_box():
    """Level trim needs F_N = g, beyond a unit box."""
    sc = Scenario(FixedWing(g=9.81), ControllerGains(), FrozenReference([1, 0, 0]),
                  JointState.make([0, 0, 0], [1, 0, 0], [0, 0, 0]), box=ControlBox.symmetric(1.0, 3))
    with pytest.raises(MatchError):
        matched_initial_state(sc)
    u = matched_initial_state(sc.with_(box=None)).u
    np.testing.assert_allclose(u, [0, 9.81, 0], atol=1e-12)


def test_settling_time_and_polyline():
    t = np.arange(6.0)
    v = np.array([0, 0.5, 0.99, 1.2, 1.0, 1.01])
    assert settling_time(t, v, 1.0, 0.02) == 4.0
    assert settling_time(t, np.zeros(6), 1.0, 0.02) is None
    d = polyline_distance([[0.5, 1.0], [3, 0]], [[0, 0], [1, 0], [1, 1]])
    np.testing.assert_allclose(d, [0.5, 2.0])


def test_scenario_validation():
    with pytest.raises(ValueError):
        frozen(0.0)
    with pytest.raises(ValueError):
        frozen(0.1, box=ControlBox.symmetric(1.0, 3))
    with pytest.raises(ValueError):
        Scenario(SR, ControllerGains(), FrozenReference([1, 0, 0]),
                 JointState.make([0, 0, 0], [0, 0, 0], np.zeros(6)), box=ControlBox.symmetric(1.0, 6),
                 ).with_(initial=JointState.make([0, 0, 0], [0, 0, 0], np.full(6, 2.0)))
