import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hpfnav.controller import (
    BANG_BANG,
    BoxViolation,
    ControlBox,
    ControllerGains,
    apply_barrier,
    barrier_gain_bound,
    control_rate,
    local_rate_control,
    local_reference_rate,
    world_velocity_error,
)
from hpfnav.models import FixedWing, SphericalRedundant, SphericalUnderactuated

R2 = math.sqrt(2) / 2
FW = FixedWing(M=1.0, g=0.0)
# lam=(1,0,0), u=(0,2,0): J_lambda^T permutes F_p=(1,1,3) to lam_dot_r=(1,3,1),
# F=(0,2,0) so lam_dot_e=(1,1,1); with K_lambda=2 that needs P_dot_r=(1.5,0.5,1.5)
EXAMPLE = ((1.0, 0.0, 0.0), (0.0, 2.0, 0.0), (1.5, 0.5, 1.5))


def test_gains_positive():
    with pytest.raises(ValueError, match="K_u"):
        ControllerGains(K_u=0)
    with pytest.raises(ValueError, match="K_lambda"):
        ControllerGains(K_lambda=-1)


class TestWorldError:
    def test_zero(self):
        F_p, e = world_velocity_error([1, 2, 3], [1, 2, 3], 2.0)
        np.testing.assert_array_equal(F_p, 0.0)

    def test_scaling(self):
        np.testing.assert_array_equal(world_velocity_error([1, 0, 0], [0, 0, 0], 2.0)[0], [2, 0, 0])

    def test_fixed_wing_heading(self):
        P_dot = FW.G([1, 0, math.pi / 4])
        F_p, _ = world_velocity_error([1, 0, 0], P_dot, 2.0)
        np.testing.assert_allclose(F_p, [2 * (1 - R2), -2 * R2, 0], atol=1e-15)


class TestLocalReference:
    def test_examples(self):
        np.testing.assert_array_equal(local_reference_rate(FW, [1, 0, 0], [0, 0, 0]), 0.0)
        np.testing.assert_allclose(local_reference_rate(FW, [1, 0, 0], [1, 0, 0]), [1, 0, 0], atol=1e-15)

    def test_spherical_at_rest(self):
        r = local_reference_rate(SphericalRedundant(), [0.0, 1.0, 0.5], [0.3, -0.2, 0.7])
        assert r[0] != 0 and np.all(r[1:] == 0)


class TestControlRate:
    def test_worked_example(self):
        lam, u, Pr = EXAMPLE
        cr = control_rate(FW, ControllerGains(2.0, 1.0), lam, u, Pr)
        np.testing.assert_allclose(cr.lam_dot_e, [1, 1, 1], atol=1e-15)
        np.testing.assert_allclose(cr.u_dot, [1, 1, 2], atol=1e-15)

    def test_perfect_tracking(self):
        m = SphericalRedundant()
        lam = np.array([1.0, 0.8, 0.3])
        cr = control_rate(m, ControllerGains(), lam, np.zeros(6), m.G(lam))
        np.testing.assert_array_equal(cr.u_dot, 0.0)

    def test_underactuated_cancellation(self):
        m = SphericalUnderactuated()
        a = 0.37
        u_dot = local_rate_control(m, ControllerGains(), [1, 0.5, 0.5], [0, 0], [0, a, -a])
        np.testing.assert_allclose(u_dot, [0, 0], atol=1e-16)

    @given(st.floats(0.1, 10))
    def test_linear_in_K_u(self, k):
        lam, u, Pr = EXAMPLE
        a = control_rate(FW, ControllerGains(2.0, 1.0), lam, u, Pr).u_dot
        b = control_rate(FW, ControllerGains(2.0, k), lam, u, Pr).u_dot
        np.testing.assert_allclose(b, k * a, rtol=1e-13)


class TestBarrier:
    box = ControlBox.symmetric(1.0, 3)

    def test_interior(self):
        np.testing.assert_array_equal(apply_barrier(self.box, [0, 0.5, -0.5], [1, -2, 3]), [1, -2, 3])

    def test_outward_zeroed(self):
        np.testing.assert_array_equal(apply_barrier(self.box, [1, 0, 0], [0.3, 0, 0]), [0, 0, 0])

    def test_inward_kept(self):
        np.testing.assert_array_equal(apply_barrier(self.box, [-1, 0, 0], [0.3, 0, 0]), [0.3, 0, 0])

    def test_outside(self):
        with pytest.raises(BoxViolation):
            apply_barrier(self.box, [1.5, 0, 0], [0, 0, 0])

    def test_none_and_bang_bang(self):
        np.testing.assert_array_equal(apply_barrier(None, [9, 9, 9], [1, 1, 1]), [1, 1, 1])
        bb = ControlBox.symmetric(1.0, 3, mode=BANG_BANG, gain=4.0)
        np.testing.assert_array_equal(apply_barrier(bb, [1, -1, 0], [0.3, 0.3, 0.3]), [-3.7, 4.3, 0.3])

    def test_bad_box(self):
        with pytest.raises(ValueError):
            ControlBox([0, 1], [0, 2])


class TestGainBound:
    def test_zero_error(self):
        m = SphericalRedundant()
        lam = np.array([1.0, 0.4, 0.2])
        assert barrier_gain_bound(m, ControllerGains(), [(lam, np.zeros(6), m.G(lam))]) == 0.0

    def test_example(self):
        assert barrier_gain_bound(FW, ControllerGains(2.0, 1.0), [EXAMPLE]) == pytest.approx(4.0)
        assert barrier_gain_bound(FW, ControllerGains(2.0, 2.0), [EXAMPLE]) == pytest.approx(8.0)

    def test_empty(self):
        with pytest.raises(ValueError):
            barrier_gain_bound(FW, ControllerGains(), [])
