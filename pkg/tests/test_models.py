import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hpfnav.diagnostics import fd_jacobian_check
from hpfnav.models import (
    FixedWing,
    SingularityError,
    SphericalRedundant,
    SphericalUnderactuated,
    eval_F,
    eval_G,
    eval_J_lambda,
    eval_J_u,
    forces_from_physical,
    make_model,
    physical_controls,
)

B_REDUNDANT = np.array([[1, 0, 0, 1, 0, 0], [0, 1, 1, 0, 1, 0], [0, 1, 0, 1, 0, 1]], dtype=float)
MODELS = [FixedWing(g=1.0), SphericalRedundant(), SphericalUnderactuated()]


class TestG:
    def test_fixed_wing(self):
        m = FixedWing()
        np.testing.assert_allclose(eval_G(m, [1, 0, 0]), [1, 0, 0], atol=1e-15)
        np.testing.assert_allclose(eval_G(m, [1, 0, math.pi / 2]), [0, 1, 0], atol=1e-15)

    def test_spherical(self):
        np.testing.assert_allclose(eval_G(SphericalRedundant(), [1, math.pi / 2, 0]), [1, 0, 0], atol=1e-15)

    def test_literal_flag_changes_x_row(self):
        lit = SphericalRedundant(literal_kinematics=True)
        np.testing.assert_allclose(eval_G(lit, [1, math.pi / 2, 0]), [0, 0, 0], atol=1e-15)


class TestF:
    def test_level_trim(self):
        m = FixedWing(M=1.0)
        for psi in (0.0, 1.0, -2.5):
            np.testing.assert_allclose(eval_F(m, [1, 0, psi], [0, m.g, 0]), 0.0, atol=1e-15)

    def test_spherical_zero(self):
        np.testing.assert_array_equal(eval_F(SphericalRedundant(), [1, 0.3, 0.2], np.zeros(6)), 0.0)

    def test_underactuated_shared_input(self):
        np.testing.assert_allclose(eval_F(SphericalUnderactuated(), [1, 0.3, 0.2], [1, 0.5]), [1, 0.5, 0.5])

    def test_singularity(self):
        m = FixedWing(guard="raise")
        with pytest.raises(SingularityError, match="row"):
            eval_F(m, [1e-6, 0, 0], [0, 1, 0])
        # floor guard evaluates the denominator at v_floor instead
        assert np.all(np.isfinite(eval_F(FixedWing(), [0.0, 0, 0], [0, 1, 0])))

    def test_dimension_errors(self):
        with pytest.raises(ValueError):
            eval_F(SphericalRedundant(), [1, 0, 0], [1, 2])


class TestJacobians:
    def test_fixed_wing_J_lambda(self):
        np.testing.assert_allclose(eval_J_lambda(FixedWing(), [1, 0, 0]),
                                   [[1, 0, 0], [0, 0, 1], [0, 1, 0]], atol=1e-15)

    def test_fixed_wing_J_u(self):
        np.testing.assert_allclose(eval_J_u(FixedWing(M=1), [1, 0, 0], [0, 2, 0]),
                                   [[1, 0, 0], [0, 1, 0], [0, 0, 2]], atol=1e-15)

    def test_constant_J_u(self):
        np.testing.assert_array_equal(eval_J_u(SphericalRedundant(), [1, 0.1, 0.2], np.ones(6)), B_REDUNDANT)
        np.testing.assert_array_equal(eval_J_u(SphericalUnderactuated(), [1, 0.1, 0.2], [1, 1]),
                                      [[1, 0], [0, 1], [0, 1]])

    def test_spherical_at_rest(self):
        J = eval_J_lambda(SphericalRedundant(), [0.0, 0.7, -0.4])
        assert np.linalg.norm(J[:, 0]) > 0
        np.testing.assert_array_equal(J[:, 1:], 0.0)

    @pytest.mark.parametrize("model", MODELS, ids=lambda m: m.name)
    def test_finite_differences(self, model):
        rep = fd_jacobian_check(model, samples=100)
        assert rep["J_lambda"] <= 1e-6
        assert rep["J_u"] <= (1e-12 if model.affine_in_u else 1e-6)

    def test_literal_jacobian_consistent(self):
        rep = fd_jacobian_check(SphericalRedundant(literal_kinematics=True), samples=30)
        assert rep["J_lambda"] <= 1e-6

    @given(st.floats(0.2, 3), st.floats(-1.2, 1.2), st.floats(-3, 3))
    def test_eta_p_positive(self, v, gamma, psi):
        for m, lam in ((FixedWing(), [v, gamma, psi]), (SphericalRedundant(), [v, gamma + 1.6, psi])):
            J = eval_J_lambda(m, lam)
            assert np.linalg.eigvalsh(J @ J.T).min() > 0

    def test_eta_lambda(self):
        B = SphericalRedundant.B
        assert np.linalg.eigvalsh(B @ B.T).min() > 0
        Bu = SphericalUnderactuated.B
        assert np.linalg.matrix_rank(Bu @ Bu.T) == 2


class TestPhysicalControls:
    def test_vacuum(self):
        m = FixedWing(C_D=0, C_L=0)
        pc = physical_controls(m, 3.0, 4.0, 2.0)
        assert pc.thrust == pytest.approx(5.0) and pc.attack_angle == pytest.approx(math.atan2(4, 3))

    def test_gliding(self):
        m = FixedWing(C_D=0.2, C_L=0.8, rho=1.2)
        pc = physical_controls(m, -0.48, 1.92, 2.0)
        assert pc.thrust == pytest.approx(0.0, abs=1e-15) and pc.attack_angle == 0.0

    def test_worked_example(self):
        m = FixedWing(C_D=0.2, C_L=0.8, rho=1.2)
        pc = physical_controls(m, 1.0, 3.0, 2.0)
        assert pc.drag == pytest.approx(0.48) and pc.lift == pytest.approx(1.92)
        assert pc.thrust == pytest.approx(math.sqrt(3.3568))
        assert pc.large_attack_angle

    @given(st.floats(-5, 5), st.floats(-5, 5), st.floats(0, 4))
    def test_round_trip(self, FT, FN, v):
        m = FixedWing(C_D=0.3, C_L=0.9, rho=1.1)
        pc = physical_controls(m, FT, FN, v)
        back = forces_from_physical(m, pc.thrust, pc.attack_angle, v)
        np.testing.assert_allclose(back, (FT, FN), atol=1e-12)


def test_make_model():
    assert make_model("fixed_wing", g=0.0).g == 0.0
    assert make_model("spherical_underactuated").n_u == 2
    with pytest.raises(ValueError):
        make_model("helicopter")
