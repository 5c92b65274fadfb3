"""
Vehicle models and the control law
==================================

Evaluate the three kinematic models, their Jacobians and one step of the
velocity-field control law by hand.
"""

import math

import numpy as np

from hpfnav.controller import ControlBox, ControllerGains, apply_barrier, barrier_gain_bound, control_rate
from hpfnav.diagnostics import fd_jacobian_check
from hpfnav.models import FixedWing, SphericalRedundant, SphericalUnderactuated, physical_controls

fw = FixedWing(M=1.0, g=0.0)
sr = SphericalRedundant()
su = SphericalUnderactuated()

# %%
# World velocity from the local state, and its Jacobian.
print("fixed-wing G(1, 0, pi/2) =", np.round(fw.G([1, 0, math.pi / 2]), 12))
print("spherical  G(1, pi/2, 0) =", np.round(sr.G([1, math.pi / 2, 0]), 12))
print("fixed-wing J_lambda(1, 0, 0) =\n", fw.J_lambda([1, 0, 0]))

# %%
# Analytic Jacobians agree with central differences. The spherical J_u is
# constant, so its check is exact.
for m in (fw, sr, su):
    print(m.name, fd_jacobian_check(m, samples=100))

# %%
# One evaluation of the control law. With lam = (1, 0, 0), u = (0, 2, 0)
# and this reference the local rate error is (1, 1, 1), so u' = J_u^T (1, 1, 1).
cr = control_rate(fw, ControllerGains(K_lambda=2.0, K_u=1.0), [1, 0, 0], [0, 2, 0], [1.5, 0.5, 1.5])
print("lambda_dot_e =", cr.lam_dot_e, " u_dot =", cr.u_dot)

# %%
# The underactuated model drives both angles with one input. Opposite
# angle demands cancel and the controller cannot act on them.
cr = control_rate(su, ControllerGains(), [1.0, 1.0, 0.5], [0.0, 0.0], su.G([1.0, 1.3, 0.2]))
print("underactuated lambda_dot_e =", np.round(cr.lam_dot_e, 4), " u_dot =", np.round(cr.u_dot, 4))

# %%
# Box constraints: outward rates at an active bound are removed.
box = ControlBox.symmetric(1.0, 3)
print("barrier:", apply_barrier(box, [1.0, 0.0, -1.0], [0.3, 0.3, 0.3]))
print("barrier gain bound:",
      barrier_gain_bound(fw, ControllerGains(2, 1), [([1, 0, 0], [0, 2, 0], [1.5, 0.5, 1.5])]))

# %%
# Thrust and angle of attack behind the resultant forces.
pc = physical_controls(FixedWing(C_D=0.2, C_L=0.8, rho=1.2), F_T=1.0, F_N=3.0, v=2.0)
print(f"drag {pc.drag:.2f}, lift {pc.lift:.2f}, thrust {pc.thrust:.4f}, "
      f"attack angle {math.degrees(pc.attack_angle):.1f} deg")
