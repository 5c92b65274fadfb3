"""
Numerical checks
================

Error decay under a frozen reference, field sanity on random obstacle
grids, and the combined battery that `hpfnav verify` runs.
"""

import numpy as np

from hpfnav.controller import ControllerGains
from hpfnav.diagnostics import decay_check, field_sanity, random_obstacle_grid, verification_battery
from hpfnav.field import solve_laplace
from hpfnav.guidance import FrozenReference
from hpfnav.models import SphericalRedundant
from hpfnav.sim import FREEZE_LOCAL, JointState, Scenario, run

# %%
# With position and local state held, the rate error decays at least as
# fast as exp(-2 K_u eta t), eta being the smallest eigenvalue of J_u J_u^T.
sc = Scenario(SphericalRedundant(), ControllerGains(2, 1), FrozenReference([0.6, 0.6, 0.5]),
              JointState.make([0, 0, 0], [0.2, 1.0, 0.3], np.zeros(6)), dt=0.01, t_final=5.0, mode=FREEZE_LOCAL)
rep = decay_check(run(sc))
print(f"E_lambda: fitted rate {rep.fitted_exponent:.3f} >= bound {rep.bound_exponent:.3f}, "
      f"violations {rep.violations}")

# %%
# Random bordered grids with rectangular obstacles: no discrete local
# minima, and descent reaches the target from every free cell.
rng = np.random.default_rng(0)
for _ in range(3):
    env = random_obstacle_grid(rng)
    r = field_sanity(solve_laplace(env))
    print(f"grid {env.shape}: spurious minima {r.spurious_minima}, descent success {r.descent_success:.0%}")

report = verification_battery()
print(f"battery: {sum(c['passed'] for c in report['checks'])}/{len(report['checks'])} checks pass")
