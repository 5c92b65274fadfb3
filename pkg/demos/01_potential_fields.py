"""
Potential fields on a grid
==========================

Solve the three field variants on small environments, check them against
hand-derived values, and follow a field downhill to its target.
"""

import os
from pathlib import Path

import numpy as np

from hpfnav.field import (
    GridEnvironment,
    SolverParams,
    box_environment,
    descend,
    solve_anisotropic,
    solve_laplace,
    solve_weighted,
    strip_environment,
)
from hpfnav.field.io import load_environment
from hpfnav.plot import plot_heatmap
from hpfnav.scenario import data_dir

out = Path(os.environ.get("HPFNAV_OUTPUT_DIR", "demo_output"))
out.mkdir(parents=True, exist_ok=True)
tight = SolverParams(tolerance=1e-11)

# %%
# A 1-D strip pinned at 1 (obstacle) and 0 (target) solves to a straight line.
strip = solve_laplace(strip_environment(5), tight)
print("strip:", np.round(strip.values[:, 0], 6))

# %%
# On a bordered 5x5 grid with the target in the middle, edge neighbours of
# the target sit at 2/3 and corner cells at 5/6.
box = solve_laplace(box_environment((5, 5), target=(2, 2)), tight)
print("5x5 interior:\n", np.round(box.values[1:4, 1:4], 6))

# %%
# Fitness-weighted solve: beta scales the face conductances. A weak middle
# cell steepens the potential across it.
w = solve_weighted(strip_environment(5, weighted=True, beta=[1, 1, 0.5, 1, 1]), tight)
print("weighted strip:", np.round(w.values[:, 0], 6))

# %%
# Directional constraints: inside the masked region motion against the
# preferred direction is penalised by a low conductance. Here the gap above
# the wall is a westbound one-way lane, so the eastbound path takes the
# gap below instead.
env = box_environment((20, 14), target=(16, 7), obstacles=[(8, j) for j in range(3, 11)])
mask = np.zeros(env.shape, dtype=bool)
mask[3:14, 9:13] = True
lam = np.zeros(env.shape + (2,))
lam[..., 0] = -1.0
aniso = solve_anisotropic(env.replace(omega_mask=mask, lambda_dir=lam), 1.0, 0.05)
lap = solve_laplace(env)
print("anisotropic outer iterations:", aniso.info["outer_iterations"])

start = [3.0, 7.0]
p_lap = descend(lap, start)
p_ani = descend(aniso, start)
print(f"descent: laplace {p_lap.reason}, crosses the wall at y = {p_lap.points[np.argmin(abs(p_lap.points[:, 0] - 8)), 1]:.2f}; "
      f"anisotropic {p_ani.reason}, crosses at y = {p_ani.points[np.argmin(abs(p_ani.points[:, 0] - 8)), 1]:.2f}")
(out / "fields_anisotropic.svg").write_text(
    plot_heatmap(aniso, [("laplace", p_lap.points, True), ("anisotropic", p_ani.points, False)],
                 title="descent paths"))

# %%
# The bundled intensity map: dark pixels mean poor fitness, and the
# weighted descent path bends around dark regions.
env = load_environment(data_dir() / "intensity_map.pgm")
fw = solve_weighted(env)
start = env.position(env.start)
path = descend(fw, start)
print(f"intensity map {env.shape}: weighted descent {path.reason}, {len(path.points)} points")
(out / "fields_intensity_map.svg").write_text(
    plot_heatmap(fw, [("weighted descent", path.points, False)], title="intensity map", background=env.beta))
print("wrote", out / "fields_anisotropic.svg", "and", out / "fields_intensity_map.svg")
