"""
Fixed-wing line following
=========================

A fixed-wing aircraft starts at rest at the origin heading 45 degrees off
the x axis and captures level flight along x at y = z = 2.
"""

import os
from pathlib import Path

import numpy as np

from hpfnav.models import physical_controls
from hpfnav.plot import plot_log
from hpfnav.scenario import load_scenario
from hpfnav.sim import run

out = Path(os.environ.get("HPFNAV_OUTPUT_DIR", "demo_output"))
out.mkdir(parents=True, exist_ok=True)

ls = load_scenario("fixedwing_line")
tl = run(ls.scenario)
s = tl.summary
print(f"speed inside 2% of v_ref from t = {s['settling_time']:.2f} s")
print("final position:", np.round(tl.positions()[-1], 3))
print("max |F_T|, |F_N|, |sigma|:", np.round(s["max_abs_u"], 3))

# %%
# Thrust magnitude and angle of attack along the run (quadratic drag and
# lift laws with the model's coefficients).
m = ls.scenario.model
T = [physical_controls(m, a, b, v).thrust for a, b, v in zip(tl["F_T"], tl["F_N"], tl["v"])]
print(f"peak thrust {max(T):.3f}")

tl.write(out / "fixedwing_line.csv")
for kind in ("xyz", "speed", "angles", "controls"):
    (out / f"fixedwing_line.{kind}.svg").write_text(plot_log(tl, kind))
print("wrote", out / "fixedwing_line.csv", "and four plots")
