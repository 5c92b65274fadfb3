"""
Spherical vehicle: target capture, saturation, spiral and noise
===============================================================

The redundant spherical model flies a potential field to (2, 2, 2); the
same run under a control box; an outward spiral at fixed altitude; a noisy
run; and the underactuated model, which stalls short of the target.
"""

import os
from pathlib import Path

import numpy as np

from hpfnav.plot import plot_log
from hpfnav.scenario import load_scenario
from hpfnav.sim import run

out = Path(os.environ.get("HPFNAV_OUTPUT_DIR", "demo_output"))
out.mkdir(parents=True, exist_ok=True)

for name in ("spherical_target", "spherical_cruise", "spherical_constrained",
             "spherical_noise", "spherical_underactuated"):
    sc = load_scenario(name).scenario
    tl = run(sc)
    s = tl.summary
    print(f"{name:24s} {s['termination']:8s} t={s['t_end']:6.2f}  final distance {s['final_distance']:.3f}  "
          f"max|u| {max(s['max_abs_u']):.3f}")
    (out / f"{name}.xyz.svg").write_text(plot_log(tl, "xyz"))

# %%
# The spiral reference: count revolutions once the altitude has settled.
sc = load_scenario("spherical_spiral").scenario
tl = run(sc)
z_ok = np.abs(tl["z"] - 2.0) < 0.05
first = int(np.argmax(z_ok))
print(f"spiral: {sc.reference.revolutions(tl.positions()[first:]):.2f} revolutions at altitude, "
      f"max|u| {np.max(np.abs(tl.controls())):.3f} (box {sc.box.upper[0]})")
(out / "spherical_spiral.xy.svg").write_text(plot_log(tl, "xy"))
print("wrote plots to", out)
