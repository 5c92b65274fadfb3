"""
Kinematic versus dynamic paths
==============================

When the vehicle starts with zero velocity and rate errors, its flown path
follows the field's descent path closely. A mismatched start does not.
"""

import os
from pathlib import Path

from hpfnav.plot import plot_heatmap
from hpfnav.scenario import load_scenario
from hpfnav.sim import run_compliance

out = Path(os.environ.get("HPFNAV_OUTPUT_DIR", "demo_output"))
out.mkdir(parents=True, exist_ok=True)

ls = load_scenario("compliance_intensity")
fld = ls.scenario.reference.field
for matched in (True, False):
    res = run_compliance(ls.scenario, matched_initial=matched)
    tag = "matched" if matched else "mismatched"
    print(f"{tag:10s} max deviation {res.max_deviation:.3f} (cell {fld.env.spacing}), "
          f"initial lambda {res.initial.lam.round(3)}")
    svg = plot_heatmap(fld, [("kinematic", res.kinematic.points, True), ("dynamic", res.dynamic, False)],
                       title=f"{tag} start", background=fld.env.beta)
    (out / f"compliance_{tag}.svg").write_text(svg)
print("wrote", out / "compliance_matched.svg", "and", out / "compliance_mismatched.svg")
