"""
Coplanar targets along the diagonal
===================================

Targets a = z, b and c tilted by +-phi in the y-z plane. The bound peaks
when the three are 120 degrees apart.
"""

import math

import numpy as np

from jmbounds import SolverConfig
from jmbounds.scenarios import SweepSpec, run_sweep

# A coarse grid keeps this quick; the test suite runs the full 41 points.
phis = np.linspace(0, math.pi / 2, 13)
rows = run_sweep(SweepSpec("coplanar", phis, diagonal_only=True), SolverConfig(restarts=2))

print(" phi     bound   D(A,D)  D(B,E)  D(C,F)  |dxe.f|")
for r in rows:
    triple = abs(np.cross(r.argmin[0], r.argmin[1]) @ r.argmin[2])
    print(f"{r.phi:5.3f}  {r.value:6.4f}  " + "  ".join(f"{t:6.4f}" for t in r.terms.terms()) + f"  {triple:.0e}")

best = max(rows, key=lambda r: r.value)
print(f"\nmaximum {best.value:.4f} at phi = {best.phi:.4f} (pi/3 = {math.pi / 3:.4f})")

# Colinear targets (phi = 0) need no compromise at all.
print("bound at phi = 0:", rows[0].value)
