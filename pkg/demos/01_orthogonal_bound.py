"""
Three mutually orthogonal observables
=====================================

How close can a jointly measurable triple get to sigma_z, sigma_y, sigma_x?
"""

import math

import numpy as np

from jmbounds import (
    ObjectiveKind,
    Triple,
    analytic_orthogonal_bound,
    build_povm_orthogonal,
    delta_total,
    is_rank_one,
    jm_check_triple,
    solve_lower_bound,
)
from jmbounds.scenarios import triad

# The sharp targets themselves are far from compatible.
a, b, c = triad("orthogonal")
print("sharp triple lhs:", jm_check_triple(Triple(a, b, c)).lhs, "(compatible iff <= 4)")

# Shrinking all three to length 1/sqrt(3) lands exactly on the boundary.
s = 1 / math.sqrt(3)
report = jm_check_triple(Triple(s * a, s * b, s * c))
print("shrunk triple margin:", report.margin)

# Closed form of the bound and the point where it is attained.
ab = analytic_orthogonal_bound()
print(f"analytic bound {ab.value:.6f} at k={ab.k}, varphi={ab.varphi:.4f}, phi={ab.phi:.4f}")

# The penalty solver finds the same thing from scratch.
res = solve_lower_bound((a, b, c), ObjectiveKind("orthogonal"))
print(f"solver bound   {res.value:.6f} after {res.evals} evaluations")
print("argmin lengths:", np.round([np.linalg.norm(v) for v in res.argmin], 6))

# Each term contributes a third of the total.
print("per-term:", np.round(delta_total(a, b, c, *res.argmin).terms(), 6))

# At the optimum every joint outcome is a rank-1 effect of weight 1/4,
# so a single pulse plus detection measures it.
povm = build_povm_orthogonal(res.argmin)
print("all outcomes rank-1:", all(is_rank_one(e) for e in povm.outcomes.values()))
