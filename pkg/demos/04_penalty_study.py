"""
How the penalty factor biases the bound
=======================================

With a finite penalty factor Np the optimiser settles slightly outside the
compatible set, below the true bound. The gap shrinks like 1/Np.
"""

from jmbounds import penalty_scaling_study

study = penalty_scaling_study(Np_list=(1e1, 1e2, 1e3, 1e4))
print("     Np        gap     gap*Np")
for n, g in zip(study.Np, study.gap):
    print(f"{n:7.0f}  {g:.3e}  {g * n:.5f}")
print(f"\nlog-log slope {study.slope:.4f}, gap = {study.constant:.4f}/Np")

# The constant follows from a short calculation. Scaling the optimal triple by
# k gives distance 6 - 2 sqrt(3) k and compatibility excess 4k - 4, so the
# distance drops by sqrt(3)/2 per unit of excess. Minimising
# D0 - (sqrt(3)/2) x + Np x^2 puts the optimum at x = sqrt(3)/(4 Np), which is
# 3/(16 Np) = 0.1875/Np below the bound.
