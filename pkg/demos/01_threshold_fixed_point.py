"""
Level recursion and the accuracy threshold
==========================================

Runs the exRec bound recursion to its fixed point and shows how fast the
level-k failure bound falls once the physical rate sits below threshold.
"""

# %%
import numpy as np
from ftbell import bounds as B

system = B.iterate_system()
print("converged:", system.converged)
print("threshold eps0 = %.4e" % system.eps0)

# %%
# the fixed-point coefficients per location kind (prep0, prep+, mz, mx, cnot, ebit, nonlocal)
fp = system.fixed_point
print("A* =", np.round(np.nan_to_num(fp.A), 1))
print("D* =", np.round(np.nan_to_num(fp.D), 1))

# %%
# stability of the recursion around the fixed point
print("spectral radius %.3f" % B.jacobian_stability())

# %%
# doubly exponential decay at a quarter of the threshold
eps = system.eps0 / 4
lb = B.level_bounds(5, eps, system)
for k, (lo, hi) in enumerate(zip(lb.mu[:, 4], lb.nu[:, 4]), start=1):
    print(f"k={k}  CNOT exRec failure in [{lo:.3e}, {hi:.3e}]")
