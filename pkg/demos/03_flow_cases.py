"""
Which fault combinations fool the purification check?
=====================================================

Each error type gets a small flow network; a feasible flow is a set of bad
components whose errors slip through both parity checks.
"""

# %%
from ftbell import flow as F

nets = {t: F.build_network(t) for t in "XZ"}
sols = {t: F.enumerate_feasible(nets[t], 2) for t in "XZ"}
for t in "XZ":
    print(t, {w: len(s) for w, s in sols[t].items()})

# %%
# every solution is re-checked against capacity, conservation and parity
assert all(F.check_solution(nets[t], s) == []
           for t in "XZ" for group in sols[t].values() for s in group)

# %%
table = F.classify_cases(sols["X"], sols["Z"], nets)
for case in ("2II_X", "2II_Z", "2II_Y"):
    print(case, table["cases"][case])

# %%
# the edge list of one solution, ready for a plotting tool
print(nets["X"].to_csv(sols["X"][2][0].flow_dict()))
