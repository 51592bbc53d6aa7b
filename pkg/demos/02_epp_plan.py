"""
Purifying encoded Bell pairs
============================

Physical 5-to-1 purification first, then the two logical schemes.  Scheme A
encodes to level k and purifies; scheme B interleaves the two.
"""

# %%
from ftbell import epp as E

eps = E.EPS0_PRIME
for m in range(3):
    print(f"m={m} physical rounds: sigma6 = {E.sigma6_after_rounds(m, eps):.3f}")

# %%
# how many logical rounds until the infidelity stops improving
for scheme, fn in (("A", E.scheme_a_recursions), ("B", E.scheme_b_recursions)):
    for k in (2, 4, 6):
        plan = fn(k, E.sigma6_after_rounds(0, eps), eps, 0)
        print(f"scheme {scheme} k={k}: l'={plan.l_prime} l''={plan.l_doubleprime}")

# %%
# the raw-ebit infidelity each scheme tolerates
print("threshold A: %.4f" % E.infidelity_threshold("A", 3))
print("threshold B: %.4f" % E.infidelity_threshold("B"))

# %%
lo, hi = E.C_fixed_points()
print(f"C recursion fixed points {lo:.1f} (stable) and {hi:.3g}")
