"""
Magic square game: winning with noisy Bell pairs
================================================
"""

# %%
import numpy as np
from ftbell import game as G

print("classical optimum:", G.classical_optimum()["value"])
print("quantum win rates:", set(G.verify_quantum_strategy(200, seed=0).values()))

# %%
# level needed for a target failure probability, and the raw ebits it costs
deltas = np.logspace(-3, -30, 10)
for row in G.msg_curve(deltas):
    print(f"{row['delta']:.0e}  {row['method']:<14} {row['chi_lower']:.3g} .. {row['chi_upper']:.3g}")

# %%
print("smallest saving of scheme B over direct encoding: %.3f" % G.minimum_saving(np.logspace(-3, -30, 55)))

# %%
for k in (2, 5, 10):
    print(k, [round(G.spacetime_overhead(m, k)[1]) for m in G.METHODS])
