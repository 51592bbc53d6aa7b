"""
Level-1 logical Bell pairs by Monte Carlo
=========================================

Stratified fault sampling on the two level-1 circuits, next to the analytic
band where it applies.
"""

# %%
from ftbell import epp as E
from ftbell.bounds import direct_encoding_ebit_bounds
from ftbell.framesim import logical_error_rate
from ftbell.gadgets import NoiseModel, get_gadget

eps = 2e-4
s6 = E.sigma6_after_rounds(2, eps)
noise = NoiseModel(eps, eps6=s6 * eps)

# %%
rate, (lo, hi) = logical_error_rate(get_gadget("direct-ebit"), noise, 20_000, seed=1)
band = direct_encoding_ebit_bounds(1, eps, s6)
print(f"direct encoding  {rate:.3e}  CI [{lo:.3e}, {hi:.3e}]  band [{band.lower:.3e}, {band.upper:.3e}]")

# %%
rate, (lo, hi) = logical_error_rate(get_gadget("interface-epp"), noise, 20_000, seed=1)
b = E.level1_logical_bounds(eps, s6)
print(f"interface + EPP  {rate:.3e}  CI [{lo:.3e}, {hi:.3e}]  band [{b.lower:.3e}, {b.upper:.3e}]")
