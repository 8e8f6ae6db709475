"""
Error bounds and convergence time
=================================

The tracking bound combines a Lipschitz constant, the size of the payoff at
the origin and the learning-rate tail. The stability envelope adds an
exponentially decaying term, a tolerance and a ``b^3`` dither bias. The
numbers below come from hand-picked constants so they can be checked by eye.
"""

import math

import numpy as np

from nashseek import (BoundConstants, convergence_time, corollary2_bound, fit_stability_envelope,
                      stability_envelope, theorem1_bound)

# %%
const = BoundConstants(L=1.0, C0=1.0, T=1.0, r0_norm=1.0)
print("C_T =", const.C_T, "(1 + 2e =", 1 + 2 * math.e, ")")
tb = theorem1_bound(const, lambda_sq_tail=0.01, lambda_edge=0.1, delta_sup=0.0)
print("tracking bound:", tb.value)

# %%
print("envelope at t=4:", stability_envelope(2.0, 0.5, 10.0, 4.0, 0.01, 0.9))
ct = convergence_time(10.0, 2.0, 0.5, 0.1)
print("time to reach eps=0.1:", ct.time, "= 2 ln 200 =", 2 * math.log(200))
print("combined:", corollary2_bound(2.0, 0.5, 10.0, 4.0, 0.01, 0.9, const.C_T, 1.0, 0.1, 0.01, 0.0).total)

# %%
# The envelope constants can be recovered from a gap curve.
t = np.linspace(0, 40, 2001)
fit = fit_stability_envelope(t, 5 * np.exp(-0.3 * t) + 0.1)
print(f"fitted mbar={fit.mbar:.4f}, floor={fit.floor:.4f}, Mbar*Delta0={fit.Mbar * fit.Delta0:.3f}")
